export { ConfigurationError, FormatError, NumericError } from './errors.js';
export {
  ARCH_CONV_INIT, DEFAULT_TRAIN_CONFIG, TrainConfig, makeTrainConfig,
  validateTrainConfig,
} from './config.js';
export {
  CHANNELS_NAME, ChannelRecord, DATASET_FORMAT_VERSION, DatasetMetadata,
  GridInfo, METADATA_NAME, decodeChannels, encodeTargets, magnitudeProfile,
  mulberry32, prepareInput, readDataset, readMetadata, shuffled, splitIndices,
} from './dataset.js';
export {
  CONV_FILTERS, CONV_WIDTH, DENSE_WIDTH, POOL_1, POOL_2, archShapes,
  buildStartModel, modelTensors, setModelTensors,
} from './model.js';
export {
  BUNDLE_FORMAT_VERSION, Bundle, BundleTensor, MAGIC, encodeBundle,
  readBundle, validateBundle, writeBundle,
} from './bundle.js';
export {
  MAG_EPSILON, compositeLoss, gridTimes, parameterTerm, profileTerm,
  reconstructMagnitude, sinc,
} from './loss.js';
export {
  EpochEntry, TrainResult, exportTrained, trainOnDataset, trainOnRecords,
  writeLossCsv,
} from './train.js';
export { DecodedParams, decodeParams, forwardOne } from './infer.js';
