"""Acceptance gate: one test per release criterion, one verdict line each.

Every test prints "[criterion N] PASS/FAIL: <summary>" so a log scan shows
the full scoreboard. Thresholds are pinned here on purpose; loosening one
to get a green line defeats the point of the gate. The suite uses only the
peak-picking initializer and needs no trained weights.
"""

import time

import numpy as np
import pytest

from mpcprof import (
    DatasetSpec,
    EspritConfig,
    MpcParamSet,
    esprit_delays,
    estimate_initial,
    fit_tracks,
    generate_channel,
    generate_params,
    hosvd_singular_values,
    ls_amp_phase,
    predict_csi,
    profile,
    refine,
    sample_cir,
    scenario_from_params,
    select_model_order,
    steering_vector,
    synth_channel_tensor,
    synthesize_truth,
    track,
    wrap_phase,
)
from mpcprof.bench import run_bench
from mpcprof.dataset_io import ChannelRecord
from mpcprof.estimator import SearchSchedule
from mpcprof.profiler import (
    QuantizerSpec,
    default_bank,
    profiling_loss,
    reconstruct,
    to_db,
    window_error,
)
from conftest import lattice_params


def _verdict(n, ok, summary):
    print(f"\n[criterion {n}] {'PASS' if ok else 'FAIL'}: {summary}")
    assert ok, f"criterion {n}: {summary}"


def _loss_db(truth_prof, theta, config, quantizer, bank):
    recon = reconstruct(theta, config, quantizer=quantizer, bank=bank,
                        n_taps=len(truth_prof.samples))
    return to_db(profiling_loss(truth_prof, recon))


def _separated_params(rng, config, order, delay_span_ts=(0.15, 4.5),
                      min_sep_ts=1.0, amp_range=(0.1, 1.0)):
    """Random parameter set with pairwise delay separation >= min_sep_ts."""
    ts = config.sample_period
    while True:
        delays = np.sort(rng.uniform(*delay_span_ts, order)) * ts
        if order == 1 or np.min(np.diff(delays)) >= min_sep_ts * ts:
            break
    amps = rng.uniform(*amp_range, order)
    amps = amps / amps.max()
    phases = rng.uniform(0.0, 2.0 * np.pi, order)
    return MpcParamSet(delays, amps, phases)


# criterion 1 ---------------------------------------------------------------


def test_criterion_1_reconstruction_identity(config, quantizer, bank):
    rng = np.random.default_rng(101)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        order = int(rng.integers(1, 6))
        theta = lattice_params(rng, config, quantizer, order)
        direct = profile(sample_cir(theta, config, n_taps=256))
        tabled = reconstruct(theta, config, quantizer=quantizer, bank=bank,
                             n_taps=256)
        worst = max(worst, float(np.max(np.abs(direct.samples - tabled.samples))))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-6 and elapsed < 10.0
    _verdict(1, ok, f"on-grid reconstruction inf-norm {worst:.3e} "
                    f"(<= 1e-06), {elapsed:.2f} s (< 10 s), 1000 sets")


# criterion 2 ---------------------------------------------------------------


def test_criterion_2_start_accuracy(config, quantizer, bank):
    spec = DatasetSpec(n_channels=200, l_min=1, l_max=3, min_separation_ts=1.0,
                       seed=202, window=256)
    t0 = time.perf_counter()
    losses = []
    for i in range(200):
        theta, cir = generate_channel(spec, config, i)
        prof = profile(cir)
        rep = estimate_initial(prof, theta.order, config,
                               quantizer=quantizer, bank=bank)
        losses.append(rep.loss_db)
    elapsed = time.perf_counter() - t0
    median = float(np.median(losses))
    frac_35 = float(np.mean(np.asarray(losses) <= -35.0))
    ok = median <= -40.0 and frac_35 >= 0.90 and elapsed <= 300.0
    _verdict(2, ok, f"start: median {median:.2f} dB (<= -40), "
                    f"{100 * frac_35:.1f}% <= -35 dB (>= 90%), "
                    f"{elapsed:.1f} s (<= 300 s), 200 noiseless channels")


# criterion 3 ---------------------------------------------------------------


def test_criterion_3_tracking_accuracy(config, quantizer, bank):
    spec = DatasetSpec(n_channels=100, l_min=1, l_max=3, min_separation_ts=1.0,
                       delay_max_ts=4.0, seed=303, window=256)
    drift = 0.1 * config.sample_period
    n_pass = 0
    for seed in range(100):
        base = generate_params(spec, config, seed)
        scenario = scenario_from_params(base, delay_rate=drift)
        pairs = synthesize_truth(scenario, config, list(range(11)), n_taps=256)
        rep = estimate_initial(pairs[0][1], base.order, config,
                               quantizer=quantizer, bank=bank)
        prev = rep.theta_hat
        worst = -np.inf
        for t in range(1, 11):
            rep = track(prev, pairs[t][1], config, quantizer=quantizer, bank=bank)
            worst = max(worst, rep.loss_db)
            prev = rep.theta_hat
        if worst <= -35.0:
            n_pass += 1
    ok = n_pass >= 90
    _verdict(3, ok, f"tracking at 0.1 sample-period drift x 10 steps: "
                    f"{n_pass}/100 seeds kept every step <= -35 dB (>= 90)")


# criterion 4 ---------------------------------------------------------------


def test_criterion_4_latency_ordering(config):
    spec = DatasetSpec(n_channels=6, l_min=2, l_max=3, min_separation_ts=1.0,
                       seed=404, window=256)
    records = []
    for i in range(6):
        theta, cir = generate_channel(spec, config, i)
        records.append(ChannelRecord(index=i, theta=theta, cir=cir))
    report = run_bench(records, config, trials=12)
    by = {r.method: r.median_elapsed_s for r in report.rows}
    init_s = min(by["peak_start_inference"], by["nn_start_inference"])
    ok = init_s < by["profiling_tracking"] < by["profiling_start"]
    _verdict(4, ok, "latency medians: init "
                    f"{1e3 * init_s:.3f} ms < tracking "
                    f"{1e3 * by['profiling_tracking']:.3f} ms < start "
                    f"{1e3 * by['profiling_start']:.3f} ms")


# criterion 5 ---------------------------------------------------------------


def test_criterion_5_subspace_baseline(config):
    from mpcprof import synth_freq_response
    rng = np.random.default_rng(505)
    ts = config.sample_period
    max_err = 0.0
    losses = []
    for _ in range(200):
        theta = _separated_params(rng, config, 2, amp_range=(0.2, 1.0))
        y = synth_freq_response(theta, config)
        delays = esprit_delays(y, EspritConfig(model_order=2), config)
        max_err = max(max_err, float(np.max(np.abs(delays - theta.delays))))
        est = ls_amp_phase(delays, y, config)
        truth_prof = profile(sample_cir(theta, config, n_taps=256))
        est_prof = profile(sample_cir(est, config, n_taps=256))
        losses.append(to_db(profiling_loss(truth_prof, est_prof)))
    median = float(np.median(losses))
    ok = max_err <= 1e-6 * ts and median <= -40.0
    _verdict(5, ok, f"subspace two-path: max delay error {max_err:.3e} s "
                    f"(<= {1e-6 * ts:.1e}), median recon loss {median:.2f} dB "
                    f"(<= -40), 200 channels")


# criterion 6 ---------------------------------------------------------------


def test_criterion_6_noise_robustness(config, quantizer, bank):
    # identical channel draws, measured clean and at 20 dB SNR; the noisy
    # estimate is scored against the noisy profile it actually fit
    clean_spec = DatasetSpec(n_channels=200, l_min=1, l_max=3,
                             min_separation_ts=1.0, seed=606, window=256)
    noisy_spec = DatasetSpec(n_channels=200, l_min=1, l_max=3,
                             min_separation_ts=1.0, seed=606, window=256,
                             snr_db=20.0)
    clean_losses, noisy_losses = [], []
    for i in range(200):
        theta_c, cir_c = generate_channel(clean_spec, config, i)
        theta_n, cir_n = generate_channel(noisy_spec, config, i)
        assert np.array_equal(theta_c.delays, theta_n.delays)
        for cir, sink in ((cir_c, clean_losses), (cir_n, noisy_losses)):
            prof = profile(cir)
            rep = estimate_initial(prof, theta_c.order, config,
                                   quantizer=quantizer, bank=bank)
            sink.append(rep.loss_db)
    med_clean = float(np.median(clean_losses))
    med_noisy = float(np.median(noisy_losses))
    degradation = med_noisy - med_clean
    ok = degradation <= 5.0
    _verdict(6, ok, f"noise robustness at 20 dB SNR: clean median "
                    f"{med_clean:.2f} dB, noisy median {med_noisy:.2f} dB, "
                    f"degradation {degradation:.2f} dB (<= 5.0), same 200 channels")


# criterion 7 ---------------------------------------------------------------


def test_criterion_7_model_order(config):
    rng = np.random.default_rng(707)
    angle_grid = [(t, z) for t in config.tilt_angles for z in config.azimuth_angles]
    n_instants = 8
    n_correct = 0
    for _ in range(1000):
        order = int(rng.integers(1, 5))
        # well separated: delays >= one sample period apart, amplitude
        # spread capped at 10 dB, directions distinct on the beam grid
        theta = _separated_params(rng, config, order,
                                  amp_range=(10 ** -0.5, 1.0))
        angles = [angle_grid[k] for k in
                  rng.choice(len(angle_grid), size=order, replace=False)]
        rates = rng.uniform(-np.pi / 8, np.pi / 8, order)
        rot = np.exp(1j * np.outer(rates, np.arange(n_instants)))
        tensor = synth_channel_tensor(theta, config, angles,
                                      n_instants=n_instants,
                                      instant_rotations=rot)
        sv = hosvd_singular_values(tensor)
        if select_model_order(sv, noise_floor_db=-25.0) == order:
            n_correct += 1
    acc = n_correct / 1000.0
    ok = acc >= 0.80
    _verdict(7, ok, f"singular-value order selection: {100 * acc:.1f}% of 1000 "
                    f"well-separated channels, L in 1..4 (>= 80%)")


# criterion 8 ---------------------------------------------------------------


def test_criterion_8_prediction_exactness(config):
    rng = np.random.default_rng(808)
    ts = config.sample_period
    observe = list(range(20))
    horizon = list(range(20, 30))

    def run(delay_rate, amp_rate, phase_rate):
        worst = -np.inf
        for _ in range(25):
            base = _separated_params(rng, config, int(rng.integers(1, 4)),
                                     delay_span_ts=(0.5, 3.5),
                                     amp_range=(0.3, 1.0))
            scenario = scenario_from_params(base, delay_rate=delay_rate,
                                            amp_rate=amp_rate,
                                            phase_rate=phase_rate)
            pairs = synthesize_truth(scenario, config, observe + horizon,
                                     n_taps=256)
            truths = [scenario.params_at(float(t)) for t in observe]
            tracks = fit_tracks(truths, times=np.asarray(observe, float))
            for k, t in enumerate(horizon):
                pred = predict_csi(tracks, float(t), config, n_taps=256)
                truth_prof = pairs[len(observe) + k][1]
                worst = max(worst, to_db(profiling_loss(truth_prof, pred)))
        return worst

    worst_linear = run(0.02 * ts, -0.003, 0.05)
    worst_static = run(0.0, 0.0, 0.0)
    ok = worst_linear <= -40.0 and worst_static <= -60.0
    _verdict(8, ok, f"prediction from true tracks, 20 observed / 10 ahead: "
                    f"worst linear step {worst_linear:.2f} dB (<= -40), "
                    f"worst static step {worst_static:.2f} dB (<= -60)")


# criterion 9 ---------------------------------------------------------------


def test_criterion_9_refine_monotonicity(config, quantizer, bank):
    rng = np.random.default_rng(909)
    levels = ("coarse", "medium", "fine")
    n_calls = 10_000
    # pool of random targets, fresh random start per call
    targets = []
    for _ in range(50):
        truth = lattice_params(rng, config, quantizer, int(rng.integers(1, 4)))
        targets.append(profile(sample_cir(truth, config, n_taps=128)))

    def objective(theta, target):
        recon = reconstruct(theta, config, quantizer=quantizer, bank=bank,
                            n_taps=128)
        return window_error(target, recon)

    violations = 0
    for call in range(n_calls):
        target = targets[call % len(targets)]
        start = lattice_params(rng, config, quantizer, int(rng.integers(1, 4)))
        level = levels[call % 3]
        out = refine(start, target, level, config, quantizer=quantizer,
                     bank=bank)
        if objective(out, target) > objective(start, target):
            violations += 1
    ok = violations == 0
    _verdict(9, ok, f"greedy refinement: {violations} score increases in "
                    f"{n_calls} random calls (must be 0)")
