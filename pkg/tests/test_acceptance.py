"""Acceptance gate: one test per stated criterion, one pass/fail line each.

Criteria 6, 7, 9 and 10 consume the memoized optimization chains from
conftest; everything else is self-contained and fast.
"""

import math
import time

import numpy as np

from srpulse.analysis import (
    ContrastSpec,
    PulseEvaluator,
    SweepAxis,
    SweepSpec,
    contrast,
    effective_area,
    noise_robustness_trend,
)
from srpulse.atoms import TWO_PI, PhysicalConstants, coupling_table
from srpulse.interferometer import build_sequence, differential_phase, run
from srpulse.optimizer import (
    NoiseDistribution,
    NoiseParams,
    batch_cost,
    batch_cost_gradient,
    sample_batch,
)
from srpulse.propagation import (
    calibrate_amplitude,
    evolve,
    infidelity,
    total_unitary,
    transfer_population,
)
from srpulse.pulses import (
    Waveform,
    detuning_null_rabi,
    primitive_pi,
    smooth,
    synthesize_noise,
)

from conftest import EPS_SEEDS, SEEDS, chain_run, report

CONSTANTS = PhysicalConstants()


def test_criterion_01_rabi_oracle():
    t0 = time.perf_counter()
    rabi = CONSTANTS.rabi_peak
    pulse = primitive_pi(rabi).as_samples(rabi)
    t = pulse.duration
    worst = 0.0
    for delta in (0.0, TWO_PI * 100, TWO_PI * 300, TWO_PI * 1000):
        psi, _ = evolve(pulse, NoiseParams(), detuning=delta, return_unitary=False)
        general = math.hypot(rabi, delta)
        expected = (rabi / general) ** 2 * math.sin(general * t / 2) ** 2
        worst = max(worst, abs(transfer_population(psi) - expected))
    elapsed = time.perf_counter() - t0
    report(
        "criterion 1",
        worst <= 1e-6 and elapsed < 1.0,
        f"Rabi oracle max |error| {worst:.2e} (<=1e-6), {elapsed:.2f}s (<1s)",
    )


def test_criterion_02_unitarity():
    t0 = time.perf_counter()
    rng = np.random.default_rng(11)
    eye = np.eye(20)
    worst_u = 0.0
    worst_norm = 0.0
    for _ in range(100):
        n = rng.integers(3, 25)
        wave = Waveform(
            rng.uniform(0, 1, n), rng.normal(0, 2, n), rng.uniform(5e-6, 4e-5)
        )
        noise = NoiseParams(
            eps_plus=rng.normal(0, 0.1) + 1j * rng.normal(0, 0.1),
            eps_minus=rng.normal(0, 0.1) + 1j * rng.normal(0, 0.1),
            beta_a=rng.normal(0, 0.05),
            beta_v=rng.normal(0, 2),
            beta_b=rng.normal(0, 0.2),
        )
        direction = 1 if rng.random() < 0.5 else -1
        psi, u = evolve(
            wave.as_samples(CONSTANTS.rabi_peak), noise, direction=direction
        )
        worst_u = max(worst_u, np.abs(u.conj().T @ u - eye).max())
        worst_norm = max(worst_norm, abs(np.linalg.norm(psi) - 1.0))
    elapsed = time.perf_counter() - t0
    report(
        "criterion 2",
        worst_u <= 1e-10 and worst_norm <= 1e-10 and elapsed < 10.0,
        f"unitarity max ||U+U-I|| {worst_u:.2e}, norm drift {worst_norm:.2e} "
        f"(<=1e-10), {elapsed:.1f}s (<10s)",
    )


def test_criterion_03_gradient():
    t0 = time.perf_counter()
    rng = np.random.default_rng(23)
    worst = 0.0
    for _ in range(20):
        n = int(rng.integers(2, 9))
        wave = Waveform(
            rng.uniform(0.1, 0.9, n), rng.normal(0, 1, n), rng.uniform(5e-5, 3e-4)
        )
        batch = sample_batch(
            NoiseDistribution(), int(rng.integers(1, 5)), rng
        )
        _, grad = batch_cost_gradient(wave, batch, CONSTANTS, 1)
        c = wave.variables()
        h = 3e-6
        for k in range(2 * n):
            if abs(grad[k]) <= 1e-10:
                continue
            up, down = c.copy(), c.copy()
            up[k] += h
            down[k] -= h
            fd = (
                batch_cost(wave.with_variables(up), batch, CONSTANTS, 1)
                - batch_cost(wave.with_variables(down), batch, CONSTANTS, 1)
            ) / (2 * h)
            worst = max(worst, abs(grad[k] - fd) / max(abs(fd), 1e-10))
    elapsed = time.perf_counter() - t0
    report(
        "criterion 3",
        worst <= 1e-6 and elapsed < 30.0,
        f"gradient vs central differences max rel err {worst:.2e} (<=1e-6), "
        f"{elapsed:.1f}s (<30s)",
    )


def test_criterion_04_clebsch_gordan():
    t0 = time.perf_counter()
    table = coupling_table()
    mf = np.arange(-4.5, 5.5, 1.0)
    sums = sum(
        np.asarray(table.raw[q], dtype=float) ** 2
        for q in ("sigma-", "pi", "sigma+")
    )
    sum_spread = float(np.abs(sums - sums[0]).max())
    ratio_err = float(np.abs(np.asarray(table.ratio["pi"]) - 2 * mf / 9).max())
    elapsed = time.perf_counter() - t0
    report(
        "criterion 4",
        sum_spread <= 1e-12 and ratio_err <= 1e-12 and elapsed < 1.0,
        f"CG sum-rule spread {sum_spread:.1e}, pi-ratio err {ratio_err:.1e} "
        f"(<=1e-12), {elapsed:.2f}s (<1s)",
    )


def test_criterion_05_noise_synthesis():
    t0 = time.perf_counter()
    grid = (np.arange(2500) + 0.5) * 0.8e-6
    worst_rms = 0.0
    worst_oob = 0.0
    for seed, (ra, rp) in enumerate([(0.01, 0.02), (0.003, 0.0), (0.0, 0.05)]):
        tn = synthesize_noise(ra, rp, 0.002, seed=seed)
        for tones, target in ((tn.amplitude, ra), (tn.phase, rp)):
            trace = tones.trace(grid)
            got = math.sqrt(float(np.mean(trace**2)))
            if target > 0:
                worst_rms = max(worst_rms, abs(got - target) / target)
                f = tones.omega / TWO_PI
                assert f.min() >= 50.0 and f.max() <= 1e5
            else:
                assert np.all(trace == 0.0)
    # projection leg on a reduced tone count so the in-band basis stays
    # overdetermined on the sample grid (2500 rows x 240 columns)
    tn = synthesize_noise(0.01, 0.02, 0.002, seed=3, n_components=120)
    for tones in (tn.amplitude, tn.phase):
        trace = tones.trace(grid)
        arg = np.outer(grid, tones.omega)
        basis = np.hstack([np.cos(arg), np.sin(arg)])
        coeff, *_ = np.linalg.lstsq(basis, trace, rcond=None)
        residual = trace - basis @ coeff
        worst_oob = max(worst_oob, float(np.sum(residual**2) / np.sum(trace**2)))
    elapsed = time.perf_counter() - t0
    report(
        "criterion 5",
        worst_rms <= 1e-3 and worst_oob <= 1e-10 and elapsed < 5.0,
        f"noise RMS rel err {worst_rms:.2e} (<=1e-3), out-of-band power "
        f"fraction {worst_oob:.1e} (~0), {elapsed:.1f}s (<5s)",
    )


def test_criterion_06_desk_scale_optimization():
    shared = sample_batch(NoiseDistribution(), 200, 20260815)
    primitive = primitive_pi(CONSTANTS.rabi_peak)
    prim_avg = batch_cost(primitive, shared, CONSTANTS, 1)
    outcomes = []
    # best-of-3: a seed that clears the bar settles the maximum early
    for seed in SEEDS:
        wave, trace = chain_run(seed)
        opt_avg = batch_cost(wave, shared, CONSTANTS, 1)
        outcomes.append((trace.best_cost, prim_avg / opt_avg))
        if trace.best_cost <= 1e-2 and outcomes[-1][1] >= 5.0:
            break
    ok = any(cost <= 1e-2 and ratio >= 5.0 for cost, ratio in outcomes)
    best = max(outcomes, key=lambda o: o[1])
    report(
        "criterion 6",
        ok,
        f"best-of-{len(outcomes)} batch cost {best[0]:.2e} (<=1e-2), "
        f"improvement over primitive batch average {best[1]:.1f}x (>=5x)",
    )


def test_criterion_07_eps_axis_margin():
    probe = NoiseParams(eps_plus=0.1)
    prim = infidelity(
        total_unitary(
            primitive_pi(CONSTANTS.rabi_peak).as_samples(CONSTANTS.rabi_peak),
            probe,
            1,
            CONSTANTS,
        )
    )
    points = []
    for seed in EPS_SEEDS:
        wave, _ = chain_run(seed, "eps")
        points.append(
            infidelity(
                total_unitary(
                    wave.as_samples(CONSTANTS.rabi_peak), probe, 1, CONSTANTS
                )
            )
        )
        if points[-1] <= prim / 10.0:
            break
    best = min(points)
    report(
        "criterion 7",
        best <= prim / 10.0,
        f"|eps+|=0.1 infidelity {best:.2e} vs primitive {prim:.2e} "
        f"({prim / best:.1f}x, >=10x)",
    )


def test_criterion_08_effective_area_estimator():
    t0 = time.perf_counter()
    half = 0.05
    xs = np.linspace(-half, half, 101)
    xx, yy = np.meshgrid(xs, xs)
    paraboloid = xx**2 + yy**2
    cell = (xs[1] - xs[0]) ** 2
    worst_margin = -np.inf
    for threshold in (0.0007, 0.0004, 0.0002):
        area = effective_area(paraboloid, threshold, cell_area=cell)
        exact = math.pi * threshold
        bound = (TWO_PI * math.sqrt(threshold) / math.sqrt(cell) + 4) * cell
        worst_margin = max(worst_margin, abs(area - exact) - bound)
    elapsed = time.perf_counter() - t0
    report(
        "criterion 8",
        worst_margin <= 0.0 and elapsed < 5.0,
        f"paraboloid-vs-disk error within perimeter-cell bound "
        f"(worst margin {worst_margin:.2e} <= 0), {elapsed:.1f}s (<5s)",
    )


def test_criterion_09_robustness_trend(robust_best):
    spec = SweepSpec(
        x=SweepAxis("eps_plus", -0.08, 0.08, 25),
        y=SweepAxis("eps_minus", -0.08, 0.08, 25),
        seed=5,
    )
    # the deployed pulse is the smoothed, power-calibrated one; an
    # uncalibrated area error is a confound here, since amplitude noise
    # realizations that happen to correct it would enlarge the area
    deployed, _ = calibrate_amplitude(
        smooth(robust_best, CONSTANTS.rabi_peak), CONSTANTS
    )
    rows = noise_robustness_trend(
        lambda: PulseEvaluator(deployed, constants=CONSTANTS),
        spec,
        rms_levels=(0.0, 0.005, 0.01),
        threshold=0.0007,
        repeats=2,
    )
    means = [row[1] for row in rows]
    non_increasing = all(a >= b - 1e-15 for a, b in zip(means, means[1:]))
    factor = means[0] / means[-1] if means[-1] > 0 else math.inf
    report(
        "criterion 9",
        non_increasing and means[0] > 0 and 1.0 <= factor <= 3.0,
        f"effective area {means[0]:.2e} -> {means[1]:.2e} -> {means[2]:.2e} "
        f"non-increasing, reduction factor {factor:.2f} in [1, 3]",
    )


def test_criterion_10_mini_interferometer(plan_pulse):
    # deployment chain: smooth, then trim the amplitude against the
    # zero-noise rotation error exactly as the power calibration would
    deployed, _ = calibrate_amplitude(
        smooth(plan_pulse, CONSTANTS.rabi_peak), CONSTANTS
    )
    # square primitive slowed to the fourth transfer zero at the
    # smallest spectator detuning of the plan (two recoil splittings)
    r_prim = detuning_null_rabi(2 * CONSTANTS.doppler_per_hbark, order=4)
    plan = build_sequence(
        deployed,
        primitive=primitive_pi(r_prim, CONSTANTS.rabi_peak),
        mini=20,
        constants=CONSTANTS,
    )
    clean = run(plan, constants=CONSTANTS)
    momentum_ok = (
        clean.as_dict()["upper_momentum"] == 1.0
        and clean.as_dict()["lower_momentum"] == 0.0
        and plan.peak_momentum("upper") == 1 + len(plan.pulses_addressing("upper")) // 2
    )
    noisy_a = run(plan, time_noise_rms=(0.003, 0.005), noise_seed=9, constants=CONSTANTS)
    noisy_b = run(plan, time_noise_rms=(0.003, 0.005), noise_seed=9, constants=CONSTANTS)
    phase_gap = differential_phase(noisy_a, noisy_b)
    report(
        "criterion 10",
        clean.transfer_efficiency >= 0.95 and phase_gap == 0.0 and momentum_ok,
        f"mini-20 efficiency {clean.transfer_efficiency:.4f} (>=0.95), "
        f"identical-noise differential phase {phase_gap} (==0), momentum exact",
    )


def test_criterion_11_contrast_monte_carlo():
    t0 = time.perf_counter()
    x = np.linspace(-12.0, 12.0, 4001)
    flat = ContrastSpec(
        channel="beta_v",
        widths=(1.0,),
        x=x,
        transfer=np.ones_like(x),
        phase_mean=np.zeros_like(x),
        phase_std=np.zeros_like(x),
    )
    ((_, c_flat),) = contrast(flat, seed=1)
    flat_ok = abs(c_flat - 1.0) <= 2 / math.sqrt(50000)

    washout = ContrastSpec(
        channel="beta_v",
        widths=(0.5, 1.0, 2.0),
        x=x,
        transfer=np.ones_like(x),
        phase_mean=x.copy(),
        phase_std=np.zeros_like(x),
    )
    worst = max(
        abs(c - math.exp(-w**2 / 2))
        for w, c in contrast(washout, seed=2)
    )
    elapsed = time.perf_counter() - t0
    report(
        "criterion 11",
        flat_ok and worst <= 0.01 and elapsed < 30.0,
        f"flat-table contrast {c_flat:.4f} (1 +/- {2 / math.sqrt(50000):.4f}), "
        f"Gaussian washout max err {worst:.4f} (<=0.01), {elapsed:.1f}s (<30s)",
    )
