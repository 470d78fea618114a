"""Shared expensive fixtures: optimization products reused across tests.

The acceptance suite needs best-of-3 optimization runs in several
places (batch-cost target, eps-axis margin, robustness trend, mini
interferometer).  Each seed's product is computed once per session and
cached; every run is fully seeded, so the products are reproducible bit
for bit on one platform.

A run is a two-leg schedule: a full-rate leg from the standard
initialization, then a warm restart of the same fixed ensemble at a
lower rate.  One leg alone leaves the cost a factor ~2 above where the
chain lands (the decayed rate is what limits it, not the landscape).
"""

import dataclasses

import pytest

from srpulse.atoms import PhysicalConstants
from srpulse.optimizer import NoiseDistribution, OptimizerConfig, optimize

SEEDS = (0, 1, 2)
# margin-test seed order: chains are fully deterministic, so trying the
# seed with the best observed margin first just short-circuits sooner
EPS_SEEDS = (1, 0, 2)

# stated desk-scale settings: N=32 over 2 ms against a fixed 50-sample
# ensemble; one dark segment per end so the switching ramps of the
# smoothing chain act on zero amplitude
ROBUST_CONFIG = dict(
    n_segments=32,
    duration=2e-3,
    batch_size=50,
    learning_rate=0.03,
    learning_rate_decay=0.999,
    max_iterations=4000,
    fixed_batch=True,
    stall_iterations=200,
    ftol=1e-10,
    zero_edge_segments=1,
)
POLISH = dict(learning_rate=0.005, learning_rate_decay=0.9995)

# polarization-heavy ensemble for the eps-axis margin, sampled real for
# parity with the real-axis scans it is scored on
EPS_DIST = NoiseDistribution(
    w_eps_plus=0.10, w_eps_minus=0.10, complex_channels=False
)

_CONSTANTS = PhysicalConstants()
_STAGES: dict = {}
_CHAINS: dict = {}


def _dist(kind: str) -> NoiseDistribution:
    return EPS_DIST if kind == "eps" else NoiseDistribution()


def _base_config(seed: int, kind: str) -> OptimizerConfig:
    base = dict(ROBUST_CONFIG)
    if kind == "eps":
        # the margin pulse is scored on the raw waveform, so dark edges
        # are not needed and measurably cost eps-axis headroom
        base["zero_edge_segments"] = 0
    return OptimizerConfig(seed=seed, **base)


def stage_run(seed: int, kind: str = "robust"):
    """Memoized first leg for one seed; returns (waveform, trace)."""
    key = (seed, kind)
    if key not in _STAGES:
        _STAGES[key] = optimize(_base_config(seed, kind), _dist(kind), _CONSTANTS)
    return _STAGES[key]


def chain_run(seed: int, kind: str = "robust"):
    """Memoized two-leg optimization for one seed.

    Returns (waveform, polish_trace).  ``kind`` selects the training
    ensemble: the stated widths or the polarization-heavy one.
    """
    key = (seed, kind)
    if key not in _CHAINS:
        wave, _ = stage_run(seed, kind)
        config = dataclasses.replace(
            _base_config(seed, kind), initial_waveform=wave, **POLISH
        )
        _CHAINS[key] = optimize(config, _dist(kind), _CONSTANTS)
    return _CHAINS[key]


@pytest.fixture(scope="session")
def constants():
    return _CONSTANTS


@pytest.fixture(scope="session")
def robust_best():
    """Seed-0 first-leg product, reused by the trend test.

    The polish leg buys batch cost by sharpening segment steps, which
    the smoothing chain then distorts; the deployable (smoothed) shape
    comes from the first leg.
    """
    return stage_run(0)[0]


@pytest.fixture(scope="session")
def plan_pulse():
    """Transfer pulse for the sequence-plan test.

    In the stacked sequence every pulse is retuned onto its arm, so the
    premium is on per-pulse rotation error (it accumulates coherently
    over back-to-back pulses) and on the off-resonant response at the
    smallest arm separations.  A 16-segment shape over the same 2 ms,
    trained to pure fidelity, keeps the mean Rabi rate and the segment
    rate low enough for both.
    """
    config = OptimizerConfig(
        seed=0,
        n_segments=16,
        duration=2e-3,
        batch_size=1,
        learning_rate=0.05,
        learning_rate_decay=0.999,
        max_iterations=2000,
        fixed_batch=True,
        stall_iterations=200,
        ftol=1e-12,
        zero_edge_segments=1,
    )
    zero = NoiseDistribution(0.0, 0.0, 0.0, 0.0, 0.0)
    wave, _ = optimize(config, zero, _CONSTANTS)
    return wave


def report(criterion: str, ok: bool, detail: str) -> None:
    """One visible pass/fail line per acceptance criterion."""
    line = f"[{criterion}] {'PASS' if ok else 'FAIL'}: {detail}"
    print(line)
    assert ok, line
