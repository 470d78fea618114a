"""Noise sweeps, effective-area robustness metric, and fringe-contrast
Monte Carlo.

A sweep scans one or two static-noise channels over a grid and evaluates
a metric bundle at each point.  Repeats redraw the time-dependent noise:
within one repeat every grid point shares a single noise realization, so
the static scan isolates the static channel, and the spread across
repeats measures the time-noise impact.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, replace

import numpy as np

from .atoms import PhysicalConstants
from .hamiltonian import NoiseParams
from .interferometer import SequencePlan
from .interferometer import run as run_interferometer
from .propagation import infidelity, total_unitary, target_pi_x
from .pulses import SampledWaveform, Waveform, apply_noise, synthesize_noise

#: Static-noise channels a sweep axis may address.
CHANNELS = ("eps_plus", "eps_minus", "beta_a", "beta_v", "beta_b")


@dataclass(frozen=True)
class SweepAxis:
    """One scanned noise channel: ``n`` points from ``start`` to ``stop``."""

    channel: str
    start: float
    stop: float
    n: int

    def __post_init__(self):
        if self.channel not in CHANNELS:
            raise ValueError(f"unknown noise channel {self.channel!r}")
        if self.n < 2:
            raise ValueError("sweep axes need at least 2 points")

    def values(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.n)

    @property
    def step(self) -> float:
        return (self.stop - self.start) / (self.n - 1)


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition plus the repeat/time-noise policy."""

    x: SweepAxis
    y: SweepAxis | None = None
    repeats: int = 1
    time_noise_rms: tuple = (0.0, 0.0)
    seed: int = 0

    def __post_init__(self):
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.y is not None and self.y.channel == self.x.channel:
            raise ValueError("x and y axes must scan different channels")

    def grid(self) -> list:
        """Noise parameters for every grid point, x fastest."""
        points = []
        ys = [None] if self.y is None else self.y.values()
        for yv in ys:
            for xv in self.x.values():
                kwargs = {self.x.channel: xv}
                if self.y is not None:
                    kwargs[self.y.channel] = yv
                points.append(NoiseParams(**kwargs))
        return points

    @property
    def shape(self) -> tuple:
        return (self.x.n,) if self.y is None else (self.y.n, self.x.n)


@dataclass
class SweepResult:
    """Gridded metric maps with the spec and run metadata attached.

    ``means`` maps metric name to an array of ``spec.shape``; ``stds``
    is populated only when the sweep ran with ``repeats >= 2``.
    """

    spec: SweepSpec
    means: dict
    stds: dict
    label: str = ""
    constants_digest: str = ""
    circular: tuple = ()

    @property
    def cell_area(self) -> float:
        if self.spec.y is None:
            raise ValueError("cell_area requires a 2D sweep")
        return abs(self.spec.x.step * self.spec.y.step)

    def write_csv(self, path) -> None:
        """One row per grid point plus a JSON metadata sidecar."""
        spec = self.spec
        names = sorted(self.means)
        header = [spec.x.channel]
        if spec.y is not None:
            header.append(spec.y.channel)
        header += [f"mean_{n}" for n in names]
        header += [f"std_{n}" for n in names if n in self.stds]
        xs = spec.x.values()
        ys = [None] if spec.y is None else spec.y.values()
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for iy, yv in enumerate(ys):
                for ix, xv in enumerate(xs):
                    at = ix if spec.y is None else (iy, ix)
                    row = [f"{xv:.17g}"]
                    if yv is not None:
                        row.append(f"{yv:.17g}")
                    row += [f"{self.means[n][at]:.17g}" for n in names]
                    row += [
                        f"{self.stds[n][at]:.17g}" for n in names if n in self.stds
                    ]
                    writer.writerow(row)
        meta = {
            "label": self.label,
            "constants_digest": self.constants_digest,
            "repeats": spec.repeats,
            "seed": spec.seed,
            "time_noise_rms": list(spec.time_noise_rms),
            "x": dataclasses.asdict(spec.x),
            "y": None if spec.y is None else dataclasses.asdict(spec.y),
            "metrics": names,
            "circular": list(self.circular),
        }
        with open(str(path) + ".meta.json", "w") as fh:
            json.dump(meta, fh, indent=2, sort_keys=True)
            fh.write("\n")


class PulseEvaluator:
    """Single-pulse metric bundle: block infidelity and overlap phase.

    One time-noise realization is synthesized per repeat seed and cached,
    so every grid point of a static scan sees the same trace.
    """

    metrics = ("infidelity",)
    circular = ()

    def __init__(self, sampled, direction=1, constants=None, target=None):
        constants = constants or PhysicalConstants()
        if isinstance(sampled, Waveform):
            sampled = sampled.as_samples(constants.rabi_peak)
        self.sampled = sampled
        self.direction = direction
        self.constants = constants
        self.target = target_pi_x() if target is None else target
        self._noisy = {}

    def _waveform(self, rms, time_seed):
        rms_amp, rms_phase = rms
        if rms_amp == 0.0 and rms_phase == 0.0:
            return self.sampled
        cached = self._noisy.get(time_seed)
        if cached is None:
            rng = np.random.default_rng(np.random.SeedSequence([time_seed]))
            tn = synthesize_noise(
                rms_amp, rms_phase, self.sampled.duration, rng
            )
            cached = apply_noise(self.sampled, tn)
            self._noisy[time_seed] = cached
        return cached

    def __call__(self, noise, rms, time_seed):
        sampled = self._waveform(rms, time_seed)
        u = total_unitary(sampled, noise, self.direction, self.constants)
        return {"infidelity": infidelity(u, self.target)}


class InterferometerEvaluator:
    """Full-sequence metric bundle: transfer efficiency and arm phase."""

    metrics = ("transfer_efficiency", "arm_phase_difference")
    circular = ("arm_phase_difference",)

    def __init__(self, plan: SequencePlan, constants=None, include_recoil=True):
        self.plan = plan
        self.constants = constants or PhysicalConstants()
        self.include_recoil = include_recoil

    def __call__(self, noise, rms, time_seed):
        result = run_interferometer(
            self.plan,
            noise,
            time_noise_rms=rms,
            noise_seed=time_seed,
            constants=self.constants,
            include_recoil=self.include_recoil,
        )
        return {
            "transfer_efficiency": result.transfer_efficiency,
            "arm_phase_difference": result.arm_phase_difference,
        }


def circular_mean_std(angles: np.ndarray, axis=0) -> tuple:
    """Wrap-aware mean and spread of angles along one axis.

    Mean is the argument of the resultant vector; the spread is the
    circular standard deviation sqrt(-2 ln R), zero for identical
    angles, and symmetric pairs average to zero.
    """
    z = np.exp(1j * np.asarray(angles)).mean(axis=axis)
    r = np.minimum(np.abs(z), 1.0)
    # roundoff keeps the resultant of identical angles just below 1,
    # which would leak a ~1e-8 spread; snap it to exactly zero
    r = np.where(r > 1.0 - 1e-12, 1.0, r)
    std = np.sqrt(np.maximum(-2.0 * np.log(np.maximum(r, 1e-300)), 0.0))
    return np.angle(z), std


def _sweep_task(args):
    evaluator, noise, rms, time_seed = args
    return evaluator(noise, rms, time_seed)


def sweep(spec: SweepSpec, evaluator, workers: int = 1) -> SweepResult:
    """Evaluate the metric bundle over the grid, aggregated across repeats.

    ``workers`` bounds process parallelism over grid points; the
    reduction order is fixed, so results do not depend on it.
    """
    points = spec.grid()
    per_repeat = {name: [] for name in evaluator.metrics}
    seeds = np.random.SeedSequence(spec.seed).generate_state(spec.repeats)
    for repeat in range(spec.repeats):
        time_seed = int(seeds[repeat])
        if workers > 1:
            import multiprocessing

            tasks = [(evaluator, p, spec.time_noise_rms, time_seed) for p in points]
            with multiprocessing.Pool(workers) as pool:
                rows = pool.map(_sweep_task, tasks)
        else:
            rows = [evaluator(p, spec.time_noise_rms, time_seed) for p in points]
        for name in evaluator.metrics:
            values = np.array([r[name] for r in rows]).reshape(spec.shape)
            per_repeat[name].append(values)
    means, stds = {}, {}
    for name, stack_list in per_repeat.items():
        stack = np.stack(stack_list)
        if name in evaluator.circular:
            mean, std = circular_mean_std(stack, axis=0)
        else:
            mean, std = stack.mean(axis=0), stack.std(axis=0)
        means[name] = mean
        if spec.repeats >= 2:
            stds[name] = std
    label = getattr(getattr(evaluator, "sampled", None), "label", "") or getattr(
        evaluator, "label", ""
    )
    constants = getattr(evaluator, "constants", None)
    return SweepResult(
        spec=spec,
        means=means,
        stds=stds,
        label=label,
        constants_digest=constants.digest() if constants else "",
        circular=tuple(evaluator.circular),
    )


def phase_statistics(maps) -> tuple:
    """Pointwise circular mean and std over repeated phase maps."""
    arrays = [m.means["arm_phase_difference"] if isinstance(m, SweepResult) else m
              for m in maps]
    if len(arrays) < 2:
        raise ValueError("phase statistics need at least 2 repeats")
    return circular_mean_std(np.stack(arrays), axis=0)


def effective_area(values, threshold: float, cell_area: float | None = None,
                   metric: str = "infidelity") -> float:
    """Area of the region where the map is at or below the threshold.

    Grid counting: (number of cells with value <= threshold) x cell
    area, in axis units squared.
    """
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if isinstance(values, SweepResult):
        cell_area = values.cell_area if cell_area is None else cell_area
        values = values.means[metric]
    if cell_area is None:
        raise ValueError("cell_area is required for raw arrays")
    values = np.asarray(values)
    if values.ndim != 2:
        raise ValueError("effective area needs a 2D map")
    return float(np.count_nonzero(values <= threshold) * cell_area)


def noise_robustness_trend(
    evaluator_factory,
    spec: SweepSpec,
    rms_levels,
    threshold: float,
    repeats: int = 2,
    metric: str = "infidelity",
) -> list:
    """Effective area vs time-noise RMS with repeat error bars.

    An RMS value x applies fractional amplitude noise x and phase noise
    x rad simultaneously.  Returns one (rms, mean_area, std_area) row
    per level; each repeat redraws the time noise through the sweep seed.
    """
    if repeats < 2:
        raise ValueError("trend needs repeats >= 2 for error bars")
    rows = []
    for level_index, rms in enumerate(rms_levels):
        areas = []
        for repeat in range(repeats):
            one = replace(
                spec,
                repeats=1,
                time_noise_rms=(float(rms), float(rms)),
                seed=int(
                    np.random.SeedSequence(
                        [spec.seed, level_index, repeat]
                    ).generate_state(1)[0]
                ),
            )
            result = sweep(one, evaluator_factory())
            areas.append(effective_area(result, threshold, metric=metric))
        areas = np.array(areas)
        rows.append((float(rms), float(areas.mean()), float(areas.std())))
    return rows


@dataclass
class ContrastSpec:
    """Lookup tables driving the fringe-contrast Monte Carlo.

    ``x`` grids the noise channel; ``transfer``, ``phase_mean`` and
    ``phase_std`` tabulate T(x) and the differential-phase moments.
    Lookups interpolate linearly and clamp beyond the table range.
    """

    channel: str
    widths: tuple
    x: np.ndarray
    transfer: np.ndarray
    phase_mean: np.ndarray
    phase_std: np.ndarray
    n_samples: int = 50000

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.transfer = np.asarray(self.transfer, dtype=float)
        self.phase_mean = np.asarray(self.phase_mean, dtype=float)
        self.phase_std = np.asarray(self.phase_std, dtype=float)
        if self.x.size == 0:
            raise ValueError("empty lookup tables")
        for table in (self.transfer, self.phase_mean, self.phase_std):
            if table.shape != self.x.shape:
                raise ValueError("tables must match the x grid")
        if self.n_samples < 1000:
            raise ValueError("n_samples must be >= 1000")

    @classmethod
    def from_sweep(cls, result: SweepResult, widths, n_samples=50000):
        """Build tables from a 1D interferometer sweep."""
        spec = result.spec
        if spec.y is not None:
            raise ValueError("contrast tables come from 1D sweeps")
        std = result.stds.get("arm_phase_difference")
        if std is None:
            raise ValueError("sweep must carry repeats >= 2 for phase std")
        return cls(
            channel=spec.x.channel,
            widths=tuple(widths),
            x=spec.x.values(),
            transfer=result.means["transfer_efficiency"],
            phase_mean=result.means["arm_phase_difference"],
            phase_std=std,
            n_samples=n_samples,
        )


#: Fringe-phase grid: 256 points spanning two full fringes.
PHI_GRID = np.linspace(0.0, 4.0 * np.pi, 256, endpoint=False)


def contrast(spec: ContrastSpec, seed: int = 0) -> list:
    """Monte-Carlo fringe contrast for each Gaussian channel width.

    For each width w: draw x_i ~ N(0, w) clamped to the table range,
    look up T(x_i) and the phase moments, draw the per-atom phase, and
    average the single-atom patterns 1/2 + T_i cos(Phi + dphi_i)/2 on
    the fringe grid; the contrast is max F - min F.
    """
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    rows = []
    lo, hi = float(spec.x.min()), float(spec.x.max())
    for w in spec.widths:
        x = rng.normal(0.0, w, spec.n_samples) if w > 0 else np.zeros(spec.n_samples)
        x = np.clip(x, lo, hi)
        t = np.interp(x, spec.x, spec.transfer)
        mu = np.interp(x, spec.x, spec.phase_mean)
        sigma = np.interp(x, spec.x, spec.phase_std)
        dphi = mu + sigma * rng.standard_normal(spec.n_samples)
        # mean_i T_i cos(Phi + dphi_i) expands exactly into one cosine
        # and one sine Fourier coefficient
        c = float(np.mean(t * np.cos(dphi)))
        s = float(np.mean(t * np.sin(dphi)))
        fringe = 0.5 + 0.5 * (c * np.cos(PHI_GRID) - s * np.sin(PHI_GRID))
        rows.append((float(w), float(fringe.max() - fringe.min())))
    return rows
