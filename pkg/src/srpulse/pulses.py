"""Pulse waveforms: segmented controls, composites, smoothing, time noise.

A :class:`Waveform` is the optimizer's representation: N equal-duration
segments of (amplitude fraction, phase), so 2N real control variables.
A :class:`SampledWaveform` is the evaluation representation: a dense
piecewise-constant train of (Rabi rate, phase) samples.  Optimization
runs on raw segments; evaluation runs on the smoothed sampled form that
a real synthesizer chain would emit (moving-average filter, hard
spectral cutoff, switching ramps that start and end at exactly zero).
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace

import numpy as np

TWO_PI = 2.0 * math.pi

#: Default sample step of the dense evaluation grid (seconds).
DEFAULT_STEP = 0.8e-6

#: Default hard spectral cutoff of the synthesizer chain (Hz).
DEFAULT_CUTOFF_HZ = 4.0e4

#: Default number of samples assigned to each switching ramp.
DEFAULT_EDGE_SAMPLES = 50

#: Default standard deviation of the moving-average kernel, in samples.
DEFAULT_GAUSSIAN_WIDTH = 2.0

#: Multi-tone noise band (Hz) and component count.
NOISE_BAND_HZ = (50.0, 1.0e5)
NOISE_COMPONENTS = 1000


@dataclass
class Waveform:
    """Segmented control waveform with uniform segment duration.

    Amplitudes are fractions of the peak Rabi rate and must lie in
    [0, 1]; phases are stored unwrapped (no modular reduction), which
    keeps finite differences of the phase trace meaningful.
    """

    amplitude: np.ndarray
    phase: np.ndarray
    segment_duration: float
    label: str = ""

    def __post_init__(self):
        self.amplitude = np.asarray(self.amplitude, dtype=float)
        self.phase = np.asarray(self.phase, dtype=float)
        if self.amplitude.shape != self.phase.shape or self.amplitude.ndim != 1:
            raise ValueError("amplitude and phase must be 1-d arrays of equal length")
        if self.segment_duration <= 0:
            raise ValueError("segment_duration must be positive")
        if np.any(self.amplitude < -1e-12) or np.any(self.amplitude > 1 + 1e-12):
            raise ValueError("amplitude fractions must lie in [0, 1]")

    @property
    def n_segments(self) -> int:
        return self.amplitude.size

    @property
    def duration(self) -> float:
        return self.n_segments * self.segment_duration

    def variables(self) -> np.ndarray:
        """Flat control vector (amplitudes then phases), length 2N."""
        return np.concatenate([self.amplitude, self.phase])

    def with_variables(self, c: np.ndarray) -> "Waveform":
        c = np.asarray(c, dtype=float)
        n = self.n_segments
        if c.shape != (2 * n,):
            raise ValueError(f"expected {2 * n} variables, got shape {c.shape}")
        return replace(self, amplitude=c[:n].copy(), phase=c[n:].copy())

    def as_samples(self, rabi_peak: float) -> "SampledWaveform":
        """Raw piecewise-constant sampling, one sample per segment."""
        return SampledWaveform(
            rabi=self.amplitude * rabi_peak,
            phase=self.phase.copy(),
            step_duration=self.segment_duration,
            label=self.label,
        )


@dataclass
class SampledWaveform:
    """Dense piecewise-constant control train on a uniform step grid."""

    rabi: np.ndarray
    phase: np.ndarray
    step_duration: float
    label: str = ""

    def __post_init__(self):
        self.rabi = np.asarray(self.rabi, dtype=float)
        self.phase = np.asarray(self.phase, dtype=float)
        if self.rabi.shape != self.phase.shape or self.rabi.ndim != 1:
            raise ValueError("rabi and phase must be 1-d arrays of equal length")
        if self.step_duration <= 0:
            raise ValueError("step_duration must be positive")
        if np.any(self.rabi < 0):
            raise ValueError("rabi samples must be >= 0")

    @property
    def n_samples(self) -> int:
        return self.rabi.size

    @property
    def duration(self) -> float:
        return self.n_samples * self.step_duration

    def times(self) -> np.ndarray:
        """Midpoint time of each sample."""
        return (np.arange(self.n_samples) + 0.5) * self.step_duration

    def energy(self) -> float:
        """Pulse area integral of the Rabi rate (rad)."""
        return float(np.sum(self.rabi) * self.step_duration)


def primitive_pi(rabi: float, rabi_peak: float | None = None, phase: float = 0.0) -> Waveform:
    """Square pi pulse at the given Rabi rate (duration pi / rabi)."""
    if rabi <= 0:
        raise ValueError("rabi must be positive")
    rabi_peak = rabi if rabi_peak is None else rabi_peak
    frac = rabi / rabi_peak
    if frac > 1 + 1e-12:
        raise ValueError("rabi exceeds rabi_peak")
    return Waveform(
        amplitude=np.array([frac]),
        phase=np.array([phase]),
        segment_duration=math.pi / rabi,
        label="primitive-pi",
    )


def detuning_null_rabi(detuning: float, order: int = 1) -> float:
    """Rabi rate at which a square pi pulse transfers nothing at ``detuning``.

    The off-resonant transfer of a square pi pulse vanishes when the
    generalized rotation angle sqrt(rabi^2 + detuning^2) * pi / rabi is a
    multiple of 2 pi; solving the ``order``-th zero for the Rabi rate
    gives |detuning| / sqrt(4 order^2 - 1).  Higher orders buy a lower
    (slower) pulse, e.g. to stay under an amplitude cap.
    """
    if order < 1:
        raise ValueError("order must be >= 1")
    if detuning == 0:
        raise ValueError("detuning must be nonzero")
    return abs(detuning) / math.sqrt(4.0 * order * order - 1.0)


# Composite pi pulses, written as equal-area chunks so that every segment
# of a Waveform keeps a uniform duration.  Rotation areas per chunk and
# the chunk phases reproduce the classic sequences exactly:
#   90x-180y-90x, WALTZ (90x-180-x-270x),
#   CORPSE (420x-300-x-60x), SCROFULOUS (180 at 60/300/60 degrees).
_COMPOSITES = {
    "90x180y90x": (math.pi / 2, [0.0, math.pi / 2, math.pi / 2, 0.0]),
    "waltz": (math.pi / 2, [0.0, math.pi, math.pi, 0.0, 0.0, 0.0]),
    "corpse": (math.pi / 3, [0.0] * 7 + [math.pi] * 5 + [0.0]),
    "scrofulous": (math.pi, [math.pi / 3, 5 * math.pi / 3, math.pi / 3]),
}


def composite_names() -> tuple:
    return tuple(sorted(_COMPOSITES))


def composite_pulse(name: str, rabi: float, rabi_peak: float | None = None) -> Waveform:
    """Classic composite pi pulse as an equal-duration segment train."""
    key = name.lower()
    if key not in _COMPOSITES:
        raise ValueError(f"unknown composite {name!r}; choose from {composite_names()}")
    if rabi <= 0:
        raise ValueError("rabi must be positive")
    rabi_peak = rabi if rabi_peak is None else rabi_peak
    frac = rabi / rabi_peak
    if frac > 1 + 1e-12:
        raise ValueError("rabi exceeds rabi_peak")
    chunk_area, phases = _COMPOSITES[key]
    return Waveform(
        amplitude=np.full(len(phases), frac),
        phase=np.array(phases),
        segment_duration=chunk_area / rabi,
        label=key,
    )


def _moving_average(trace: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return trace.copy()
    radius = max(1, int(math.ceil(4 * sigma)))
    x = np.arange(-radius, radius + 1)
    kernel = np.exp(-0.5 * (x / sigma) ** 2)
    kernel /= kernel.sum()
    padded = np.pad(trace, radius, mode="edge")
    return np.convolve(padded, kernel, mode="valid")


def _spectral_truncate(trace: np.ndarray, step: float, cutoff_hz: float) -> np.ndarray:
    spec = np.fft.rfft(trace)
    freq = np.fft.rfftfreq(trace.size, d=step)
    spec[freq > cutoff_hz] = 0.0
    return np.fft.irfft(spec, n=trace.size)


def _edge_envelope(n_samples: int, edge_samples: int) -> np.ndarray:
    env = np.ones(n_samples)
    if edge_samples <= 0:
        return env
    if 2 * edge_samples > n_samples:
        raise ValueError("edge ramps overlap: pulse too short for edge_samples")
    j = np.arange(edge_samples)
    ramp = 0.5 * (1.0 - np.cos(math.pi * j / edge_samples))
    env[:edge_samples] = ramp
    env[-edge_samples:] = ramp[::-1]
    return env


def smooth(
    waveform: Waveform,
    rabi_peak: float,
    step_duration: float = DEFAULT_STEP,
    gaussian_width: float = DEFAULT_GAUSSIAN_WIDTH,
    cutoff_hz: float = DEFAULT_CUTOFF_HZ,
    edge_samples: int = DEFAULT_EDGE_SAMPLES,
) -> SampledWaveform:
    """Resample a segmented waveform through the synthesizer-chain model.

    Pipeline: dense piecewise-constant resampling, Gaussian moving
    average (both traces), hard spectral truncation above ``cutoff_hz``
    (both traces), then switching ramps on the amplitude that reach
    exactly zero at the first and last samples.

    Returns
    -------
    SampledWaveform
        ``round(duration / step_duration)`` samples; the segment
        boundaries of the input land on sample boundaries when the
        segment duration is a multiple of the step.
    """
    m = int(round(waveform.duration / step_duration))
    if m < 4 * edge_samples:
        raise ValueError("pulse too short for the requested edge ramps")
    t = (np.arange(m) + 0.5) * step_duration
    idx = np.minimum(
        (t / waveform.segment_duration).astype(int), waveform.n_segments - 1
    )
    amp = waveform.amplitude[idx].astype(float)
    pha = waveform.phase[idx].astype(float)

    amp = _moving_average(amp, gaussian_width)
    pha = _moving_average(pha, gaussian_width)
    amp = _spectral_truncate(amp, step_duration, cutoff_hz)
    pha = _spectral_truncate(pha, step_duration, cutoff_hz)
    amp *= _edge_envelope(m, edge_samples)
    np.clip(amp, 0.0, None, out=amp)

    return SampledWaveform(
        rabi=amp * rabi_peak,
        phase=pha,
        step_duration=step_duration,
        label=waveform.label,
    )


@dataclass
class ToneSet:
    """One multi-tone realization: f(t) = sum_i a_i cos(w_i t) + b_i sin(w_i t)."""

    omega: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def trace(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.omega.size == 0:
            return np.zeros_like(t)
        arg = np.outer(t, self.omega)
        return np.cos(arg) @ self.a + np.sin(arg) @ self.b


@dataclass
class TimeNoise:
    """Independent amplitude and phase noise traces for one pulse.

    The amplitude trace is relative (multiplies the Rabi rate as
    1 + trace); the phase trace is additive in radians.  Component
    frequencies are confined to ``NOISE_BAND_HZ`` by construction and
    each trace is normalized so its RMS over the reference grid equals
    the requested value exactly.
    """

    amplitude: ToneSet
    phase: ToneSet
    rms_amplitude: float
    rms_phase: float
    duration: float

    def amplitude_trace(self, t: np.ndarray) -> np.ndarray:
        return self.amplitude.trace(t)

    def phase_trace(self, t: np.ndarray) -> np.ndarray:
        return self.phase.trace(t)


def _tone_set(
    rng: np.random.Generator,
    rms: float,
    duration: float,
    n_components: int,
    band_hz: tuple,
    step: float,
) -> ToneSet:
    omega = TWO_PI * rng.uniform(band_hz[0], band_hz[1], n_components)
    a = rng.standard_normal(n_components)
    b = rng.standard_normal(n_components)
    if rms == 0.0:
        return ToneSet(omega=omega, a=np.zeros_like(a), b=np.zeros_like(b))
    tones = ToneSet(omega=omega, a=a, b=b)
    m = max(2, int(round(duration / step)))
    t = (np.arange(m) + 0.5) * step
    realized = math.sqrt(float(np.mean(tones.trace(t) ** 2)))
    scale = rms / realized
    return ToneSet(omega=omega, a=a * scale, b=b * scale)


def synthesize_noise(
    rms_amplitude: float,
    rms_phase: float,
    duration: float,
    seed,
    n_components: int = NOISE_COMPONENTS,
    band_hz: tuple = NOISE_BAND_HZ,
    step: float = DEFAULT_STEP,
) -> TimeNoise:
    """Draw one time-noise realization for a pulse of the given duration.

    Parameters
    ----------
    rms_amplitude : float
        Target RMS of the relative amplitude trace (dimensionless).
    rms_phase : float
        Target RMS of the phase trace (radians).
    duration : float
        Pulse duration over which the RMS normalization is taken.
    seed
        Seed or ``numpy.random.Generator``; a given seed reproduces the
        realization exactly.
    """
    if rms_amplitude < 0 or rms_phase < 0:
        raise ValueError("noise RMS values must be >= 0")
    if duration <= 0:
        raise ValueError("duration must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    amp = _tone_set(rng, rms_amplitude, duration, n_components, band_hz, step)
    pha = _tone_set(rng, rms_phase, duration, n_components, band_hz, step)
    return TimeNoise(
        amplitude=amp,
        phase=pha,
        rms_amplitude=rms_amplitude,
        rms_phase=rms_phase,
        duration=duration,
    )


def apply_noise(sampled: SampledWaveform, noise: TimeNoise | None) -> SampledWaveform:
    """Imprint a time-noise realization onto a sampled waveform."""
    if noise is None:
        return sampled
    t = sampled.times()
    rabi = sampled.rabi * (1.0 + noise.amplitude_trace(t))
    phase = sampled.phase + noise.phase_trace(t)
    return SampledWaveform(
        rabi=np.clip(rabi, 0.0, None),
        phase=phase,
        step_duration=sampled.step_duration,
        label=sampled.label,
    )


_FORMAT_HEADER = "# srpulse waveform v1"


def dump_waveform(waveform: Waveform, constants_hash: str = "") -> str:
    """Serialize to the versioned columnar text format (17 sig digits)."""
    buf = io.StringIO()
    buf.write(_FORMAT_HEADER + "\n")
    buf.write(f"# n_segments = {waveform.n_segments}\n")
    buf.write(f"# segment_duration_s = {waveform.segment_duration:.17g}\n")
    buf.write(f"# label = {waveform.label}\n")
    buf.write(f"# constants_hash = {constants_hash}\n")
    buf.write("# columns: index amplitude_fraction phase_rad\n")
    for i, (a, p) in enumerate(zip(waveform.amplitude, waveform.phase)):
        buf.write(f"{i} {a:.17g} {p:.17g}\n")
    return buf.getvalue()


def parse_waveform(text: str) -> tuple:
    """Parse the columnar text format; returns (Waveform, header dict)."""
    lines = text.splitlines()
    if not lines or lines[0].strip() != _FORMAT_HEADER:
        raise ValueError("not a srpulse waveform v1 file")
    header = {}
    rows = []
    for line in lines[1:]:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if "=" in body:
                key, _, value = body.partition("=")
                header[key.strip()] = value.strip()
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ValueError(f"malformed waveform row: {line!r}")
        rows.append((int(parts[0]), float(parts[1]), float(parts[2])))
    rows.sort(key=lambda r: r[0])
    n = int(header.get("n_segments", len(rows)))
    if n != len(rows) or [r[0] for r in rows] != list(range(n)):
        raise ValueError("waveform rows do not match declared n_segments")
    waveform = Waveform(
        amplitude=np.array([r[1] for r in rows]),
        phase=np.array([r[2] for r in rows]),
        segment_duration=float(header["segment_duration_s"]),
        label=header.get("label", ""),
    )
    return waveform, header


def save_waveform(path, waveform: Waveform, constants_hash: str = "") -> None:
    with open(path, "w") as fh:
        fh.write(dump_waveform(waveform, constants_hash))


def load_waveform(path) -> Waveform:
    with open(path) as fh:
        waveform, _ = parse_waveform(fh.read())
    return waveform
