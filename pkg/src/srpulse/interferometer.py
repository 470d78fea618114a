"""Large-momentum-transfer interferometer sequence simulation.

Two arms are tracked as separate internal-state vectors with a classical
momentum label (plane-wave treatment; spatial wavepacket dynamics are
out of scope).  The kicked arm starts in the excited stretched state at
+1 photon momentum, the resting arm in the ground stretched state at 0.
Each arm is taken through a primitive/optimized/optimized/primitive
staging that accelerates it away and back; pulses address one arm
resonantly while the other evolves off-resonantly under the same light.

The second arm is accelerated in the opposite momentum direction.  With
both stages in the same direction, the first pulse of the second arm's
sequence would drive the very photon mode that connects the two
recombination states, so it would be exactly resonant with the parked
arm and destroy it; mirroring the direction keeps the parked arm's
detuning at >= 2 x 2pi x 9.4 kHz throughout.

The laser is retuned to exact resonance with the addressed arm on every
pulse.  The other arm's detuning follows from the momentum difference
(Doppler) plus a recoil correction that depends on whether the two arms
are absorbing or emitting; it vanishes when both arms sit in the same
internal manifold and is +-2 recoil shifts otherwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .atoms import (
    EXCITED,
    GROUND,
    N_LEVELS,
    PhysicalConstants,
    STRETCHED_EXCITED,
    STRETCHED_GROUND,
)
from .hamiltonian import NoiseParams
from .propagation import total_unitary, wrap_phase
from .pulses import (
    SampledWaveform,
    Waveform,
    apply_noise,
    primitive_pi,
    smooth,
    synthesize_noise,
)

UPPER = "upper"
LOWER = "lower"

PRIMITIVE = "primitive"
OPTIMIZED = "optimized"


@dataclass
class ArmState:
    """One interferometer arm: internal state plus classical labels."""

    psi: np.ndarray
    momentum: int
    manifold: str
    label: str

    def port_population(self) -> float:
        """Population in this arm's intended stretched state."""
        port = STRETCHED_EXCITED if self.manifold == EXCITED else STRETCHED_GROUND
        return float(np.abs(self.psi[port]) ** 2)

    def port_phase(self) -> float:
        port = STRETCHED_EXCITED if self.manifold == EXCITED else STRETCHED_GROUND
        return float(np.angle(self.psi[port]))


def initial_arms() -> dict:
    """Post-beamsplitter starting point: kicked arm up, resting arm down.

    The initial beamsplitter itself is not part of the pulse plan; the
    upper arm simply starts in |e, 9/2> with one photon momentum.
    """
    psi_u = np.zeros(N_LEVELS, dtype=complex)
    psi_u[STRETCHED_EXCITED] = 1.0
    psi_l = np.zeros(N_LEVELS, dtype=complex)
    psi_l[STRETCHED_GROUND] = 1.0
    return {
        UPPER: ArmState(psi_u, 1, EXCITED, UPPER),
        LOWER: ArmState(psi_l, 0, GROUND, LOWER),
    }


@dataclass(frozen=True)
class PulseDescriptor:
    """One pulse of the plan with its pre-computed bookkeeping."""

    index: int
    arm: str
    kind: str
    direction: int
    dp: int
    momentum_before: int
    manifold_before: str


@dataclass
class SequencePlan:
    """Ordered pulse descriptors plus the sampled waveforms they reference."""

    descriptors: tuple
    waveforms: dict
    n_primitive: int
    n_optimized: int

    @property
    def n_pulses(self) -> int:
        return len(self.descriptors)

    def pulses_addressing(self, arm: str) -> list:
        return [d for d in self.descriptors if d.arm == arm]

    def peak_momentum(self, arm: str) -> int:
        peak = 0
        for d in self.pulses_addressing(arm):
            after = d.momentum_before + d.dp
            if abs(after) > abs(peak):
                peak = after
        return peak

    def describe(self) -> str:
        """Plain-text table of the plan, one line per pulse."""
        lines = ["index arm kind direction dp p_before manifold"]
        for d in self.descriptors:
            lines.append(
                f"{d.index} {d.arm} {d.kind} {d.direction:+d} {d.dp:+d} "
                f"{d.momentum_before} {d.manifold_before}"
            )
        return "\n".join(lines)


def _pulse_direction(manifold: str, dp: int) -> int:
    # a ground-state arm absorbs (kick along the beam), an excited arm
    # is driven to emit (kick against the beam)
    return dp if manifold == GROUND else -dp


def build_sequence(
    optimized,
    primitive=None,
    mini: int = 1,
    n_primitive: int = 20,
    n_optimized: int = 480,
    constants: PhysicalConstants | None = None,
) -> SequencePlan:
    """Build the full two-arm plan from the two pulse shapes.

    ``optimized`` may be a raw segmented ``Waveform`` (smoothed here with
    the default synthesizer settings) or an already-sampled waveform.
    ``primitive`` defaults to the square pi pulse at the peak Rabi rate.
    ``mini`` divides the per-stage primitive/optimized counts for
    desk-scale runs (20/mini primitive, at least one, and 480/mini
    optimized pulses per stage).
    """
    constants = constants or PhysicalConstants()
    if mini < 1:
        raise ValueError("mini must be >= 1")
    n_prim = max(1, n_primitive // mini) if n_primitive else 0
    n_opt = n_optimized // mini
    if n_optimized and n_opt == 0:
        raise ValueError("mini factor leaves no optimized pulses per stage")
    if n_prim + n_opt == 0:
        raise ValueError("plan has no pulses")

    if isinstance(optimized, Waveform):
        sampled_opt = smooth(optimized, rabi_peak=constants.rabi_peak)
    else:
        sampled_opt = optimized
    if primitive is None:
        primitive = primitive_pi(constants.rabi_peak)
    if isinstance(primitive, Waveform):
        primitive = primitive.as_samples(constants.rabi_peak)

    waveforms = {PRIMITIVE: primitive}
    if n_opt:
        if sampled_opt is None:
            raise ValueError("plan includes optimized pulses but none was given")
        waveforms[OPTIMIZED] = sampled_opt

    kinds = [PRIMITIVE] * n_prim + [OPTIMIZED] * n_opt
    descriptors = []
    arms = initial_arms()
    # the kicked arm accelerates along +1, the resting arm along -1
    for arm_label, accel in ((UPPER, 1), (LOWER, -1)):
        arm = arms[arm_label]
        momentum, manifold = arm.momentum, arm.manifold
        stage_kinds = kinds + kinds[::-1]
        stage_dps = [accel] * len(kinds) + [-accel] * len(kinds)
        for kind, dp in zip(stage_kinds, stage_dps):
            direction = _pulse_direction(manifold, dp)
            descriptors.append(
                PulseDescriptor(
                    index=len(descriptors),
                    arm=arm_label,
                    kind=kind,
                    direction=direction,
                    dp=dp,
                    momentum_before=momentum,
                    manifold_before=manifold,
                )
            )
            momentum += dp
            manifold = EXCITED if manifold == GROUND else GROUND
        if (momentum, manifold) != (arm.momentum, arm.manifold):
            raise AssertionError("staging failed to return the arm to its start")
    return SequencePlan(
        descriptors=tuple(descriptors),
        waveforms=waveforms,
        n_primitive=n_prim,
        n_optimized=n_opt,
    )


def arm_detuning(
    arm: ArmState,
    addressed: ArmState,
    direction: int,
    constants: PhysicalConstants | None = None,
    include_recoil: bool = True,
) -> float:
    """Detuning of ``arm`` when the laser is resonant with ``addressed``.

    Doppler term from the momentum difference plus, when enabled, the
    recoil correction from the absorption/emission roles: +1 recoil
    shift for an absorbing (ground) arm, -1 for an emitting (excited)
    arm, entering as (role_arm - role_addressed) so it cancels when both
    arms sit in the same manifold.
    """
    constants = constants or PhysicalConstants()
    if arm is addressed or arm.label == addressed.label:
        return 0.0
    doppler = (
        direction * (arm.momentum - addressed.momentum) * constants.doppler_per_hbark
    )
    if not include_recoil:
        return doppler
    role = {GROUND: 1.0, EXCITED: -1.0}
    recoil = (role[arm.manifold] - role[addressed.manifold]) * constants.recoil_shift
    return doppler + recoil


@dataclass
class InterferometerResult:
    """Outcome of one full sequence run."""

    transfer_efficiency: float
    arm_phase_difference: float
    upper_population: float
    lower_population: float
    arms: dict
    norm_drift: float
    n_pulses: int

    def as_dict(self) -> dict:
        return {
            "transfer_efficiency": self.transfer_efficiency,
            "arm_phase_difference": self.arm_phase_difference,
            "upper_population": self.upper_population,
            "lower_population": self.lower_population,
            "upper_momentum": self.arms[UPPER].momentum,
            "lower_momentum": self.arms[LOWER].momentum,
            "norm_drift": self.norm_drift,
            "n_pulses": self.n_pulses,
        }


def run(
    plan: SequencePlan,
    static_noise: NoiseParams | None = None,
    time_noise_rms: tuple = (0.0, 0.0),
    noise_seed: int = 0,
    constants: PhysicalConstants | None = None,
    include_recoil: bool = True,
) -> InterferometerResult:
    """Propagate both arms through every pulse of the plan.

    Time-dependent noise draws one realization per pulse from a bank
    keyed by (noise_seed, pulse index); the realization is shared by
    both arms within the pulse, so it is common mode by construction,
    and reruns with the same seed reuse identical traces.
    """
    static_noise = static_noise or NoiseParams()
    constants = constants or PhysicalConstants()
    rms_amp, rms_phase = time_noise_rms
    noisy = rms_amp != 0.0 or rms_phase != 0.0
    arms = initial_arms()
    cache: dict = {}

    for desc in plan.descriptors:
        sampled = plan.waveforms[desc.kind]
        if noisy:
            rng = np.random.default_rng(
                np.random.SeedSequence([noise_seed, desc.index])
            )
            tn = synthesize_noise(
                rms_amp, rms_phase, sampled.duration, rng
            )
            sampled = apply_noise(sampled, tn)
        addressed = arms[desc.arm]
        if addressed.momentum != desc.momentum_before:
            raise AssertionError("arm momentum diverged from the plan")
        for arm in arms.values():
            detuning = arm_detuning(
                arm, addressed, desc.direction, constants, include_recoil
            )
            key = (desc.kind, desc.direction, detuning, desc.index if noisy else -1)
            u = cache.get(key)
            if u is None:
                u = total_unitary(
                    sampled, static_noise, desc.direction, constants, detuning
                )
                cache[key] = u
            arm.psi = u @ arm.psi
        addressed.momentum += desc.dp
        addressed.manifold = EXCITED if addressed.manifold == GROUND else GROUND

    upper, lower = arms[UPPER], arms[LOWER]
    norm_drift = max(
        abs(float(np.linalg.norm(a.psi)) - 1.0) for a in arms.values()
    )
    if norm_drift > 1e-8:
        raise RuntimeError(f"arm norm drifted by {norm_drift:.2e}")
    p_u = upper.port_population()
    p_l = lower.port_population()
    return InterferometerResult(
        transfer_efficiency=0.5 * (p_u + p_l),
        arm_phase_difference=wrap_phase(upper.port_phase() - lower.port_phase()),
        upper_population=p_u,
        lower_population=p_l,
        arms=arms,
        norm_drift=norm_drift,
        n_pulses=plan.n_pulses,
    )


def differential_phase(
    result: InterferometerResult, reference: InterferometerResult
) -> float:
    """Arm-phase difference relative to a reference run.

    With the two runs sharing the time-noise seed, the time-dependent
    contribution cancels exactly as a common mode.
    """
    return wrap_phase(
        result.arm_phase_difference - reference.arm_phase_difference
    )
