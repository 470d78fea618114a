"""Noisy 20-level Hamiltonian of the laser-driven clock transition.

The Hamiltonian is assembled in the rotating frame with hbar = 1 as

    H = H_B(beta_B) + H_D(beta_v) + H_C(eps+, eps-, beta_A),

where H_B collects Zeeman shifts (a differential clock shift plus linear
sublevel splittings in each manifold), H_D is the Doppler detuning whose
sign follows the laser direction, and H_C couples the manifolds through
all three laser polarization components weighted by the coupling-ratio
table.  All five noise coordinates are static over a single pulse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .atoms import (
    EXCITED,
    GROUND,
    N_LEVELS,
    N_SUBLEVELS,
    CouplingTable,
    PhysicalConstants,
    coupling_table,
    dense_index,
    mf_values,
)


@dataclass
class NoiseParams:
    """Static noise coordinates for one trajectory.

    Attributes
    ----------
    eps_plus, eps_minus : complex
        Polarization impurity amplitudes of the sigma+ / sigma-
        components; |eps+|^2 + |eps-|^2 <= 1 and the pi component
        carries the remaining amplitude sqrt(1 - eps^2).
    beta_a : complex
        Relative Rabi-amplitude error; the coupling scales as (1 + beta_a).
    beta_v : float
        Doppler detuning in units of the constant ``omega_d``.
    beta_b : float
        Relative magnetic-field error; shifts scale as (1 + beta_b) and
        the differential clock shift is proportional to beta_b itself.
    """

    eps_plus: complex = 0.0
    eps_minus: complex = 0.0
    beta_a: complex = 0.0
    beta_v: float = 0.0
    beta_b: float = 0.0

    def polarization_fraction(self) -> float:
        """eps^2 = |eps+|^2 + |eps-|^2, the leaked intensity fraction."""
        return abs(self.eps_plus) ** 2 + abs(self.eps_minus) ** 2

    def validate(self) -> None:
        eps2 = self.polarization_fraction()
        if eps2 > 1.0 + 1e-12:
            raise ValueError(
                f"polarization amplitudes exceed unit intensity: eps^2 = {eps2:.6g}"
            )


@dataclass
class ControlSample:
    """One piecewise-constant control value: Rabi rate, phase, direction."""

    rabi: float
    phase: float
    direction: int = 1

    def validate(self) -> None:
        if self.rabi < 0:
            raise ValueError(f"rabi must be >= 0, got {self.rabi!r}")
        if self.direction not in (-1, 1):
            raise ValueError(f"direction must be +1 or -1, got {self.direction!r}")


def _polarization_patterns(table: CouplingTable) -> dict:
    # Excited<-ground placement matrices, one per polarization component.
    out = {}
    for q, label in ((0, "pi"), (1, "sigma+"), (-1, "sigma-")):
        p = np.zeros((N_LEVELS, N_LEVELS))
        for i, mf in enumerate(mf_values()):
            if abs(mf + q) <= 4.5:
                p[dense_index(EXCITED, mf + q), dense_index(GROUND, mf)] = (
                    table.ratio[label][i]
                )
        out[label] = p
    return out


_PATTERNS: dict | None = None


def _patterns() -> dict:
    global _PATTERNS
    if _PATTERNS is None:
        _PATTERNS = _polarization_patterns(coupling_table())
    return _PATTERNS


def coupling_matrix(noise: NoiseParams) -> np.ndarray:
    """Excited<-ground coupling block K at unit Rabi rate and zero phase.

    The full coupling term for a control sample (rabi, phase) is

        H_C = z K + conj(z) K^dag,   z = rabi * exp(i phase),

    so K carries the polarization weights, the coupling ratios, the
    amplitude error (1 + beta_a), and the conventional factor 1/2.
    """
    noise.validate()
    pat = _patterns()
    pi_weight = math.sqrt(max(0.0, 1.0 - noise.polarization_fraction()))
    block = (
        pi_weight * pat["pi"]
        + noise.eps_plus * pat["sigma+"]
        + noise.eps_minus * pat["sigma-"]
    )
    return 0.5 * (1.0 + noise.beta_a) * block


def zeeman_diagonal(beta_b: float, constants: PhysicalConstants) -> np.ndarray:
    """Diagonal of H_B over the dense index (rad/s)."""
    b0 = constants.b0_gauss
    steps = 4.5 - mf_values()  # mF distance below the stretched state
    diag = np.empty(N_LEVELS)
    diag[:N_SUBLEVELS] = -0.5 * beta_b * b0 * constants.omega_b - (
        (1.0 + beta_b) * b0 * constants.mu0_gs * steps
    )
    diag[N_SUBLEVELS:] = +0.5 * beta_b * b0 * constants.omega_b - (
        (1.0 + beta_b) * b0 * constants.mu0_gp * steps
    )
    return diag


def doppler_diagonal(
    beta_v: float,
    direction: int,
    constants: PhysicalConstants,
    detuning: float = 0.0,
) -> np.ndarray:
    """Diagonal of H_D plus any extra laser detuning (rad/s).

    The Doppler term flips sign with the laser direction; ``detuning``
    is an already direction-signed angular frequency added the same way
    (excited up, ground down by half the splitting each).
    """
    if direction not in (-1, 1):
        raise ValueError(f"direction must be +1 or -1, got {direction!r}")
    split = direction * beta_v * constants.omega_d + detuning
    diag = np.empty(N_LEVELS)
    diag[:N_SUBLEVELS] = -0.5 * split
    diag[N_SUBLEVELS:] = +0.5 * split
    return diag


def assemble(
    noise: NoiseParams,
    control: ControlSample,
    constants: PhysicalConstants | None = None,
    detuning: float = 0.0,
) -> np.ndarray:
    """Full 20x20 Hamiltonian for one control sample (rad/s)."""
    constants = constants or PhysicalConstants()
    control.validate()
    k = coupling_matrix(noise)
    z = control.rabi * np.exp(1j * control.phase)
    h = z * k + np.conj(z) * k.conj().T
    diag = zeeman_diagonal(noise.beta_b, constants) + doppler_diagonal(
        noise.beta_v, control.direction, constants, detuning
    )
    h[np.diag_indices(N_LEVELS)] += diag
    return h


def assemble_stack(
    noise: NoiseParams,
    rabi: np.ndarray,
    phase: np.ndarray,
    direction: int,
    constants: PhysicalConstants | None = None,
    detuning: float = 0.0,
) -> np.ndarray:
    """Hamiltonians for a train of control samples, shape (M, 20, 20).

    Vectorized equivalent of calling :func:`assemble` per sample with a
    shared noise draw; this is the hot path of pulse propagation.
    """
    constants = constants or PhysicalConstants()
    rabi = np.asarray(rabi, dtype=float)
    phase = np.asarray(phase, dtype=float)
    if rabi.shape != phase.shape or rabi.ndim != 1:
        raise ValueError("rabi and phase must be 1-d arrays of equal length")
    if np.any(rabi < 0):
        raise ValueError("rabi samples must be >= 0")
    k = coupling_matrix(noise)
    z = rabi * np.exp(1j * phase)
    h = (
        z[:, None, None] * k[None]
        + np.conj(z)[:, None, None] * k.conj().T[None]
    )
    diag = zeeman_diagonal(noise.beta_b, constants) + doppler_diagonal(
        noise.beta_v, direction, constants, detuning
    )
    h[:, np.arange(N_LEVELS), np.arange(N_LEVELS)] += diag
    return h
