"""Level structure, physical constants, and dipole coupling ratios for the
87Sr 1S0 -> 3P0 clock transition.

Both clock states carry nuclear spin F = 9/2, giving ten Zeeman sublevels
each.  The twenty states are indexed densely: ground sublevels first in
ascending mF, then excited sublevels in ascending mF.  The stretched pair
(|g, +9/2>, |e, +9/2>) is the intended two-level system; the remaining
states participate only through polarization leakage and Zeeman shifts.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np

TWO_PI = 2.0 * math.pi

#: Total angular momentum of both clock states.
F_SPIN = Fraction(9, 2)

#: Number of Zeeman sublevels per clock state.
N_SUBLEVELS = 10

#: Total Hilbert-space dimension (ground + excited manifolds).
N_LEVELS = 2 * N_SUBLEVELS

GROUND = "g"
EXCITED = "e"

#: Polarization labels in the order (sigma-minus, pi, sigma-plus).
POLARIZATIONS = ("sigma-", "pi", "sigma+")


def mf_values() -> np.ndarray:
    """Zeeman quantum numbers mF = -9/2 ... +9/2 in ascending order."""
    return (np.arange(N_SUBLEVELS) - 4.5) + 0.0


def dense_index(manifold: str, mf: float) -> int:
    """Map (manifold, mF) to the dense state index.

    Parameters
    ----------
    manifold : {"g", "e"}
        Ground (1S0) or excited (3P0) clock state.
    mf : float
        Half-integer Zeeman quantum number in [-9/2, +9/2].

    Returns
    -------
    int
        Index in 0..19; ground sublevels occupy 0..9, excited 10..19,
        each ascending in mF.
    """
    two_mf = round(2 * mf)
    if two_mf != 2 * mf or two_mf % 2 == 0:
        raise ValueError(f"mF must be half-integer, got {mf!r}")
    if abs(two_mf) > 9:
        raise ValueError(f"mF out of range for F=9/2: {mf!r}")
    offset = (two_mf + 9) // 2
    if manifold == GROUND:
        return offset
    if manifold == EXCITED:
        return N_SUBLEVELS + offset
    raise ValueError(f"manifold must be 'g' or 'e', got {manifold!r}")


#: Index of the stretched ground state |g, +9/2>.
STRETCHED_GROUND = dense_index(GROUND, 4.5)

#: Index of the stretched excited state |e, +9/2>.
STRETCHED_EXCITED = dense_index(EXCITED, 4.5)


@dataclass(frozen=True)
class PhysicalConstants:
    """Laser and atomic parameters, angular-frequency units (rad/s).

    The Hamiltonian is written with hbar = 1, so every energy-like
    quantity below is an angular frequency.  Field-dependent rates carry
    per-gauss units and are multiplied by ``b0_gauss`` when assembled.

    Attributes
    ----------
    b0_gauss : float
        Bias magnetic field in gauss.
    omega_b : float
        Differential clock-transition Zeeman shift per gauss (rad/s/G);
        splits the two stretched states.
    mu0_gs : float
        Ground-manifold Zeeman splitting per unit mF step per gauss.
    mu0_gp : float
        Excited-manifold Zeeman splitting per unit mF step per gauss.
    omega_d : float
        Doppler detuning unit: the beta_v noise coordinate is measured
        in multiples of this angular frequency.
    rabi_peak : float
        Peak Rabi frequency of the stretched-pair pi transition.
    wavelength : float
        Clock-laser wavelength in meters.
    atom_mass : float
        Atomic mass in kilograms.
    hbar : float
        Reduced Planck constant, used only for recoil kinematics.
    """

    b0_gauss: float = 1.0
    omega_b: float = TWO_PI * 491.0
    mu0_gs: float = TWO_PI * 182.0
    mu0_gp: float = TWO_PI * 291.0
    omega_d: float = TWO_PI * 100.0
    rabi_peak: float = TWO_PI * 3000.0
    wavelength: float = 698e-9
    atom_mass: float = 87 * 1.6605e-27
    hbar: float = 1.054571817e-34

    @property
    def wavenumber(self) -> float:
        """Laser wavenumber k = 2 pi / lambda (rad/m)."""
        return TWO_PI / self.wavelength

    @property
    def recoil_velocity(self) -> float:
        """Single-photon recoil velocity hbar k / m (m/s)."""
        return self.hbar * self.wavenumber / self.atom_mass

    @property
    def doppler_per_hbark(self) -> float:
        """Doppler detuning per hbar*k of momentum, k * v_recoil (rad/s)."""
        return self.wavenumber * self.recoil_velocity

    @property
    def recoil_shift(self) -> float:
        """Single-photon recoil frequency shift hbar k^2 / 2m (rad/s)."""
        return 0.5 * self.doppler_per_hbark

    def digest(self) -> str:
        """Short stable hash of the constant set, for output manifests."""
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


def _triangle(dj1: int, dj2: int, dj3: int) -> Fraction:
    # Doubled-integer angular momenta; returns the exact triangle factor.
    f = math.factorial
    return Fraction(
        f((dj1 + dj2 - dj3) // 2) * f((dj1 - dj2 + dj3) // 2) * f((-dj1 + dj2 + dj3) // 2),
        f((dj1 + dj2 + dj3) // 2 + 1),
    )


def wigner_3j(j1: float, j2: float, j3: float, m1: float, m2: float, m3: float) -> float:
    """Wigner 3-j symbol via the Racah sum, exact up to the final sqrt.

    Arguments may be integers or half-integers.  Returns 0 for
    configurations violating the selection rules.
    """
    dj = [round(2 * j) for j in (j1, j2, j3)]
    dm = [round(2 * m) for m in (m1, m2, m3)]
    for d, x in zip(dj + dm, (j1, j2, j3, m1, m2, m3)):
        if d != 2 * x:
            raise ValueError(f"angular momenta must be (half-)integers, got {x!r}")
    if sum(dm) != 0:
        return 0.0
    if any(abs(m) > j for j, m in zip(dj, dm)):
        return 0.0
    if not (abs(dj[0] - dj[1]) <= dj[2] <= dj[0] + dj[1]):
        return 0.0
    if (dj[0] + dj[1] + dj[2]) % 2 != 0:
        return 0.0

    f = math.factorial
    dj1, dj2, dj3 = dj
    dm1, dm2, dm3 = dm
    # Racah sum index bounds: every factorial argument must be >= 0.
    t_min = max(0, (dj2 - dj3 - dm1) // 2, (dj1 - dj3 + dm2) // 2)
    t_max = min(
        (dj1 + dj2 - dj3) // 2,
        (dj1 - dm1) // 2,
        (dj2 + dm2) // 2,
    )
    total = Fraction(0)
    for t in range(t_min, t_max + 1):
        denom = (
            f(t)
            * f((dj3 - dj2 + dm1) // 2 + t)
            * f((dj3 - dj1 - dm2) // 2 + t)
            * f((dj1 + dj2 - dj3) // 2 - t)
            * f((dj1 - dm1) // 2 - t)
            * f((dj2 + dm2) // 2 - t)
        )
        total += Fraction((-1) ** t, denom)
    if total == 0:
        return 0.0
    norm = _triangle(dj1, dj2, dj3) * Fraction(
        f((dj1 + dm1) // 2)
        * f((dj1 - dm1) // 2)
        * f((dj2 + dm2) // 2)
        * f((dj2 - dm2) // 2)
        * f((dj3 + dm3) // 2)
        * f((dj3 - dm3) // 2)
    )
    phase = (-1) ** ((dj1 - dj2 - dm3) // 2)
    return phase * float(total) * math.sqrt(float(norm))


def clebsch_gordan(j1: float, m1: float, j2: float, m2: float, j3: float, m3: float) -> float:
    """Clebsch-Gordan coefficient <j1 m1; j2 m2 | j3 m3> (Condon-Shortley)."""
    phase = (-1) ** round(j1 - j2 + m3)
    return phase * math.sqrt(2 * j3 + 1) * wigner_3j(j1, j2, j3, m1, m2, -m3)


@dataclass(frozen=True)
class CouplingTable:
    """Dipole coupling strengths between the two clock manifolds.

    ``raw[q]`` holds the Clebsch-Gordan coefficient
    <F mF; 1 q | F mF+q> for each ground sublevel mF (ascending order);
    entries transitioning outside the excited manifold are zero.
    ``ratio[q]`` is ``raw[q]`` divided by the stretched pi coefficient
    C^pi_{9/2}, which is the normalization actually entering the
    Hamiltonian: the laser intensity is specified through the
    stretched-pair Rabi frequency, so only ratios are physical here.
    """

    raw: dict
    ratio: dict

    @classmethod
    def build(cls) -> "CouplingTable":
        """Evaluate all thirty coefficients from Wigner 3-j symbols."""
        f = float(F_SPIN)
        mfs = mf_values()
        raw = {}
        for q, label in ((-1, "sigma-"), (0, "pi"), (1, "sigma+")):
            coeffs = np.zeros(N_SUBLEVELS)
            for i, mf in enumerate(mfs):
                if abs(mf + q) <= f:
                    coeffs[i] = clebsch_gordan(f, mf, 1, q, f, mf + q)
            raw[label] = coeffs
        stretched_pi = raw["pi"][-1]
        ratio = {k: v / stretched_pi for k, v in raw.items()}
        return cls(raw=raw, ratio=ratio)


_TABLE: CouplingTable | None = None


def coupling_table() -> CouplingTable:
    """Shared coupling table, built once on first use."""
    global _TABLE
    if _TABLE is None:
        _TABLE = CouplingTable.build()
    return _TABLE
