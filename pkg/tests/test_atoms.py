"""Level indexing, coupling-table, and recoil-kinematics checks.

The coupling table is validated against two independent routes: the
closed-form F -> F Clebsch-Gordan expressions and sympy's Wigner 3-j
implementation, so a transcription error in any one route cannot pass.
"""

import math

import numpy as np
import pytest
from sympy import S
from sympy.physics.wigner import clebsch_gordan as sympy_cg

from srpulse import atoms


def test_dense_index_layout():
    # ground ascending 0..9, excited ascending 10..19
    assert atoms.dense_index("g", -4.5) == 0
    assert atoms.dense_index("g", 4.5) == 9
    assert atoms.dense_index("e", -4.5) == 10
    assert atoms.dense_index("e", 4.5) == 19
    assert atoms.STRETCHED_GROUND == 9
    assert atoms.STRETCHED_EXCITED == 19
    idx = [atoms.dense_index(m, mf) for m in "ge" for mf in atoms.mf_values()]
    assert idx == list(range(20))


def test_dense_index_rejects_bad_arguments():
    with pytest.raises(ValueError):
        atoms.dense_index("g", 1.0)  # integer mF impossible for F=9/2
    with pytest.raises(ValueError):
        atoms.dense_index("g", 5.5)
    with pytest.raises(ValueError):
        atoms.dense_index("x", 4.5)


def test_coupling_against_sympy():
    table = atoms.coupling_table()
    f = S(9) / 2
    for q, label in ((-1, "sigma-"), (0, "pi"), (1, "sigma+")):
        for i, mf in enumerate(atoms.mf_values()):
            mf_s = S(round(2 * mf)) / 2
            if abs(mf + q) <= 4.5:
                want = float(sympy_cg(f, 1, f, mf_s, q, mf_s + q))
            else:
                want = 0.0
            assert table.raw[label][i] == pytest.approx(want, abs=1e-14)


def test_coupling_against_closed_forms():
    # F -> F coefficients: <j m; 1 0|j m> = m/sqrt(j(j+1)),
    # <j m; 1 +/-1|j m+/-1> = -/+ sqrt((j-/+m)(j+/-m+1)/(2j(j+1)))
    table = atoms.coupling_table()
    j = 4.5
    m = atoms.mf_values()
    pi = m / math.sqrt(j * (j + 1))
    sp = -np.sqrt(np.clip((j - m) * (j + m + 1), 0, None) / (2 * j * (j + 1)))
    sm = np.sqrt(np.clip((j + m) * (j - m + 1), 0, None) / (2 * j * (j + 1)))
    sp[m + 1 > j] = 0.0
    sm[m - 1 < -j] = 0.0
    np.testing.assert_allclose(table.raw["pi"], pi, atol=1e-14)
    np.testing.assert_allclose(table.raw["sigma+"], sp, atol=1e-14)
    np.testing.assert_allclose(table.raw["sigma-"], sm, atol=1e-14)


def test_sum_rule_mf_independent():
    table = atoms.coupling_table()
    total = sum(table.raw[k] ** 2 for k in atoms.POLARIZATIONS)
    assert np.ptp(total) < 1e-12
    assert total[0] == pytest.approx(1.0, abs=1e-12)


def test_pi_ratio_law():
    table = atoms.coupling_table()
    np.testing.assert_allclose(
        table.ratio["pi"], 2 * atoms.mf_values() / 9, atol=1e-12
    )
    assert table.ratio["pi"][-1] == 1.0


def test_ratios_bounded_by_stretched_pi():
    table = atoms.coupling_table()
    for k in atoms.POLARIZATIONS:
        assert np.max(np.abs(table.ratio[k])) <= 1.0 + 1e-15


def test_stretched_sigma_minus_leak_ratio():
    # |e, 9/2> couples down to |g, 7/2>; this ratio sets the dominant
    # polarization leakage out of the stretched pair.
    table = atoms.coupling_table()
    assert table.ratio["sigma-"][-1] == pytest.approx(
        math.sqrt(18 / 99) / (9 / math.sqrt(99)), abs=1e-14
    )


def test_wigner_3j_selection_rules():
    assert atoms.wigner_3j(4.5, 1, 4.5, 4.5, 1, -4.5) == 0.0  # m-sum != 0
    assert atoms.wigner_3j(4.5, 1, 2.5, 0.5, 0, -0.5) == 0.0  # triangle violated
    assert atoms.wigner_3j(1, 1, 1, 2, -1, -1) == 0.0  # |m| > j
    with pytest.raises(ValueError):
        atoms.wigner_3j(4.3, 1, 4.5, 0.5, 0, -0.5)


def test_recoil_kinematics():
    c = atoms.PhysicalConstants()
    # 698 nm photon on mass-87 strontium
    assert c.recoil_velocity == pytest.approx(6.57e-3, rel=1e-2)
    assert c.doppler_per_hbark / (2 * math.pi) == pytest.approx(9.414e3, rel=1e-3)
    assert c.recoil_shift / (2 * math.pi) == pytest.approx(4.707e3, rel=1e-3)
    assert c.recoil_shift == pytest.approx(0.5 * c.doppler_per_hbark, rel=1e-15)


def test_constants_digest_stable():
    a = atoms.PhysicalConstants()
    b = atoms.PhysicalConstants()
    c = atoms.PhysicalConstants(b0_gauss=2.0)
    assert a.digest() == b.digest()
    assert a.digest() != c.digest()
    assert len(a.digest()) == 12
