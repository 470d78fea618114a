"""Sweeps, effective area, robustness trend, and the contrast model."""

import json

import numpy as np
import pytest

from srpulse.analysis import (
    ContrastSpec,
    InterferometerEvaluator,
    PulseEvaluator,
    SweepAxis,
    SweepResult,
    SweepSpec,
    circular_mean_std,
    contrast,
    effective_area,
    noise_robustness_trend,
    phase_statistics,
    sweep,
)
from srpulse.atoms import PhysicalConstants
from srpulse.interferometer import build_sequence
from srpulse.pulses import primitive_pi

CONSTANTS = PhysicalConstants()
TWO_PI = 2.0 * np.pi


def rabi_infidelity(delta, rabi, t):
    """Closed-form trace infidelity of a square pulse on a two-level atom."""
    w = np.sqrt(rabi**2 + delta**2)
    # |Tr(X dag U)|^2 / 4 for U = exp(-i(delta sz + rabi sx)t/2)
    transfer = (rabi / w) ** 2 * np.sin(w * t / 2.0) ** 2
    return 1.0 - transfer


class TestSweepSpec:
    def test_axis_validation(self):
        with pytest.raises(ValueError):
            SweepAxis("nope", 0, 1, 5)
        with pytest.raises(ValueError):
            SweepAxis("beta_v", 0, 1, 1)
        with pytest.raises(ValueError):
            SweepSpec(SweepAxis("beta_v", 0, 1, 3), SweepAxis("beta_v", 0, 1, 3))
        with pytest.raises(ValueError):
            SweepSpec(SweepAxis("beta_v", 0, 1, 3), repeats=0)

    def test_grid_order_x_fastest(self):
        spec = SweepSpec(
            SweepAxis("beta_a", -1, 1, 3), SweepAxis("beta_v", 0, 1, 2)
        )
        grid = spec.grid()
        assert len(grid) == 6
        assert [p.beta_a for p in grid[:3]] == [-1, 0, 1]
        assert all(p.beta_v == 0 for p in grid[:3])
        assert all(p.beta_v == 1 for p in grid[3:])
        assert spec.shape == (2, 3)


class TestPulseSweep:
    def test_degenerate_zero_noise_point(self):
        spec = SweepSpec(SweepAxis("beta_v", 0.0, 0.0, 2))
        result = sweep(spec, PulseEvaluator(primitive_pi(CONSTANTS.rabi_peak)))
        assert result.means["infidelity"] == pytest.approx(
            np.zeros(2), abs=1e-10
        )
        assert result.stds == {}

    def test_detuning_sweep_matches_rabi_formula(self):
        rabi = CONSTANTS.rabi_peak
        t = np.pi / rabi
        spec = SweepSpec(SweepAxis("beta_v", -3.0, 3.0, 13))
        result = sweep(spec, PulseEvaluator(primitive_pi(rabi)))
        deltas = spec.x.values() * CONSTANTS.omega_d
        expected = rabi_infidelity(deltas, rabi, t)
        assert result.means["infidelity"] == pytest.approx(expected, abs=1e-6)

    def test_repeats_without_time_noise_are_identical(self):
        spec = SweepSpec(SweepAxis("beta_v", 0, 1, 3), repeats=3)
        result = sweep(spec, PulseEvaluator(primitive_pi(CONSTANTS.rabi_peak)))
        assert result.stds["infidelity"] == pytest.approx(np.zeros(3), abs=0)

    def test_time_noise_reproducible_and_spreads(self):
        spec = SweepSpec(
            SweepAxis("beta_v", 0, 1, 2),
            repeats=3,
            time_noise_rms=(0.02, 0.02),
            seed=7,
        )
        evalr = PulseEvaluator(primitive_pi(CONSTANTS.rabi_peak))
        a = sweep(spec, evalr)
        b = sweep(spec, PulseEvaluator(primitive_pi(CONSTANTS.rabi_peak)))
        assert a.means["infidelity"] == pytest.approx(
            b.means["infidelity"], abs=0
        )
        assert np.all(a.stds["infidelity"] > 0)

    def test_csv_round_trip_preserves_floats(self, tmp_path):
        spec = SweepSpec(
            SweepAxis("beta_a", -0.1, 0.1, 3), SweepAxis("beta_v", -1, 1, 2)
        )
        result = sweep(spec, PulseEvaluator(primitive_pi(CONSTANTS.rabi_peak)))
        path = tmp_path / "map.csv"
        result.write_csv(path)
        rows = np.genfromtxt(path, delimiter=",", names=True)
        assert rows.shape == (6,)
        flat = result.means["infidelity"].ravel()
        assert np.array_equal(rows["mean_infidelity"], flat)
        meta = json.loads((tmp_path / "map.csv.meta.json").read_text())
        assert meta["x"]["channel"] == "beta_a"
        assert meta["metrics"] == ["infidelity"]


class TestCircularStats:
    def test_symmetric_pair_averages_to_zero(self):
        mean, std = circular_mean_std(np.array([0.4, -0.4]))
        assert mean == pytest.approx(0.0, abs=1e-15)
        assert std > 0

    def test_identical_angles_have_zero_std(self):
        mean, std = circular_mean_std(np.array([2.0, 2.0, 2.0]))
        assert mean == pytest.approx(2.0)
        assert std == 0.0

    def test_wraparound_mean(self):
        angles = np.array([np.pi - 0.1, -np.pi + 0.1])
        mean, _ = circular_mean_std(angles)
        assert abs(abs(mean) - np.pi) < 1e-12

    def test_phase_statistics_requires_repeats(self):
        with pytest.raises(ValueError):
            phase_statistics([np.zeros((2, 2))])
        mean, std = phase_statistics([np.full((2, 2), 0.3), np.full((2, 2), -0.3)])
        assert mean == pytest.approx(np.zeros((2, 2)), abs=1e-15)
        assert np.all(std > 0)


class TestEffectiveArea:
    def test_all_above_threshold(self):
        assert effective_area(np.ones((4, 4)), 0.5, cell_area=1.0) == 0.0

    def test_threshold_validation(self):
        with pytest.raises(ValueError):
            effective_area(np.ones((4, 4)), 0.0, cell_area=1.0)
        with pytest.raises(ValueError):
            effective_area(np.ones(4), 0.5, cell_area=1.0)
        with pytest.raises(ValueError):
            effective_area(np.ones((4, 4)), 0.5)

    @pytest.mark.parametrize("r2", [0.0007, 0.0004, 0.0002])
    def test_paraboloid_disk_oracle(self, r2):
        # infidelity-shaped bowl x^2 + y^2 <= r^2 has exact area pi r^2;
        # grid counting is accurate to the cells straddling the contour
        n = 101
        half = 0.05
        xs = np.linspace(-half, half, n)
        cell = (xs[1] - xs[0]) ** 2
        xx, yy = np.meshgrid(xs, xs)
        bowl = xx**2 + yy**2
        area = effective_area(bowl, r2, cell_area=cell)
        exact = np.pi * r2
        perimeter_cells = 2 * np.pi * np.sqrt(r2) / np.sqrt(cell) + 4
        assert abs(area - exact) <= perimeter_cells * cell

    def test_sweep_result_input(self):
        spec = SweepSpec(
            SweepAxis("beta_a", -1, 1, 5), SweepAxis("beta_v", -1, 1, 5)
        )
        xs = spec.x.values()
        bowl = xs[None, :] ** 2 + xs[:, None] ** 2
        result = SweepResult(spec=spec, means={"infidelity": bowl}, stds={})
        got = effective_area(result, 0.5)
        assert got == effective_area(bowl, 0.5, cell_area=result.cell_area)

    def test_refinement_converges(self):
        r2 = 0.3
        areas = []
        for n in (51, 101):
            xs = np.linspace(-1, 1, n)
            cell = (xs[1] - xs[0]) ** 2
            bowl = xs[None, :] ** 2 + xs[:, None] ** 2
            areas.append(effective_area(bowl, r2, cell_area=cell))
        exact = np.pi * r2
        assert abs(areas[1] - exact) <= abs(areas[0] - exact) + 1e-12


class TestNoiseRobustnessTrend:
    def make_factory(self):
        sampled = primitive_pi(CONSTANTS.rabi_peak).as_samples(
            CONSTANTS.rabi_peak
        )
        return lambda: PulseEvaluator(sampled)

    def spec(self):
        return SweepSpec(
            SweepAxis("eps_plus", -0.1, 0.1, 9),
            SweepAxis("beta_v", -2, 2, 9),
            seed=3,
        )

    def test_zero_rms_has_zero_spread(self):
        rows = noise_robustness_trend(
            self.make_factory(), self.spec(), [0.0], threshold=0.002, repeats=2
        )
        (rms, mean_area, std_area) = rows[0]
        assert rms == 0.0
        assert mean_area > 0
        assert std_area == 0.0

    def test_requires_two_repeats(self):
        with pytest.raises(ValueError):
            noise_robustness_trend(
                self.make_factory(), self.spec(), [0.0], 0.002, repeats=1
            )


class TestContrast:
    def flat_spec(self, transfer=1.0, phase=0.0, std=0.0, widths=(0.5,)):
        x = np.linspace(-3, 3, 7)
        return ContrastSpec(
            channel="beta_v",
            widths=widths,
            x=x,
            transfer=np.full(7, transfer),
            phase_mean=np.full(7, phase),
            phase_std=np.full(7, std),
        )

    def test_perfect_fringes(self):
        rows = contrast(self.flat_spec(), seed=1)
        assert rows[0][1] == pytest.approx(1.0, abs=2 / np.sqrt(50000))

    def test_zero_transfer(self):
        rows = contrast(self.flat_spec(transfer=0.0), seed=1)
        assert rows[0][1] == 0.0

    def test_gaussian_phase_washout_law(self):
        # per-atom phase x_i with x ~ N(0, w) washes the fringe to
        # exp(-w^2/2); emulate via phase_mean(x) = x on a wide table
        x = np.linspace(-12, 12, 4001)
        for w in (0.5, 1.0, 2.0):
            spec = ContrastSpec(
                channel="beta_v",
                widths=(w,),
                x=x,
                transfer=np.ones_like(x),
                phase_mean=x,
                phase_std=np.zeros_like(x),
            )
            (_, c) = contrast(spec, seed=9)[0]
            assert c == pytest.approx(np.exp(-(w**2) / 2.0), abs=0.01)

    def test_contrast_bounds_and_monotone_degradation(self):
        x = np.linspace(-10, 10, 2001)
        spec = ContrastSpec(
            channel="beta_v",
            widths=(0.0, 0.5, 1.0, 2.0),
            x=x,
            transfer=np.exp(-(x**2) / 8.0),
            phase_mean=0.8 * x,
            phase_std=0.05 * np.abs(x),
        )
        rows = contrast(spec, seed=4)
        values = [c for _, c in rows]
        assert all(0.0 <= c <= 1.0 for c in values)
        assert all(a >= b - 1e-3 for a, b in zip(values, values[1:]))

    def test_reproducible_under_seed(self):
        x = np.linspace(-5, 5, 101)
        spec = ContrastSpec(
            channel="beta_v",
            widths=(0.3, 1.0),
            x=x,
            transfer=np.ones_like(x),
            phase_mean=x,
            phase_std=np.zeros_like(x),
        )
        assert contrast(spec, seed=5) == contrast(spec, seed=5)
        assert contrast(spec, seed=5) != contrast(spec, seed=6)

    def test_table_validation(self):
        with pytest.raises(ValueError):
            ContrastSpec("beta_v", (1.0,), np.array([]), np.array([]),
                         np.array([]), np.array([]))
        with pytest.raises(ValueError):
            ContrastSpec("beta_v", (1.0,), np.arange(3.0), np.ones(2),
                         np.ones(3), np.ones(3))
        with pytest.raises(ValueError):
            self.flat_spec().__class__(
                channel="beta_v", widths=(1.0,), x=np.arange(3.0),
                transfer=np.ones(3), phase_mean=np.zeros(3),
                phase_std=np.zeros(3), n_samples=10,
            )

    def test_from_sweep_builds_tables(self):
        plan = build_sequence(None, n_primitive=2, n_optimized=0)
        spec = SweepSpec(
            SweepAxis("beta_v", -0.5, 0.5, 3),
            repeats=2,
            time_noise_rms=(0.005, 0.01),
            seed=2,
        )
        result = sweep(spec, InterferometerEvaluator(plan))
        cspec = ContrastSpec.from_sweep(result, widths=(0.1, 0.3))
        assert cspec.x == pytest.approx(spec.x.values())
        assert cspec.transfer.shape == (3,)
        rows = contrast(cspec, seed=0)
        assert len(rows) == 2
        assert all(0 <= c <= 1 for _, c in rows)

    def test_from_sweep_requires_phase_std(self):
        plan = build_sequence(None, n_primitive=2, n_optimized=0)
        spec = SweepSpec(SweepAxis("beta_v", -0.5, 0.5, 3))
        result = sweep(spec, InterferometerEvaluator(plan))
        with pytest.raises(ValueError):
            ContrastSpec.from_sweep(result, widths=(0.1,))
