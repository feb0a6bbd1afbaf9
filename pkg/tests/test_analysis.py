import numpy as np
import pytest

from dfsnet.analysis import (
    GridSpec,
    LineScalingConfig,
    convergence_study,
    delta_map,
    fit_power_law,
    full_measure_rank_check,
    heisenberg_line_study,
    line_scaling_study,
    noise_impact_map,
    phase_sweep,
    sensitivity_map,
    two_circle_scaling_study,
    worst_case_coupling,
    worst_case_delta,
)
from dfsnet.geometry import FieldModel, SensorArray, preset_array, sampling_vector
from dfsnet.noise import BallSupport, BoxSupport, PointSupport
from dfsnet.probes import design_probe, grid_silencer, mirror_charge_probe


class TestGridSpec:
    def test_points_shape_and_order(self):
        grid = GridSpec(((0.0, 1.0), (0.0, 2.0)), (2, 3))
        pts = grid.points()
        assert pts.shape == (6, 2)
        assert pts[0] == pytest.approx([0.0, 0.0])
        assert pts[1] == pytest.approx([0.0, 1.0])  # last axis fastest
        assert pts[-1] == pytest.approx([1.0, 2.0])

    def test_validation(self):
        with pytest.raises(ValueError):
            GridSpec(((0.0, 1.0),), (1,))
        with pytest.raises(ValueError):
            GridSpec(((1.0, 0.0),), (4,))


class TestMaps:
    def _two_sensor_probe(self):
        arr = SensorArray(np.array([[0.0, 0.0], [1.0, 0.0]]))
        model = FieldModel.inverse_power(1.0)
        k = np.array([1.0, -0.5])
        return arr, model, k

    def test_noise_impact_zero_on_silenced_circle(self):
        arr, model, k = self._two_sensor_probe()
        # silenced circle: radius 2/3 around (4/3, 0)
        grid = GridSpec(((-1.0, 3.0), (-2.0, 2.0)), (161, 161))
        res = noise_impact_map(model, arr, k, grid)
        pts = grid.points()
        vals = np.where(res.mask.reshape(-1), np.inf, res.values.reshape(-1))
        lowest = pts[np.argsort(vals)[:300]]
        dist = np.abs(np.hypot(lowest[:, 0] - 4.0 / 3.0, lowest[:, 1]) - 2.0 / 3.0)
        assert dist.max() < 3 * (4.0 / 160)

    def test_sensor_cells_masked(self):
        arr, model, k = self._two_sensor_probe()
        grid = GridSpec(((-0.5, 1.5), (-0.5, 0.5)), (21, 11))
        res = noise_impact_map(model, arr, k, grid)
        assert res.mask.sum() >= 2  # both sensors sit on grid nodes

    def test_mirror_map_symmetric_and_zero_on_axes(self):
        arr = preset_array("square", side=2.0)
        k = mirror_charge_probe(arr)
        grid = GridSpec(((-3.0, 3.0), (-3.0, 3.0)), (61, 61))
        res = noise_impact_map(FieldModel.inverse_power(1.0), arr, k, grid)
        vals = np.where(res.mask, np.nan, res.values)
        assert np.allclose(vals, vals[::-1, :], equal_nan=True, atol=1e-18)
        assert np.allclose(vals, vals[:, ::-1], equal_nan=True, atol=1e-18)
        mid = 30  # the x and y axes run through the grid middle
        assert np.nanmax(vals[mid, :]) < 1e-20
        assert np.nanmax(vals[:, mid]) < 1e-20

    def test_sensitivity_far_constant_probe(self):
        arr = preset_array("square", side=0.2)
        model = FieldModel.inverse_power(1.0)
        grid = GridSpec(((30.0, 40.0), (30.0, 40.0)), (5, 5))
        res = sensitivity_map(model, arr, grid, k=np.ones(4))
        assert np.all(res.values > 0.999)

    def test_sensitivity_readapted_needs_subspace(self):
        arr = preset_array("square", side=2.0)
        model = FieldModel.inverse_power(1.0)
        grid = GridSpec(((2.0, 4.0), (2.0, 4.0)), (4, 4))
        sub = grid_silencer(model, arr, np.array([[0.0, 3.0]]))
        res = sensitivity_map(model, arr, grid, subspace=sub, readapt_k=True)
        assert np.all(res.values[~res.mask] > 0)
        with pytest.raises(ValueError):
            sensitivity_map(model, arr, grid, readapt_k=True)

    def test_delta_map_flags_silenced_cells(self):
        arr = preset_array("square", side=2.0)
        model = FieldModel.inverse_power(1.0)
        silenced = np.array([[0.0, 3.0]])
        s = sampling_vector(model, [-3.0, 0.0], arr)
        k = design_probe(s, grid_silencer(model, arr, silenced))
        grid = GridSpec(((-1.0, 1.0), (2.0, 4.0)), (21, 21))  # silenced point on a node
        res = delta_map(model, arr, k, s, grid)
        assert res.mask.any()
        finite = res.values[~res.mask]
        assert np.all(np.isfinite(finite))
        assert res.quantity == "delta"

    def test_log10_export_masks_nan(self):
        arr, model, k = self._two_sensor_probe()
        grid = GridSpec(((-0.5, 1.5), (-0.5, 0.5)), (21, 11))
        res = noise_impact_map(model, arr, k, grid)
        logview = res.log10()
        assert np.isnan(logview[res.mask]).all()


class TestWorstCase:
    def _probe_setup(self):
        arr = preset_array("two_circles", n_inner=3, n_outer=4, r_inner=0.8, r_outer=1.2)
        model = FieldModel.inverse_power(1.0)
        s = sampling_vector(model, [-2.0, 0.0], arr)
        k = design_probe(s, grid_silencer(model, arr, np.array([[2.0, 0.0]])))
        return arr, model, s, k

    def test_single_silenced_point_support(self):
        arr, model, s, k = self._probe_setup()
        val, pos = worst_case_delta(model, arr, k, s, PointSupport(np.array([2.0, 0.0])))
        assert val == np.inf
        assert pos == pytest.approx([2.0, 0.0])

    def test_generic_area_is_finite(self):
        arr, model, s, k = self._probe_setup()
        val, pos = worst_case_delta(model, arr, k, s, BallSupport(np.array([2.0, 0.0]), 0.4))
        assert np.isfinite(val)
        assert np.hypot(pos[0] - 2.0, pos[1]) <= 0.4 + 1e-9

    def test_refined_search_matches_fine_grid_oracle(self):
        arr, model, s, k = self._probe_setup()
        support = BallSupport(np.array([2.0, 0.0]), 0.4)
        val64, pos64 = worst_case_delta(model, arr, k, s, support, resolution=64)
        val512, pos512 = worst_case_delta(
            model, arr, k, s, support, resolution=512, refine_rounds=0
        )
        cell = 0.8 / 64
        assert np.linalg.norm(pos64 - pos512) <= cell * np.sqrt(2) + 1e-9
        assert val64 <= val512 * (1 + 1e-6)

    def test_refinement_monotonicity(self):
        arr, model, s, k = self._probe_setup()
        support = BoxSupport(np.array([1.7, -0.3]), np.array([2.3, 0.3]))
        v_lo, _ = worst_case_delta(model, arr, k, s, support, resolution=32)
        v_hi, _ = worst_case_delta(model, arr, k, s, support, resolution=64)
        assert v_hi <= v_lo * (1 + 1e-6)

    def test_coupling_worst_case(self):
        arr, model, s, k = self._probe_setup()
        support = BallSupport(np.array([2.0, 0.0]), 0.4)
        c_max, pos = worst_case_coupling(model, arr, k, support)
        nvec = sampling_vector(model, pos, arr)
        assert abs(nvec @ k) == pytest.approx(c_max)
        # the silenced centre couples to nothing; the worst case must not sit there
        assert c_max > 0
        assert np.hypot(pos[0] - 2.0, pos[1]) > 0.1


class TestScalingStudies:
    def test_two_circle_preset_exponent(self):
        res = two_circle_scaling_study(range(4, 13), 15, sigma=1.0, resolution=48)
        assert res.fit_r2 > 0.9
        assert 10 < res.kappa < 30
        ms = [r.m for r in res.rows]
        assert ms == sorted(ms)

    def test_line_preset_exponent_window(self):
        res = line_scaling_study(range(1, 13), 15, sigma=1.0)
        assert 3 < res.kappa < 25
        assert res.fit_r2 > 0.9

    def test_no_silencing_keeps_maximal_sensitivity(self):
        res = line_scaling_study([0, 2, 4], 15, sigma=1.0)
        sens = [r.sensitivity for r in res.rows]
        assert sens[0] == max(sens)

    def test_leave_one_out_stability(self):
        res = two_circle_scaling_study(range(4, 15), 15, sigma=1.0, resolution=48)
        _, S, D = res.as_arrays()
        for drop in range(len(S)):
            keep = np.ones(len(S), bool)
            keep[drop] = False
            slope, _ = fit_power_law(S[keep], D[keep])
            assert abs(-slope - res.kappa) / res.kappa < 0.15


class TestConvergenceStudy:
    def test_scalars_independent_of_m(self):
        res3 = convergence_study([50, 100], m=3, sigma=1.0)
        res5 = convergence_study([50, 100], m=5, sigma=1.0)
        for a, b in zip(res3.rows, res5.rows):
            assert a.s_bar == pytest.approx(b.s_bar)
            assert a.n_bar == pytest.approx(b.n_bar)

    def test_sensitivity_settles_below_one_percent(self):
        res = convergence_study([500, 1000], m=3, sigma=1.0)
        s500, s1000 = res.rows[0].sensitivity, res.rows[1].sensitivity
        assert abs(s1000 - s500) / s500 < 0.01

    def test_predicted_qfi_crossover(self):
        res = convergence_study([100, 1000], m=3, sigma=1.0)
        ref = res.rows[-1]
        t = 1.0
        ns = np.geomspace(10, 1e6, 400)
        nk = ref.n_bar * ref.sensitivity * ns / ref.delta
        curve = 4 * (ref.s_bar * ref.sensitivity * ns) ** 2 * t**2 * np.exp(
            -4 * (res.sigma * nk * t) ** 2
        )
        peak = np.argmax(curve)
        assert 0 < peak < ns.size - 1  # quadratic rise then exponential fall
        head = curve[: peak + 1]
        assert np.all(np.diff(head) > 0)

    def test_heisenberg_exponent(self):
        ns, qfis, exponent, r2 = heisenberg_line_study(range(20, 101, 20))
        assert exponent == pytest.approx(2.0, abs=0.05)
        assert r2 > 0.999


class TestRankCheck:
    def test_disk_area_saturates_rank(self):
        arr = preset_array("hexagon", radius=1.0)
        model = FieldModel.inverse_power(1.0)
        s = sampling_vector(model, [-2.5, 0.0], arr)
        support = BallSupport(np.array([1.8, 0.0]), 1.0)
        rank, residual = full_measure_rank_check(
            model, arr, support, samples=1000, seed=3, signal=s
        )
        assert rank == 6
        assert residual < 1e-6

    def test_finite_point_set_rank(self):
        arr = preset_array("hexagon", radius=1.0)
        model = FieldModel.inverse_power(1.0)
        from dfsnet.noise import UnionSupport

        pts = [np.array([2.0, 0.3]), np.array([2.5, -0.7]), np.array([3.0, 1.0])]
        support = UnionSupport([PointSupport(p) for p in pts])
        rank, _ = full_measure_rank_check(model, arr, support, samples=60, seed=0)
        assert rank == 3

    def test_linear_field_rank_bounded_by_dimension(self):
        arr = preset_array("hexagon", radius=1.0)
        rank, _ = full_measure_rank_check(
            FieldModel.linear(), arr, BallSupport(np.array([1.0, 1.0]), 2.0), samples=500, seed=1
        )
        assert rank <= 2

    def test_rank_nondecreasing_in_samples(self):
        arr = preset_array("two_circles", n_inner=4, n_outer=4, r_inner=0.7, r_outer=1.1)
        model = FieldModel.inverse_power(1.0)
        support = BallSupport(np.array([2.0, 0.0]), 0.8)
        ranks = [
            full_measure_rank_check(model, arr, support, samples=n, seed=5)[0]
            for n in (8, 64, 512)
        ]
        assert ranks == sorted(ranks)
        assert ranks[-1] <= arr.n_sensors


class TestPhaseSweep:
    def test_orthogonal_wavevectors_perfect(self):
        arr = preset_array("honeycomb", radius=1.0)
        model = FieldModel.periodic(0.0)
        w_noise = np.array([2.0, 0.0])
        s = sampling_vector(model, [0.0, 2.5], arr)
        k = design_probe(s, grid_silencer(model, arr, w_noise[None, :]))
        res = phase_sweep(arr, k, w_noise)
        assert res.classification == "PERFECT"
        assert res.max_impact < 1e-10

    def test_oblique_wavevectors_partial_off_symmetry(self):
        hexagon = preset_array("honeycomb", radius=1.0).positions + np.array([0.35, 0.2])
        arr = SensorArray(hexagon)
        model = FieldModel.periodic(0.0)
        w_noise = np.array([2.0, 0.8])
        s = sampling_vector(model, [0.0, 2.5], arr)
        k = design_probe(s, grid_silencer(model, arr, w_noise[None, :]))
        res = phase_sweep(arr, k, w_noise)
        assert res.classification == "PARTIAL"
        assert res.max_impact > 1e-3

    def test_degenerate_wavevector_constant_field(self):
        # near-zero wavevector: the field is spatially constant, and any
        # balanced probe is silenced at every phase
        arr = preset_array("square", side=2.0)
        k = mirror_charge_probe(arr)
        res = phase_sweep(arr, k, np.array([1e-9, 0.0]))
        assert res.classification == "PERFECT"
