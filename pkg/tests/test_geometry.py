import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dfsnet.errors import CoincidentSourceSensor, InvalidPresetParams
from dfsnet.geometry import (
    FieldModel,
    SensorArray,
    field_amplitude,
    halton_disc,
    line_array,
    preset_array,
    sampling_map_jacobian,
    sampling_vector,
    sampling_vectors,
    sunflower_disc,
)


class TestFieldAmplitude:
    def test_inverse_power_unit_distance(self):
        f = field_amplitude(FieldModel.inverse_power(1.0), [0.0, 0.0], [0.0, 1.0])
        assert f == pytest.approx(1.0)

    def test_inverse_power_eta_two(self):
        f = field_amplitude(FieldModel.inverse_power(2.0), [0.0, 0.0], [0.0, 2.0])
        assert f == pytest.approx(0.25)

    def test_periodic_quarter_wave(self):
        f = field_amplitude(FieldModel.periodic(0.0), [np.pi / 2, 0.0], [1.0, 0.0])
        assert f == pytest.approx(1.0)

    def test_linear_and_quadratic(self):
        assert field_amplitude(FieldModel.linear(), [1.0, 2.0], [3.0, -1.0]) == pytest.approx(1.0)
        assert field_amplitude(FieldModel.quadratic(), [1.0, 2.0], [3.0, -1.0]) == pytest.approx(1.0)

    def test_coincident_raises(self):
        with pytest.raises(CoincidentSourceSensor):
            field_amplitude(FieldModel.inverse_power(1.0), [1.0, 1.0], [1.0, 1.0])

    def test_eta_must_be_positive(self):
        with pytest.raises(ValueError):
            FieldModel.inverse_power(0.0)


class TestSamplingVector:
    def test_reciprocal_distances(self):
        arr = SensorArray(np.array([[1.0, 0.0], [2.0, 0.0]]))
        s = sampling_vector(FieldModel.inverse_power(1.0), [0.0, 0.0], arr)
        assert s == pytest.approx([1.0, 0.5])

    def test_linear_dot_products(self):
        arr = SensorArray(np.array([[0.0, 0.0], [1.0, 1.0]]))
        s = sampling_vector(FieldModel.linear(), [1.0, 0.0], arr)
        assert s == pytest.approx([0.0, 1.0])

    def test_source_on_sensor_raises(self):
        arr = SensorArray(np.array([[1.0, 0.0], [2.0, 0.0]]))
        with pytest.raises(CoincidentSourceSensor):
            sampling_vector(FieldModel.inverse_power(1.0), [1.0, 0.0], arr)

    def test_batch_matches_single(self):
        arr = SensorArray(np.array([[0.5, 0.1], [-0.4, 0.7], [0.0, -0.9]]))
        sources = np.array([[2.0, 1.0], [-1.5, 2.5]])
        batch = sampling_vectors(FieldModel.inverse_power(1.5), sources, arr)
        for i, src in enumerate(sources):
            assert batch[i] == pytest.approx(
                sampling_vector(FieldModel.inverse_power(1.5), src, arr)
            )

    @given(c=st.floats(min_value=0.1, max_value=10.0))
    @settings(max_examples=25, deadline=None)
    def test_scaling_covariance(self, c):
        # scaling every position by c scales inverse-power amplitudes by c^-eta
        eta = 1.7
        arr = SensorArray(np.array([[1.0, 0.0], [2.0, 1.0], [0.0, 3.0]]))
        src = np.array([-1.0, -2.0])
        base = sampling_vector(FieldModel.inverse_power(eta), src, arr)
        scaled_arr = SensorArray(arr.positions * c)
        scaled = sampling_vector(FieldModel.inverse_power(eta), src * c, scaled_arr)
        assert scaled == pytest.approx(base * c ** (-eta))

    @given(perm_seed=st.integers(min_value=0, max_value=2**31 - 1))
    @settings(max_examples=25, deadline=None)
    def test_permutation_equivariance(self, perm_seed):
        arr = SensorArray(np.array([[1.0, 0.0], [2.0, 1.0], [0.0, 3.0], [-1.0, 1.5]]))
        src = np.array([0.3, -0.8])
        s = sampling_vector(FieldModel.inverse_power(1.0), src, arr)
        perm = np.random.default_rng(perm_seed).permutation(4)
        s_perm = sampling_vector(
            FieldModel.inverse_power(1.0), src, SensorArray(arr.positions[perm])
        )
        assert s_perm == pytest.approx(s[perm])


class TestJacobian:
    def test_linear_field_spatial_columns(self):
        arr = SensorArray(np.array([[1.0, 2.0], [-0.5, 0.3], [0.7, -1.1]]))
        beta0 = 1.3
        jac = sampling_map_jacobian(FieldModel.linear(), arr, beta0, [0.4, -0.2])
        assert jac[:, 1:] == pytest.approx(beta0 * arr.positions, abs=1e-6)

    def test_strength_column_is_sampling_vector(self):
        arr = SensorArray(np.array([[1.0, 0.0], [0.0, 2.0]]))
        model = FieldModel.inverse_power(1.0)
        x0 = np.array([3.0, 3.0])
        jac = sampling_map_jacobian(model, arr, 2.0, x0)
        assert jac[:, 0] == pytest.approx(sampling_vector(model, x0, arr), rel=1e-9)

    def test_strength_direction_matches_direct_evaluation(self):
        # F_l (dbeta, 0, ..) equals the exact change of F in the strength slot
        arr = SensorArray(np.array([[1.0, 0.0], [0.0, 2.0], [2.0, 2.0]]))
        model = FieldModel.inverse_power(2.0)
        beta0, x0, dbeta = 1.7, np.array([3.0, -1.0]), 0.35
        jac = sampling_map_jacobian(model, arr, beta0, x0)
        f0 = beta0 * sampling_vector(model, x0, arr)
        f1 = (beta0 + dbeta) * sampling_vector(model, x0, arr)
        assert jac[:, 0] * dbeta == pytest.approx(f1 - f0, rel=1e-9)

    @pytest.mark.parametrize("kind", ["inverse_power", "periodic", "quadratic"])
    def test_first_order_remainder_is_quadratic(self, kind):
        model = {
            "inverse_power": FieldModel.inverse_power(1.0),
            "periodic": FieldModel.periodic(0.4),
            "quadratic": FieldModel.quadratic(),
        }[kind]
        arr = SensorArray(np.array([[0.5, 0.1], [-0.3, 0.8], [0.9, -0.4]]))
        beta0, x0 = 1.1, np.array([2.2, 1.4])
        jac = sampling_map_jacobian(model, arr, beta0, x0)

        def remainder(step):
            dv = step * np.array([0.6, -0.7, 0.4])
            f0 = beta0 * sampling_vector(model, x0, arr)
            f1 = (beta0 + dv[0]) * sampling_vector(model, x0 + dv[1:], arr)
            return np.linalg.norm(f1 - f0 - jac @ dv)

        r1, r2 = remainder(1e-3), remainder(5e-4)
        assert r1 / r2 >= 1.9  # halving the step shrinks the remainder ~4x


class TestPresets:
    def test_line_equal_spacing(self):
        arr = preset_array("line", n=5, start=-1.0, stop=1.0)
        assert arr.positions[:, 0] == pytest.approx([-1.0, -0.5, 0.0, 0.5, 1.0])

    def test_cube3_excludes_center(self):
        arr = preset_array("cube3")
        assert arr.n_sensors == 26
        assert not np.any(np.all(arr.positions == 0.0, axis=1))

    def test_square_corners(self):
        arr = preset_array("square", side=2.0)
        assert arr.n_sensors == 4
        assert sorted(map(tuple, arr.positions.tolist())) == [
            (-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0),
        ]

    def test_hexagon_on_circle(self):
        arr = preset_array("hexagon", radius=2.0)
        assert np.linalg.norm(arr.positions, axis=1) == pytest.approx(np.full(6, 2.0))

    def test_two_circles_counts_and_radii(self):
        arr = preset_array("two_circles", n_inner=3, n_outer=4, r_inner=1.0, r_outer=2.0)
        r = np.linalg.norm(arr.positions, axis=1)
        assert r[:3] == pytest.approx(np.ones(3))
        assert r[3:] == pytest.approx(np.full(4, 2.0))

    def test_square_lattice_row_major(self):
        arr = preset_array("square_lattice", nx=3, ny=2, spacing=0.5)
        assert arr.n_sensors == 6
        assert arr.positions[1] == pytest.approx([0.5, 0.0])
        assert arr.positions[3] == pytest.approx([0.0, 0.5])

    def test_line_midpoints_exclude_endpoints(self):
        arr = preset_array("line_mid", n=4, start=0.0, stop=1.0)
        assert arr.positions[:, 0] == pytest.approx([0.125, 0.375, 0.625, 0.875])

    def test_unknown_preset(self):
        with pytest.raises(InvalidPresetParams):
            preset_array("dodecahedron")

    def test_bad_params(self):
        with pytest.raises(InvalidPresetParams):
            preset_array("line", n=0)
        with pytest.raises(InvalidPresetParams):
            preset_array("two_circles", n_inner=2, n_outer=2, r_inner=2.0, r_outer=1.0)

    def test_duplicate_positions_rejected(self):
        with pytest.raises(ValueError):
            SensorArray(np.array([[0.0, 0.0], [0.0, 0.0]]))

    def test_positions_immutable(self):
        arr = preset_array("square")
        with pytest.raises(ValueError):
            arr.positions[0, 0] = 5.0


class TestDiscCoverings:
    def test_sunflower_inside_disc(self):
        pts = sunflower_disc(50, center=(1.0, -2.0), radius=0.7)
        assert pts.shape == (50, 2)
        assert np.all(np.linalg.norm(pts - [1.0, -2.0], axis=1) <= 0.7 + 1e-12)

    def test_halton_nested_prefixes(self):
        full = halton_disc(20, radius=1.3)
        prefix = halton_disc(12, radius=1.3)
        assert full[:12] == pytest.approx(prefix)
        assert np.all(np.linalg.norm(full, axis=1) <= 1.3 + 1e-12)
