import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neutral_obsctrl import (
    ComplexRegion,
    ConstantKernel,
    M2State,
    NeutralSystem,
    SampledKernel,
    ZeroKernel,
    delta_matrix,
    in_domain,
    m2_inner,
    m2_norm,
    transpose_system,
    validate_system,
)
from neutral_obsctrl.model import phi1, trapezoid_weights


def zero_system(n):
    return NeutralSystem(np.zeros((n, n)), np.eye(n), np.eye(n))


class TestValidateSystem:
    def test_well_formed(self):
        sys = NeutralSystem(np.eye(2), np.ones((2, 1)), np.ones((1, 2)), ConstantKernel(np.eye(2)))
        assert validate_system(sys) == []

    def test_b_rows(self):
        sys = NeutralSystem(np.eye(2), np.ones((3, 1)), np.ones((1, 2)))
        problems = validate_system(sys)
        assert len(problems) == 1 and "B" in problems[0]

    def test_sampled_kernel_one_node(self):
        sys = NeutralSystem(np.eye(1), np.ones((1, 1)), np.ones((1, 1)), SampledKernel(np.ones((1, 1, 1))))
        problems = validate_system(sys)
        assert len(problems) == 1 and "N >= 2" in problems[0]

    def test_kernel_shape(self):
        sys = NeutralSystem(np.eye(2), np.ones((2, 1)), np.ones((1, 2)), A3=ConstantKernel(np.eye(3)))
        assert any("A3" in p for p in validate_system(sys))

    def test_non_square(self):
        sys = NeutralSystem(np.ones((2, 3)), np.ones((2, 1)), np.ones((1, 2)))
        assert "square" in validate_system(sys)[0]

    def test_non_finite(self):
        sys = NeutralSystem(np.array([[np.nan]]), np.ones((1, 1)), np.ones((1, 1)))
        assert any("non-finite" in p for p in validate_system(sys))


class TestTransposeSystem:
    def test_symmetric_identity_output(self):
        A = np.array([[0.0, 0.0], [0.0, 1.0]])
        t = transpose_system(NeutralSystem(A, np.eye(2), np.eye(2)))
        np.testing.assert_array_equal(t.A_minus1, A)
        np.testing.assert_array_equal(t.B, np.eye(2))

    def test_transpose(self):
        t = transpose_system(NeutralSystem(np.array([[0.0, 1.0], [0.0, 0.0]]), np.eye(2), np.eye(2)))
        np.testing.assert_array_equal(t.A_minus1, [[0.0, 0.0], [1.0, 0.0]])

    def test_swaps_io_and_kernels(self, rng):
        K = rng.standard_normal((5, 2, 2))
        sys = NeutralSystem(rng.standard_normal((2, 2)), rng.standard_normal((2, 1)), rng.standard_normal((3, 2)),
                            SampledKernel(K), ConstantKernel(rng.standard_normal((2, 2))), D1=rng.standard_normal((2, 2)))
        t = transpose_system(sys)
        assert t.B.shape == (2, 3) and t.C.shape == (1, 2)
        np.testing.assert_array_equal(t.A2.values, np.swapaxes(K, 1, 2))
        np.testing.assert_array_equal(t.D1, sys.D1.T)
        assert transpose_system(t) == sys

    def test_delta_transposes(self, rng):
        sys = NeutralSystem(rng.standard_normal((3, 3)), np.eye(3), np.eye(3),
                            ConstantKernel(rng.standard_normal((3, 3))), SampledKernel(rng.standard_normal((9, 3, 3))))
        lam = 0.3 + 2.1j
        np.testing.assert_allclose(delta_matrix(transpose_system(sys), lam), delta_matrix(sys, lam).T, atol=1e-14)


class TestDeltaMatrix:
    def test_example1_at_zero(self, example1):
        np.testing.assert_array_equal(delta_matrix(example1, 0.0), np.zeros((2, 2)))

    def test_example1_at_i_pi(self, example1):
        np.testing.assert_allclose(delta_matrix(example1, 1j * np.pi), 2j * np.pi * np.eye(2), atol=1e-14)

    @pytest.mark.parametrize("lam", [0.0, 3.0, -1.5 + 2j, 40j])
    def test_all_zero_system(self, lam):
        np.testing.assert_allclose(delta_matrix(zero_system(3), lam), lam * np.eye(3), atol=1e-14)

    def test_vectorized(self, example2):
        lams = np.array([0.5, 1j, -0.2 + 3j])
        D = delta_matrix(example2, lams)
        assert D.shape == (3, 2, 2)
        for k, lam in enumerate(lams):
            np.testing.assert_allclose(D[k], delta_matrix(example2, lam))

    def test_constant_kernel_laplace(self):
        # int_{-1}^0 e^{lam s} ds = (1 - e^{-lam}) / lam
        sys = NeutralSystem(np.zeros((1, 1)), np.eye(1), np.eye(1), A3=ConstantKernel([[2.0]]))
        lam = 0.7 - 1.3j
        np.testing.assert_allclose(delta_matrix(sys, lam)[0, 0], lam - 2.0 * (1 - np.exp(-lam)) / lam, rtol=1e-14)

    def test_sampled_matches_constant(self):
        const = NeutralSystem(np.eye(1), np.eye(1), np.eye(1), ConstantKernel([[0.4]]), ConstantKernel([[-1.1]]))
        sampled = NeutralSystem(np.eye(1), np.eye(1), np.eye(1), SampledKernel(np.full(7, 0.4)), SampledKernel(np.full(7, -1.1)))
        for lam in (0.0, 0.01, 2.5 + 7j, -3.0):
            np.testing.assert_allclose(delta_matrix(sampled, lam), delta_matrix(const, lam), atol=1e-13)

    def test_sampled_linear_kernel_exact(self):
        # K(s) = s: int_{-1}^0 s e^{lam s} ds = (e^{-lam}(lam + 1) - 1) / lam^2
        sys = NeutralSystem(np.zeros((1, 1)), np.eye(1), np.eye(1), A3=SampledKernel(np.linspace(-1, 0, 5)))
        lam = 1.7 + 0.4j
        expected = lam - (np.exp(-lam) * (lam + 1) - 1) / lam**2
        np.testing.assert_allclose(delta_matrix(sys, lam)[0, 0], expected, rtol=1e-13)

    def test_d1_term(self, example2):
        lam = 0.9
        D = delta_matrix(example2, lam)
        np.testing.assert_allclose(D, [[lam, 0.0], [-np.exp(-lam), lam * (1 - np.exp(-lam))]], atol=1e-15)


class TestPhi1:
    @given(st.complex_numbers(max_magnitude=30, allow_nan=False, allow_infinity=False))
    def test_matches_closed_form(self, z):
        if abs(z) < 1e-3:
            ref = 1 + z / 2 + z * z / 6
        else:
            ref = np.expm1(z) / z
        assert abs(phi1(z) - ref) <= 1e-12 * max(1.0, abs(ref))


class TestInDomain:
    def test_constant_a0(self):
        sys = zero_system(1)
        assert in_domain(sys, M2State([2.0], np.full(9, 2.0)))

    def test_ramp_identity(self):
        sys = NeutralSystem(np.eye(1), np.eye(1), np.eye(1))
        assert in_domain(sys, M2State([1.0], np.linspace(0.0, 1.0, 17)))

    def test_wrong_head(self):
        assert not in_domain(zero_system(2), M2State([1.0, 0.0], np.zeros((9, 2))))

    def test_rough_segment(self):
        seg = np.zeros(9)
        seg[4] = 1e6
        assert not in_domain(zero_system(1), M2State([0.0], seg))

    def test_dimension_mismatch(self):
        assert not in_domain(zero_system(2), M2State([0.0], np.zeros(9)))


class TestM2State:
    def test_from_segment_is_compatible(self, rng, example2):
        x = M2State.from_segment(example2.A_minus1, rng.standard_normal((9, 2)))
        assert in_domain(example2, x)

    def test_inner_product(self):
        x = M2State([1.0, 2.0], np.ones((5, 2)))
        assert m2_inner(x, x) == pytest.approx(5.0 + 2.0)
        assert m2_norm(x) == pytest.approx(np.sqrt(7.0))

    def test_arithmetic(self):
        x = M2State([1.0], np.arange(5.0))
        y = M2State([2.0], np.ones(5))
        z = 2 * x - y
        np.testing.assert_array_equal(z.v, [0.0])
        np.testing.assert_array_equal(z.segment[:, 0], 2 * np.arange(5.0) - 1)

    def test_grid_mismatch(self):
        with pytest.raises(ValueError):
            m2_inner(M2State([0.0], np.zeros(5)), M2State([0.0], np.zeros(9)))

    def test_resample_linear_exact(self):
        x = M2State([0.5], np.linspace(-1, 0, 9))
        np.testing.assert_allclose(x.resample(32).segment[:, 0], np.linspace(-1, 0, 33), atol=1e-15)

    def test_panel_slopes(self):
        x = M2State([0.0], np.linspace(0, 2, 5))
        dm, dp = x.slopes()
        np.testing.assert_allclose(dm, 2.0)
        np.testing.assert_allclose(dp, 2.0)

    def test_trapezoid_weights(self):
        w = trapezoid_weights(4)
        np.testing.assert_allclose(w, [0.125, 0.25, 0.25, 0.25, 0.125])


class TestComplexRegion:
    def test_invalid(self):
        with pytest.raises(ValueError):
            ComplexRegion(1, 0, 0, 1)
        with pytest.raises(ValueError):
            ComplexRegion(0, 1, 0, 1, contour_samples=10)

    def test_geometry(self):
        r = ComplexRegion(-1, 3, -2, 2)
        assert r.center == 1 + 0j
        assert r.contains(3 + 2j) and not r.contains(3.1 + 0j)
        assert r.diameter == pytest.approx(np.hypot(4, 4))

    def test_kernels_equal(self):
        assert ZeroKernel() == ZeroKernel()
        assert ConstantKernel([[1.0]]) == ConstantKernel(np.eye(1))
