import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from neutral_obsctrl import (
    ConstantKernel,
    DomainViolation,
    M2State,
    NeutralSystem,
    OffGrid,
    SampledKernel,
    convergence_probe,
    output_trace,
    semigroup_state,
    simulate,
)
from neutral_obsctrl.simulate import steps_for, write_trajectory_csv


def neutral_scalar():
    return NeutralSystem(np.eye(1), np.eye(1), np.eye(1))


def zero_system(n):
    return NeutralSystem(np.zeros((n, n)), np.eye(n), np.eye(n))


def ramp_state(N):
    return M2State.from_segment(np.eye(1), np.linspace(-1.0, 0.0, N + 1))


class TestSimulate:
    def test_derivative_propagates(self):
        traj = simulate(neutral_scalar(), ramp_state(32), 3.0, 32)
        np.testing.assert_allclose(traj.z[:, 0], traj.t, atol=1e-13)
        np.testing.assert_allclose(traj.dz_plus, 1.0, atol=1e-13)

    def test_all_zero_constant(self):
        init = M2State.from_segment(np.zeros((2, 2)), np.tile([1.5, -2.0], (17, 1)))
        traj = simulate(zero_system(2), init, 2.0, 16)
        np.testing.assert_allclose(traj.z, np.tile([1.5, -2.0], (traj.z.shape[0], 1)), atol=1e-15)

    def test_example2_hand_solution(self, example2):
        N = 64
        init = M2State.from_segment(example2.A_minus1, np.tile([1.0, 0.0], (N + 1, 1)))
        traj = simulate(example2, init, 1.0, N)
        t = traj.t[N:]
        np.testing.assert_allclose(traj.z[N:, 0], 1.0, atol=1e-14)
        np.testing.assert_allclose(traj.z[N:, 1], t, atol=1e-13)

    def test_distributed_kernel_second_order(self):
        sys = NeutralSystem(np.zeros((1, 1)), np.eye(1), np.eye(1), A3=ConstantKernel([[1.0]]))
        e = convergence_probe(sys, lambda th: np.ones_like(th)[:, None], 2.0, [32, 64, 128, 1024])
        assert np.all(e[:-1] / e[1:] > 3.5)

    def test_sampled_kernel_matches_constant(self):
        a = NeutralSystem(0.5 * np.eye(1), np.eye(1), np.eye(1), ConstantKernel([[0.3]]), ConstantKernel([[-0.7]]))
        b = NeutralSystem(0.5 * np.eye(1), np.eye(1), np.eye(1), SampledKernel(np.full(9, 0.3)), SampledKernel(np.full(9, -0.7)))
        x = M2State.from_function(a.A_minus1, lambda th: np.sin(3 * th)[:, None], 64)
        np.testing.assert_allclose(simulate(a, x, 2.0, 64).z, simulate(b, x, 2.0, 64).z, atol=1e-13)

    def test_control_enters(self):
        sys = zero_system(1)
        traj = simulate(sys, M2State.zeros(1, 16), 1.0, 16, u=np.ones((17, 1)))
        np.testing.assert_allclose(traj.z[16:, 0], traj.t[16:], atol=1e-14)
        traj2 = simulate(sys, M2State.zeros(1, 16), 1.0, 16, u=lambda t: 2 * t[:, None])
        np.testing.assert_allclose(traj2.z[16:, 0], traj2.t[16:] ** 2, atol=1e-14)

    def test_domain_violation(self):
        with pytest.raises(DomainViolation):
            simulate(zero_system(1), M2State([1.0], np.zeros(17)), 1.0, 16)

    def test_mild_solution_head_only(self):
        # z' = z'(t-1) from (v, 0) with v = 1: z jumps to 1 at 0 and the jump repeats at every integer time
        traj = simulate(neutral_scalar(), M2State([1.0], np.zeros(17)), 3.0, 16, check_domain=False)
        z = traj.z[:, 0]
        np.testing.assert_allclose(z[17:32], 1.0, atol=1e-14)  # t in (0, 1)
        np.testing.assert_allclose(z[33:48], 2.0, atol=1e-14)  # t in (1, 2)
        np.testing.assert_allclose(z[49:64], 3.0, atol=1e-14)  # t in (2, 3)
        np.testing.assert_allclose(traj.z_minus[32, 0], 1.0, atol=1e-14)
        np.testing.assert_allclose(z[32], 2.0, atol=1e-14)

    def test_off_grid(self):
        with pytest.raises(OffGrid):
            simulate(neutral_scalar(), ramp_state(16), 0.1, 16)
        assert steps_for(1.5, 16) == 24

    def test_small_N(self):
        with pytest.raises(ValueError):
            simulate(neutral_scalar(), ramp_state(4), 1.0, 4)

    def test_resamples_init(self):
        traj = simulate(neutral_scalar(), ramp_state(8), 1.0, 32)
        np.testing.assert_allclose(traj.z[:, 0], traj.t, atol=1e-13)

    @settings(max_examples=20, deadline=None)
    @given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-3, 3))
    def test_linearity(self, a, b, c):
        sys = NeutralSystem([[0.5]], [[1.0]], [[1.0]], ConstantKernel([[a]]), ConstantKernel([[b]]))
        x = M2State.from_function(sys.A_minus1, lambda th: np.cos(2 * th)[:, None], 32)
        y = M2State.from_function(sys.A_minus1, lambda th: th[:, None] ** 2, 32)
        lhs = simulate(sys, x + c * y, 2.0, 32).z
        rhs = simulate(sys, x, 2.0, 32).z + c * simulate(sys, y, 2.0, 32).z
        np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


class TestSemigroupState:
    def test_round_trip_at_zero(self, rng):
        sys = NeutralSystem([[0.3]], [[1.0]], [[1.0]])
        x = M2State.from_segment(sys.A_minus1, rng.standard_normal(17))
        s = semigroup_state(sys, simulate(sys, x, 1.0, 16), 0.0)
        np.testing.assert_allclose(s.segment, x.segment)
        np.testing.assert_allclose(s.v, x.v)

    def test_all_zero(self):
        sys = zero_system(1)
        x = M2State([0.7], np.full(17, 0.7))
        s = semigroup_state(sys, simulate(sys, x, 2.0, 16), 1.5)
        np.testing.assert_allclose(s.v, 0.7)
        np.testing.assert_allclose(s.segment, 0.7)

    def test_ramp_at_one(self):
        sys = neutral_scalar()
        s = semigroup_state(sys, simulate(sys, ramp_state(16), 2.0, 16), 1.0)
        np.testing.assert_allclose(s.v, 1.0, atol=1e-13)
        np.testing.assert_allclose(s.segment[:, 0], 1.0 + np.linspace(-1, 0, 17), atol=1e-13)

    def test_negative_time(self):
        sys = neutral_scalar()
        with pytest.raises(OffGrid):
            semigroup_state(sys, simulate(sys, ramp_state(16), 1.0, 16), -0.5)

    def test_semigroup_property(self, rng):
        sys = NeutralSystem([[0.4]], [[1.0]], [[1.0]], ConstantKernel([[0.2]]), ConstantKernel([[-0.5]]))
        x = M2State.from_function(sys.A_minus1, lambda th: np.cos(th)[:, None], 32)
        full = simulate(sys, x, 2.0, 32)
        half = simulate(sys, semigroup_state(sys, full, 1.0), 1.0, 32)
        np.testing.assert_allclose(half.z[-1], full.z[-1], atol=1e-12)


class TestOutputTrace:
    def test_current_and_delayed(self):
        sys = neutral_scalar()
        traj = simulate(sys, ramp_state(16), 2.0, 16)
        t = np.linspace(0, 2, 33)
        np.testing.assert_allclose(output_trace(sys, traj, "current")[:, 0], t, atol=1e-13)
        np.testing.assert_allclose(output_trace(sys, traj, "delayed")[:, 0], t - 1, atol=1e-13)

    def test_example2_first_component(self, example2):
        sys = NeutralSystem(example2.A_minus1, example2.B, [[1.0, 0.0]], D1=example2.D1, output_kind="current")
        init = M2State.from_segment(sys.A_minus1, np.tile([1.0, 0.0], (17, 1)))
        np.testing.assert_allclose(output_trace(sys, simulate(sys, init, 1.0, 16)), 1.0)


class TestConvergenceProbe:
    def test_all_zero(self):
        e = convergence_probe(zero_system(1), lambda th: np.ones((th.size, 1)), 2.0, [16, 32, 64])
        np.testing.assert_array_equal(e, 0.0)

    def test_linear_data_exact(self):
        e = convergence_probe(neutral_scalar(), lambda th: th[:, None], 3.0, [16, 32, 64])
        assert np.all(e < 1e-12)

    def test_bad_list(self):
        with pytest.raises(ValueError):
            convergence_probe(neutral_scalar(), lambda th: th[:, None], 1.0, [16, 24])


class TestCsv:
    def test_columns(self, tmp_path):
        sys = neutral_scalar()
        traj = simulate(sys, ramp_state(8), 1.0, 8, u=np.zeros((9, 1)))
        path = tmp_path / "t.csv"
        write_trajectory_csv(traj, path, sys)
        lines = path.read_text().splitlines()
        assert lines[0] == "t,z1,dz1,u1,y1"
        assert len(lines) == 1 + traj.z.shape[0]
        assert lines[1].startswith("-1,")
