import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from treedecide.node import (
    MeanDiff,
    deadlock_eigenvalues,
    deadlock_mbar,
    from_mean_diff,
    node_jacobian,
    seeley_rhs,
    sigma_crit,
    to_mean_diff,
    v_crit,
)
from treedecide.numerics import IntegratorConfig, integrate, numerical_jacobian

# Frozen from scipy.optimize.brentq on the symmetric equilibrium condition
# v(1-2m) - m/v + v m (1-2m) - sigma m^2 = 0, independent of the closed form.
MBAR_125 = 0.30832760198218007
MBAR_5 = 0.44009131753741454
# Frozen from brentq on 4v^3/(v^2-1)^2 = 4.
V_CRIT_4 = 1.905166167754019

values = st.floats(0.05, 20.0)
sigmas = st.floats(0.05, 20.0)


@st.composite
def simplex_points(draw):
    a = draw(st.floats(0.0, 1.0))
    b = draw(st.floats(0.0, 1.0))
    if a + b > 1.0:
        a, b = 1.0 - a, 1.0 - b
    return np.array([a, b])


class TestRhs:
    def test_hand_evaluation(self):
        # mU = 0.4: 0.5 - 0.24 + 0.15 - 0.36 = 0.05 for each component
        out = seeley_rhs([0.3, 0.3], [1.25, 1.25], 4.0)
        assert out == pytest.approx([0.05, 0.05], abs=1e-15)
        assert out[0] == out[1]

    def test_fully_uncommitted(self):
        assert np.allclose(seeley_rhs([0.0, 0.0], [2.0, 3.0], 4.0), [2.0, 3.0])

    @pytest.mark.parametrize("v, sigma", [(1.25, 4.0), (5.0, 4.0), (0.5, 1.0), (3.0, 0.1)])
    def test_deadlock_is_equilibrium(self, v, sigma):
        mb = deadlock_mbar(v, sigma)
        assert np.max(np.abs(seeley_rhs([mb, mb], [v, v], sigma))) < 1e-12

    @pytest.mark.parametrize(
        "m, v, sigma",
        [([0.2, 0.2], [0.0, 1.0], 4.0), ([0.2, 0.2], [1.0, 1.0], 0.0), ([np.nan, 0.1], [1.0, 1.0], 4.0), ([0.1], [1.0], 4.0)],
    )
    def test_rejects(self, m, v, sigma):
        with pytest.raises(ValueError):
            seeley_rhs(m, v, sigma)

    def test_broadcasts(self, rng):
        m = rng.dirichlet(np.ones(3), size=(4, 5))[..., :2]
        v = rng.uniform(0.5, 3.0, size=(4, 5, 2))
        out = seeley_rhs(m, v, 2.0)
        assert out.shape == (4, 5, 2)
        assert np.allclose(out[2, 3], seeley_rhs(m[2, 3], v[2, 3], 2.0))

    @given(simplex_points(), values, values, sigmas)
    def test_swap_equivariance_exact(self, m, v1, v2, sigma):
        a = seeley_rhs(m[::-1], [v2, v1], sigma)
        b = seeley_rhs(m, [v1, v2], sigma)[::-1]
        assert np.array_equal(a, b)

    @given(st.floats(0.0, 1.0), values, values, sigmas)
    def test_boundary_inflow(self, m1, v1, v2, sigma):
        # on mU = 0 the total commitment cannot grow
        rate = seeley_rhs([m1, 1.0 - m1], [v1, v2], sigma)
        assert rate.sum() <= 1e-12
        # on m_i = 0 the component cannot decrease
        assert seeley_rhs([0.0, m1], [v1, v2], sigma)[0] >= -1e-12

    def test_trajectories_stay_in_simplex(self, rng):
        for _ in range(20):
            m0 = rng.dirichlet(np.ones(3))[:2]
            v = rng.uniform(0.3, 6.0, 2)
            traj = integrate(lambda m: seeley_rhs(m, v, 4.0), m0, IntegratorConfig(t_final=20.0))
            assert traj.x.min() >= -1e-9 and traj.x.sum(axis=1).max() <= 1 + 1e-9


class TestJacobian:
    def test_matches_finite_differences(self, rng):
        for _ in range(100):
            m = rng.dirichlet(np.ones(3))[:2]
            v = rng.uniform(0.2, 8.0, 2)
            sigma = rng.uniform(0.1, 10.0)
            fd = numerical_jacobian(lambda x: seeley_rhs(x, v, sigma), m)
            assert np.max(np.abs(node_jacobian(m, v, sigma) - fd)) < 1e-6

    def test_symmetric_at_deadlock(self):
        mb = deadlock_mbar(1.25, 4.0)
        j = node_jacobian([mb, mb], [1.25, 1.25], 4.0)
        assert j[0, 1] == pytest.approx(j[1, 0], abs=1e-15)
        assert j[0, 0] == pytest.approx(j[1, 1], abs=1e-15)

    @pytest.mark.parametrize("v", [1.25, 1.9, 5.0, 8.0])
    def test_deadlock_eigenvalues(self, v):
        mb = deadlock_mbar(v, 4.0)
        j = node_jacobian([mb, mb], [v, v], 4.0)
        # eigenvectors of a symmetric 2x2 with equal diagonal: (1,-1) and (1,1)
        lam1 = j[0, 0] - j[0, 1]
        lam2 = j[0, 0] + j[0, 1]
        assert deadlock_eigenvalues(v, 4.0) == pytest.approx((lam1, lam2), abs=1e-12)
        assert np.sort(np.linalg.eigvals(j).real) == pytest.approx(np.sort([lam1, lam2]), abs=1e-12)

    def test_lambda1_vanishes_at_critical_value(self):
        lam1, lam2 = deadlock_eigenvalues(v_crit(4.0), 4.0)
        assert abs(lam1) < 1e-8 and lam2 < 0

    def test_single_sign_change(self):
        grid = np.linspace(1.0 + 1e-6, 10.0, 20001)
        lam1 = np.array([deadlock_eigenvalues(v, 4.0)[0] for v in grid])
        changes = np.nonzero(np.diff(np.sign(lam1)))[0]
        assert changes.size == 1
        k = changes[0]
        assert grid[k] - 1e-6 <= V_CRIT_4 <= grid[k + 1] + 1e-6
        # linear interpolation of the crossing
        v_star = grid[k] - lam1[k] * (grid[k + 1] - grid[k]) / (lam1[k + 1] - lam1[k])
        assert abs(v_star - V_CRIT_4) < 1e-6


class TestCritical:
    def test_sigma_crit_at_two(self):
        assert sigma_crit(2.0) == pytest.approx(32.0 / 9.0, rel=1e-15)

    def test_sigma_crit_near_published_value(self):
        assert sigma_crit(1.9058) == pytest.approx(4.0, abs=5e-3)

    def test_pole(self):
        assert sigma_crit(1.0 + 1e-6) > 1e11

    @pytest.mark.parametrize("v", [1.0, 0.5, -2.0, np.inf])
    def test_sigma_crit_domain(self, v):
        with pytest.raises(ValueError):
            sigma_crit(v)

    def test_v_crit_oracle(self):
        assert v_crit(4.0) == pytest.approx(V_CRIT_4, rel=1e-12)
        assert abs(v_crit(4.0) - 1.9058) < 1e-3

    def test_v_crit_inverse(self):
        assert v_crit(32.0 / 9.0) == pytest.approx(2.0, rel=1e-12)

    @pytest.mark.parametrize("sigma", [0.5, 1.0, 4.0, 10.0, 1e-3, 1e4])
    def test_round_trip(self, sigma):
        assert sigma_crit(v_crit(sigma)) == pytest.approx(sigma, rel=1e-10)

    @pytest.mark.parametrize("sigma", [0.0, -1.0, np.nan])
    def test_v_crit_domain(self, sigma):
        with pytest.raises(ValueError):
            v_crit(sigma)

    def test_sigma_crit_decreasing(self):
        s = sigma_crit(np.linspace(1.001, 100.0, 5000))
        assert np.all(np.diff(s) < 0)


class TestDeadlock:
    def test_oracle_values(self):
        assert deadlock_mbar(1.25, 4.0) == pytest.approx(MBAR_125, rel=1e-14)
        assert deadlock_mbar(5.0, 4.0) == pytest.approx(MBAR_5, rel=1e-14)
        assert deadlock_mbar(1.25, 4.0) ** 2 == pytest.approx(0.09507, abs=1e-5)

    def test_increasing_and_bounded(self):
        mb = deadlock_mbar(np.linspace(1.0, 10.0, 1000), 4.0)
        assert np.all(np.diff(mb) > 0)
        assert np.all((mb > 0) & (mb < 0.5))

    @given(values, sigmas)
    def test_bounds(self, v, sigma):
        assert 0 < deadlock_mbar(v, sigma) < 0.5

    def test_rejects(self):
        with pytest.raises(ValueError):
            deadlock_mbar(0.0, 4.0)
        with pytest.raises(ValueError):
            deadlock_mbar(1.0, -1.0)


class TestMeanDiff:
    def test_example(self):
        md = to_mean_diff([0.4, 0.2], [3.0, 1.0])
        assert md.dm == pytest.approx(0.2) and md.mbar == pytest.approx(0.3)
        assert md.dv == 2.0 and md.vbar == 2.0 and md.alpha == 1.0

    def test_symmetric(self):
        assert to_mean_diff([0.25, 0.25], [1.0, 1.0]).dm == 0.0

    def test_round_trip(self, rng):
        m = rng.dirichlet(np.ones(3), size=1000)[:, :2]
        v = rng.uniform(0.1, 10.0, size=(1000, 2))
        err = 0.0
        for mi, vi in zip(m, v):
            mm, vv = from_mean_diff(to_mean_diff(mi, vi), slack=1e-15)
            err = max(err, np.max(np.abs(mm - mi)), np.max(np.abs(vv - vi)) / np.max(vi))
        assert err < 1e-14

    @pytest.mark.parametrize(
        "md", [MeanDiff(0.5, 0.1, 0.0, 1.0), MeanDiff(0.0, 0.6, 0.0, 1.0), MeanDiff(0.0, 0.2, 2.0, 1.0)]
    )
    def test_rejects(self, md):
        with pytest.raises(ValueError):
            from_mean_diff(md)
