import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from qcodebound import channel as chmod
from qcodebound import exponent as ex
from qcodebound.errors import UnsupportedDimensionError


def dual_exponent(rate, probs, d=2):
    """max_{0<=s<=1} s(1-R) - (1+s) log_d sum_x P(x)^{1/(1+s)}."""
    p = np.asarray(probs)
    p = p[p > 0]

    def g(s):
        return s * (1 - rate) - (1 + s) * math.log(np.sum(p ** (1 / (1 + s)))) / math.log(d)

    grid = np.linspace(0, 1, 2001)
    vals = [g(s) for s in grid]
    i = int(np.argmax(vals))
    lo, hi = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = optimize.minimize_scalar(lambda s: -g(s), bounds=(lo, hi), method="bounded", options={"xatol": 1e-12})
    return max(vals[i], -res.fun, 0.0)


def dist(seed, d=2, sparse=False):
    rng = np.random.default_rng(seed)
    p = rng.dirichlet(np.ones(d * d) * 0.7)
    if sparse:
        p[rng.integers(d * d)] = 0
        p /= p.sum()
    return chmod.ErrorDistribution(d, p)


class TestInformation:
    def test_h1_root(self):
        r = ex.h1_root()
        assert abs(r - 0.1893) < 5e-4
        assert abs(ex.h1(r) - 1) < 1e-12

    def test_h1_is_entropy_of_depolarizing(self):
        for p in (0.01, 0.1, 0.3):
            assert ex.h1(p) == pytest.approx(ex.entropy(chmod.ErrorDistribution.depolarizing(p)))

    def test_divergence_off_support(self):
        assert ex.divergence([0.5, 0.5], [1.0, 0.0]) == math.inf
        assert ex.divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(1.0)


class TestExponent:
    @pytest.mark.parametrize("rate", [0.0, 0.25, 0.6, 1.0])
    def test_point_mass(self, rate):
        P = chmod.ErrorDistribution.point_mass(2)
        assert abs(ex.exponent_E(rate, P).value - (1 - rate)) < 1e-9
        assert abs(ex.exponent_E_tilted(rate, P).value - (1 - rate)) < 1e-9

    @pytest.mark.parametrize("seed", range(8))
    def test_matches_dual_exponent(self, seed):
        P = dist(seed, d=3 if seed % 4 == 3 else 2, sparse=seed % 3 == 0)
        for rate in (0.0, 0.2, 0.5, 0.8):
            oracle = dual_exponent(rate, P.probs, P.d)
            assert abs(ex.exponent_E(rate, P).value - oracle) < 1e-6
            assert abs(ex.exponent_E_tilted(rate, P).value - oracle) < 1e-6

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31), st.floats(0, 1))
    def test_zero_set(self, seed, frac):
        P = dist(seed)
        cap = ex.capacity_lower_bound(P)
        if cap >= 1:
            return
        lo = max(cap, 0.0)
        rate = lo + frac * (1 - lo)
        assert ex.exponent_E(rate, P).value < 1e-6
        if cap > 1e-3:
            assert ex.exponent_E(cap * 0.5, P).value > 0

    def test_monotone_nonincreasing(self):
        P = dist(11)
        vals = [ex.exponent_E_tilted(r, P).value for r in np.linspace(0, 1, 21)]
        assert all(a >= b - 1e-9 for a, b in zip(vals, vals[1:]))

    @settings(max_examples=100)
    @given(st.integers(0, 2**31), st.floats(0, 1), st.floats(0, 1))
    def test_objective_convex(self, seed, rate, lam):
        rng = np.random.default_rng(seed)
        P = dist(seed)
        q1, q2 = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
        f = lambda q: ex.exponent_objective(q, P.probs, rate)  # noqa: E731
        assert f(lam * q1 + (1 - lam) * q2) <= lam * f(q1) + (1 - lam) * f(q2) + 1e-12

    def test_minimizer_attains_value(self):
        P = dist(5)
        res = ex.exponent_E(0.3, P)
        assert ex.exponent_objective(res.minimizer, P, 0.3) == pytest.approx(res.value, abs=1e-12)

    def test_identity_values(self):
        P = chmod.error_distribution(chmod.identity_channel())
        assert [round(ex.exponent_E(r, P).value, 9) for r in (0, 0.5, 1)] == [1.0, 0.5, 0.0]

    def test_depolarizing_at_root_is_zero(self):
        P = chmod.ErrorDistribution.depolarizing(ex.h1_root())
        for r in (0.0, 0.5, 1.0):
            assert ex.exponent_E(r, P).value < 1e-6

    def test_rate_validation(self):
        with pytest.raises(ValueError):
            ex.exponent_E(1.5, dist(0))


class TestFiniteLengthBound:
    def test_identity_value(self):
        P = chmod.ErrorDistribution.point_mass(2)
        expected = 1 - 8 * 101**6 * 2.0**-50
        assert ex.finite_length_bound(100, 50, 0.5, P) == pytest.approx(expected, rel=1e-9)

    def test_vacuous_small_n(self):
        P = chmod.ErrorDistribution.depolarizing(0.05)
        assert ex.finite_length_bound(10, 1, 0.1, P) < 0

    def test_k_bound(self):
        with pytest.raises(ValueError):
            ex.finite_length_bound(10, 5, 0.1, dist(0), exponent=0.1)


class TestBounds:
    @pytest.mark.parametrize("g", np.linspace(0, 1, 11))
    def test_closed_form(self, g):
        direct = ex.capacity_lower_bound(chmod.error_distribution(chmod.amplitude_damping(g)))
        assert abs(direct - ex.amplitude_damping_bound(g)) < 1e-10

    @pytest.mark.parametrize("g", [0.0, 0.2, 0.5, 0.9, 1.0])
    def test_p_prime_closed_form(self, g):
        pp, _ = ex.p_prime(chmod.amplitude_damping(g))
        assert abs(pp - (1 - (2 - g + 2 * math.sqrt(1 - g)) / 4)) < 1e-6
        assert ex.amplitude_damping_bound(g) >= 1 - ex.h1(pp) - 1e-12

    def test_p_prime_is_choi_overlap(self):
        # independent oracle: brute-force max over a fine family of entangled states
        rng = np.random.default_rng(3)
        ch = chmod.random_channel(2, rng)
        m = chmod.choi_state(ch)
        pp, eta = ex.p_prime(ch)
        assert np.linalg.norm(eta) == pytest.approx(1.0)
        assert 1 - np.real(eta.conj() @ m @ eta) == pytest.approx(pp, abs=1e-9)
        for _ in range(2000):
            u = chmod.random_unitary(2, rng)
            phi = np.kron(np.eye(2), u) @ (np.array([1, 0, 0, 1]) / math.sqrt(2))
            assert np.real(phi.conj() @ m @ phi) <= 1 - pp + 1e-9

    def test_depolarizing_coincidence(self):
        rep = ex.bound_comparison(chmod.depolarizing(0.1))
        assert rep.p_prime == pytest.approx(0.1, abs=1e-9)
        assert rep.capacity_lb == pytest.approx(1 - ex.h1(0.1), abs=1e-9)
        assert rep.rival_lb == pytest.approx(rep.capacity_lb, abs=1e-8)

    def test_identity(self):
        rep = ex.bound_comparison(chmod.identity_channel())
        assert (rep.capacity_lb, rep.rival_lb, rep.p_prime) == pytest.approx((1, 1, 0), abs=1e-9)

    @pytest.mark.parametrize("seed", range(10))
    def test_preprocessing_inequality(self, seed):
        ch = chmod.random_channel(2, np.random.default_rng(seed))
        rep = ex.bound_comparison(ch, seed=seed)
        assert rep.preprocessed_identity_prob == pytest.approx(1 - rep.p_prime, abs=1e-6)
        assert rep.slack >= -1e-8

    def test_qutrit_rejected(self):
        with pytest.raises(UnsupportedDimensionError):
            ex.bound_comparison(chmod.depolarizing(0.1, d=3))
