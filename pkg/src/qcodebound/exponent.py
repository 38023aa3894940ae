"""Information quantities, the error exponent E(R, P), and capacity bounds.

Entropies and divergences over X = F_d^2 use base-d logarithms, so the
hashing-type bound 1 - H(P) is measured in qudits per channel use. ``h1`` and
the binary entropy are in bits (they only appear for d = 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .channel import (
    ErrorDistribution,
    QuantumChannel,
    choi_state,
    compose_unitary,
    error_distribution,
    standard_error_basis,
)
from .errors import InvariantViolation, SolverInconsistencyError, UnsupportedDimensionError

AGREEMENT_TOL = 1e-6


def _probs(q) -> np.ndarray:
    return np.asarray(getattr(q, "probs", q), dtype=float)


def _base(q, base) -> float:
    if base is not None:
        return base
    return getattr(q, "d", 2)


def entropy(q, base: float | None = None) -> float:
    """Shannon entropy with 0 log 0 = 0; base defaults to the distribution's d."""
    p = _probs(q)
    nz = p[p > 0]
    return float(-np.sum(nz * np.log(nz)) / math.log(_base(q, base)))


def divergence(q, p, base: float | None = None) -> float:
    """D(Q || P); +inf when Q puts mass where P has none."""
    qv, pv = _probs(q), _probs(p)
    if qv.shape != pv.shape:
        raise ValueError("distributions live on different alphabets")
    mask = qv > 0
    if np.any(pv[mask] <= 0):
        return math.inf
    return float(np.sum(qv[mask] * np.log(qv[mask] / pv[mask])) / math.log(_base(q, base)))


def binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1 - x) * math.log2(1 - x)


def h1(p: float) -> float:
    """-p log2 p - (1-p) log2 (1-p) + p log2 3."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    return binary_entropy(p) + p * math.log2(3)


def h1_root() -> float:
    """The p in (0, 1/2) where 1 - h1(p) vanishes."""
    return optimize.brentq(lambda p: 1.0 - h1(p), 1e-6, 0.5, xtol=1e-15)


def exponent_objective(q, p, rate: float, base: float | None = None) -> float:
    """D(Q||P) + |1 - H(Q) - R|^+."""
    return divergence(q, p, base) + max(0.0, 1.0 - entropy(q, base) - rate)


@dataclass(frozen=True)
class ExponentResult:
    value: float
    minimizer: ErrorDistribution
    active_branch: bool  # True when |1 - H(Q*) - R|^+ is strictly positive
    solver_iterations: int
    rate: float = 0.0

    @property
    def entropy_of_minimizer(self) -> float:
        return entropy(self.minimizer)


def _result(qs: np.ndarray, P: ErrorDistribution, rate: float, iters: int) -> ExponentResult:
    q = np.zeros_like(P.probs)
    q[P.support] = qs / qs.sum()
    Q = ErrorDistribution(P.d, q)
    value = exponent_objective(Q, P, rate)
    return ExponentResult(max(value, 0.0), Q, 1.0 - entropy(Q) - rate > 1e-12, iters, rate)


def _check_rate(rate: float) -> None:
    if not 0.0 <= rate <= 1.0:
        raise ValueError("R must lie in [0, 1]")


def exponent_E(rate: float, P: ErrorDistribution) -> ExponentResult:
    """min_Q [ D(Q||P) + |1 - H(Q) - R|^+ ] by direct minimization over the simplex.

    Coordinates outside supp(P) are frozen at zero. The nonsmooth objective is
    handled in epigraph form, min t subject to t >= D and t >= D + 1 - H - R,
    with Q = softmax(w) on the support; the optimum is interior to the support
    simplex, so the softmax chart loses nothing.
    """
    _check_rate(rate)
    p = P.probs[P.support]
    k = p.size
    ln_d = math.log(P.d)
    if k == 1:
        return _result(np.ones(1), P, rate, 0)
    logp = np.log(p)

    def q_of(w):
        z = np.exp(w - w.max())
        return z / z.sum()

    def div(w):
        q = q_of(w)
        return float(np.sum(q * (np.log(q) - logp))) / ln_d

    def ent(w):
        q = q_of(w)
        return float(-np.sum(q * np.log(q))) / ln_d

    def f(w):
        return div(w) + max(0.0, 1.0 - ent(w) - rate)

    starts = [logp.copy(), np.zeros(k), 0.5 * logp]
    best_w, best_val, iters = logp.copy(), f(logp), 0
    for w0 in starts:
        z0 = np.append(w0, f(w0))
        cons = [
            {"type": "ineq", "fun": lambda z: z[-1] - div(z[:-1])},
            {"type": "ineq", "fun": lambda z: z[-1] - div(z[:-1]) - (1.0 - ent(z[:-1]) - rate)},
        ]
        res = optimize.minimize(
            lambda z: z[-1],
            z0,
            jac=lambda z: np.eye(z.size)[-1],
            constraints=cons,
            method="SLSQP",
            options={"ftol": 1e-15, "maxiter": 2000},
        )
        iters += int(res.nit)
        w = res.x[:-1]
        val = f(w)
        if np.isfinite(val) and val < best_val:
            best_w, best_val = w, val
    # polish: the objective is convex, a derivative-free local pass cannot hurt
    res = optimize.minimize(f, best_w, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    iters += int(res.nit)
    if res.fun < best_val:
        best_w = res.x
    return _result(q_of(best_w), P, rate, iters)


def tilted(P: ErrorDistribution, s: float) -> np.ndarray:
    """Q_s proportional to P^{1/(1+s)} on supp(P)."""
    p = P.probs[P.support]
    z = np.exp(np.log(p) / (1.0 + s))
    return z / z.sum()


def exponent_E_tilted(rate: float, P: ErrorDistribution, cross_check: bool = True, grid: int = 401) -> ExponentResult:
    """E(R, P) restricted to the one-parameter family Q_s, s in [0, 1].

    The stationarity conditions of the exponent objective put every minimizer
    on this curve: s = 0 is Q = P, s = 1 the unconstrained minimizer of the
    positive branch, and intermediate s the kink where H(Q) = 1 - R. A grid
    scan brackets the best s and a bounded scalar search refines it. With
    ``cross_check`` the result is compared against ``exponent_E``.
    """
    _check_rate(rate)
    if P.support.sum() == 1:
        res = _result(np.ones(1), P, rate, 0)
    else:
        def g(s):
            q = np.zeros_like(P.probs)
            q[P.support] = tilted(P, s)
            return exponent_objective(q, P.probs, rate, P.d)

        ss = np.linspace(0.0, 1.0, grid)
        vals = np.array([g(s) for s in ss])
        i = int(np.argmin(vals))
        lo, hi = ss[max(i - 1, 0)], ss[min(i + 1, grid - 1)]
        opt = optimize.minimize_scalar(g, bounds=(lo, hi), method="bounded", options={"xatol": 1e-13})
        cands = [(vals[0], 0.0), (vals[-1], 1.0), (vals[i], ss[i]), (opt.fun, opt.x)]
        _, s_best = min(cands)
        res = _result(tilted(P, s_best), P, rate, grid + int(opt.nfev))
    if cross_check:
        primal = exponent_E(rate, P)
        if abs(primal.value - res.value) > AGREEMENT_TOL:
            raise SolverInconsistencyError(
                f"primal E={primal.value:.12g} and tilted E={res.value:.12g} disagree at R={rate}"
            )
    return res


def capacity_lower_bound(P: ErrorDistribution) -> float:
    """1 - H(P) in base d; may be negative."""
    return 1.0 - entropy(P)


def amplitude_damping_bound(gamma: float) -> float:
    """Closed form of 1 - H(P_A) for amplitude damping with parameter gamma."""
    if gamma >= 1.0:
        return 1.0 - binary_entropy(0.5) - 0.5 * binary_entropy(0.5) - 0.5
    g2 = gamma / 2.0
    inner = 0.5 + math.sqrt(1.0 - gamma) / (2.0 - gamma)
    return 1.0 - binary_entropy(g2) - (1.0 - g2) * binary_entropy(inner) - g2


def amplitude_damping_p_prime(gamma: float) -> float:
    return 1.0 - (2.0 - gamma + 2.0 * math.sqrt(1.0 - gamma)) / 4.0


# the rival bound ------------------------------------------------------------


def _entangled_param_matrix() -> np.ndarray:
    """Real-linear map r -> eta = (x, y, -y*, x*) with x = r0 + i r1, y = r2 + i r3."""
    b = np.zeros((4, 4), dtype=complex)
    b[0, 0], b[0, 1] = 1, 1j
    b[1, 2], b[1, 3] = 1, 1j
    b[2, 2], b[2, 3] = -1, 1j
    b[3, 0], b[3, 1] = 1, -1j
    return b


def eta_from_params(r: np.ndarray) -> np.ndarray:
    return _entangled_param_matrix() @ np.asarray(r, dtype=float)


def p_prime(ch: QuantumChannel, seed: int = 0, starts: int = 16, tol: float = 1e-8) -> tuple[float, np.ndarray]:
    """1 - max <eta| Choi |eta> over maximally entangled eta (d = 2 only).

    Projected ascent on the sphere |r|^2 = 1/2 from ``starts`` random points;
    returns p' and the best eta found.
    """
    if ch.d != 2 or ch.m != 1:
        raise UnsupportedDimensionError("p' is only defined here for a single qubit channel")
    m = choi_state(ch)
    b = _entangled_param_matrix()
    s = np.real(b.conj().T @ m @ b)
    s = (s + s.T) / 2
    step = 1.0 / (np.max(np.abs(np.linalg.eigvalsh(s))) + 1e-300)
    radius = math.sqrt(0.5)
    rng = np.random.default_rng(seed)
    best_val, best_r = -np.inf, None
    for _ in range(starts):
        r = rng.standard_normal(4)
        r *= radius / np.linalg.norm(r)
        val = r @ s @ r
        for _ in range(100_000):
            r = r + step * (s @ r)
            r *= radius / np.linalg.norm(r)
            new = r @ s @ r
            if abs(new - val) < tol * 1e-6:
                val = new
                break
            val = new
        if val > best_val:
            best_val, best_r = val, r
    return float(1.0 - best_val), eta_from_params(best_r)


def preprocessing_unitary(eta: np.ndarray) -> np.ndarray:
    """The unitary W with P_{W A}((0,0)) = <eta| Choi |eta> for eta = (x, y, -y*, x*).

    Built as xi(u) with u = sqrt(2) (x*, y*, -y, x); the preprocessing map is
    rho -> xi(u)^dagger rho xi(u), so the returned Kraus multiplier is xi(u)^dagger.
    """
    x, y = eta[0], eta[1]
    u = math.sqrt(2.0) * np.array([np.conj(x), np.conj(y), -y, x])
    xi = u.reshape(2, 2).conj().T  # xi(m) = sum m_ij^* |j><i|
    return xi.conj().T


@dataclass(frozen=True)
class BoundReport:
    capacity_lb: float
    rival_lb: float
    p_prime: float
    maximizing_entangled_state: np.ndarray
    preprocessed_capacity_lb: float
    preprocessed_identity_prob: float

    @property
    def slack(self) -> float:
        return self.preprocessed_capacity_lb - self.rival_lb


def bound_comparison(ch: QuantumChannel, seed: int = 0, tol: float = 1e-8) -> BoundReport:
    """Compare 1 - H(P_A) with 1 - h1(p'), and check the preprocessed inequality."""
    if ch.d != 2:
        raise UnsupportedDimensionError("bound comparison is defined for d = 2")
    basis = standard_error_basis(2)
    cap = capacity_lower_bound(error_distribution(ch, basis))
    pp, eta = p_prime(ch, seed=seed)
    pp = min(max(pp, 0.0), 1.0)
    w = preprocessing_unitary(eta)
    P_ua = error_distribution(compose_unitary(w, ch), basis)
    cap_ua = capacity_lower_bound(P_ua)
    rival = 1.0 - h1(pp)
    if abs(P_ua[(0, 0)] - (1.0 - pp)) > 1e-6:
        raise InvariantViolation(f"P_UA(0,0)={P_ua[(0, 0)]:.10f} differs from 1-p'={1 - pp:.10f}")
    if cap_ua < rival - tol:
        raise InvariantViolation(f"1-H(P_UA)={cap_ua:.12g} falls below 1-h1(p')={rival:.12g}")
    return BoundReport(cap, rival, pp, eta, cap_ua, P_ua[(0, 0)])


def finite_length_bound(n: int, k: int, rate: float, P: ErrorDistribution, exponent: float | None = None) -> float:
    """1 - 2 d^2 (n+1)^{2(d^2-1)} d^{-n E(R,P)}; returned raw, possibly negative."""
    if n < 1:
        raise ValueError("n must be positive")
    _check_rate(rate)
    if not 0 <= k <= math.ceil(rate * n):
        raise ValueError(f"need 0 <= k <= ceil(R n) = {math.ceil(rate * n)}, got k={k}")
    d = P.d
    e = exponent_E(rate, P).value if exponent is None else exponent
    log_term = math.log(2 * d * d) + 2 * (d * d - 1) * math.log(n + 1) - n * e * math.log(d)
    return 1.0 - math.exp(log_term)
