"""Randomized invariant batteries behind ``qcodebound verify``.

Each check returns a ``CheckResult`` with the number of trials and the worst
slack observed (positive means the inequality held with room to spare).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

from . import channel as chmod
from . import exponent as ex
from . import gfsym, simkit


@dataclass
class CheckResult:
    name: str
    trials: int
    worst_slack: float
    passed: bool

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name},{self.trials},{self.worst_slack + 0.0:.6e},{status}"


def _rand_vec(rng, n, d):
    return gfsym.SymplecticVector(tuple(int(c) for c in rng.integers(0, d, 2 * n)), d)


def check_bilinearity(rng, trials=1000) -> CheckResult:
    worst = 0.0
    for i in range(trials):
        d = (2, 3, 5)[i % 3]
        n = int(rng.integers(1, 4))
        x, y, z = (_rand_vec(rng, n, d) for _ in range(3))
        a, b = (int(t) for t in rng.integers(0, d, 2))
        lhs = gfsym.symplectic_form(x.scale(a) + y.scale(b), z)
        rhs = (a * gfsym.symplectic_form(x, z) + b * gfsym.symplectic_form(y, z)) % d
        anti = (gfsym.symplectic_form(x, y) + gfsym.symplectic_form(y, x)) % d
        worst = max(worst, float(lhs != rhs), float(anti != 0))
    return CheckResult("gfsym.bilinear_antisymmetric", trials, -worst, worst == 0)


def check_duality(rng, trials=100) -> CheckResult:
    bad = 0
    for i in range(trials):
        d = (2, 3, 5)[i % 3]
        n = int(rng.integers(1, 4))
        k = int(rng.integers(0, 2 * n + 1))
        L = gfsym.SymplecticSubspace([_rand_vec(rng, n, d) for _ in range(k)], n, d)
        perp = gfsym.dual_space(L)
        if gfsym.dual_space(perp) != L or L.dim + perp.dim != 2 * n:
            bad += 1
    return CheckResult("gfsym.duality_involution", trials, -float(bad), bad == 0)


def check_isotropic_census(rng=None) -> CheckResult:
    cases = [(2, 1, 2), (3, 1, 2), (3, 2, 2), (2, 1, 3)]
    worst = 0.0
    ok = True
    for n, k, d in cases:
        obs, formula = gfsym.isotropic_ratio_census(n, k, d)
        ok &= obs == formula
        worst = max(worst, abs(float(obs - formula)))
    ok &= gfsym.isotropic_ratio_census(2, 1, 2)[0] == Fraction(7, 15)
    return CheckResult("gfsym.isotropic_census", len(cases), -worst, ok)


def check_types(rng=None, nmax=6) -> CheckResult:
    worst = math.inf
    ok = True
    for n in range(1, nmax + 1):
        census = gfsym.types_census(n, 2)
        ok &= len(census) <= (n + 1) ** 3
        ok &= sum(census.values()) == 4**n
        for counts, size in census.items():
            h = gfsym._count_entropy(counts, n, 2)
            slack = 2 ** (n * h) - size
            worst = min(worst, slack / 2 ** (n * h))
            ok &= slack >= -1e-9 * size
        worst = min(worst, ((n + 1) ** 3 - len(census)) / (n + 1) ** 3)
    return CheckResult("gfsym.type_bounds", nmax, worst, ok)


def check_leaders(rng, trials=20) -> CheckResult:
    bad = 0
    for i in range(trials):
        n, d = (2, 2) if i % 2 else (3, 2)
        fam = list(gfsym.enumerate_self_orthogonal(n, 1, d))
        L = fam[int(rng.integers(len(fam)))]
        leaders = gfsym.min_entropy_coset_leaders(L)
        perp = gfsym.dual_space(L)
        for a in leaders:
            for b in leaders:
                if a != b and (b - a) in perp:
                    bad += 1
    return CheckResult("gfsym.coset_leader_premise", trials, -float(bad), bad == 0)


def check_representation_independence(rng, trials=50) -> CheckResult:
    worst = 0.0
    for _ in range(trials):
        d = 2 if rng.random() < 0.5 else 3
        ch = chmod.random_channel(d, rng, rank=int(rng.integers(1, d * d + 1)))
        r = len(ch.kraus)
        v = chmod.random_unitary(r, rng)
        mixed = [sum(v[i, j] * ch.kraus[j] for j in range(r)) for i in range(r)]
        p1 = chmod.error_distribution(ch).probs
        p2 = chmod.error_distribution(chmod.QuantumChannel(mixed, d=d)).probs
        worst = max(worst, float(np.max(np.abs(p1 - p2))))
    return CheckResult("channel.representation_independence", trials, 1e-10 - worst, worst <= 1e-10)


def check_orthonormality(rng=None) -> CheckResult:
    worst = 0.0
    for d in (2, 3, 5):
        b = chmod.standard_error_basis(d)
        g = np.array([[b.inner(x, y) for y in b.operators] for x in b.operators])
        worst = max(worst, float(np.max(np.abs(g - np.eye(d * d)))))
    return CheckResult("channel.basis_orthonormal", 3, 1e-12 - worst, worst <= 1e-12)


def check_expansion(rng, trials=100) -> CheckResult:
    worst = 0.0
    for i in range(trials):
        d = (2, 3, 5)[i % 3]
        b = chmod.standard_error_basis(d)
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        c = chmod.expand_in_error_basis(a, b)
        worst = max(worst, float(np.max(np.abs(sum(ci * n for ci, n in zip(c, b.operators)) - a))))
    return CheckResult("channel.expansion_roundtrip", trials, 1e-12 - worst, worst <= 1e-12)


def check_choi_roundtrip(rng, trials=50) -> CheckResult:
    worst = 0.0
    for i in range(trials):
        d = (2, 3)[i % 2]
        m = chmod.choi_state(chmod.random_channel(d, rng))
        worst = max(worst, float(np.max(np.abs(chmod.choi_state(chmod.kraus_from_choi(m, d)) - m))))
    return CheckResult("channel.choi_roundtrip", trials, 1e-9 - worst, worst <= 1e-9)


def check_eq13(rng=None) -> CheckResult:
    worst = 0.0
    for g in np.linspace(0, 1, 101):
        direct = ex.capacity_lower_bound(chmod.error_distribution(chmod.amplitude_damping(g)))
        worst = max(worst, abs(direct - ex.amplitude_damping_bound(g)))
    return CheckResult("exponent.amplitude_damping_closed_form", 101, 1e-10 - worst, worst <= 1e-10)


def _random_dist(rng, d=2) -> chmod.ErrorDistribution:
    p = rng.dirichlet(np.ones(d * d) * 0.7)
    if rng.random() < 0.25:
        p[int(rng.integers(d * d))] = 0.0
        p /= p.sum()
    return chmod.ErrorDistribution(d, p)


def check_solver_agreement(rng, trials=50) -> CheckResult:
    worst = 0.0
    for i in range(trials):
        P = _random_dist(rng, 2 if i % 5 else 3)
        rate = float(rng.uniform(0, 1))
        a = ex.exponent_E(rate, P).value
        b = ex.exponent_E_tilted(rate, P, cross_check=False).value
        worst = max(worst, abs(a - b))
    return CheckResult("exponent.solver_agreement", trials, 1e-6 - worst, worst <= 1e-6)


def check_monotone_and_zero_set(rng, trials=20) -> CheckResult:
    worst = math.inf
    grid = np.linspace(0, 1, 21)
    for _ in range(trials):
        P = _random_dist(rng)
        vals = [ex.exponent_E_tilted(r, P, cross_check=False).value for r in grid]
        worst = min(worst, min(a - b for a, b in zip(vals, vals[1:])) + 1e-9)
        cap = ex.capacity_lower_bound(P)
        for r, v in zip(grid, vals):
            if r >= cap:
                worst = min(worst, 1e-6 - v)
            else:
                worst = min(worst, v)
    return CheckResult("exponent.monotone_zero_set", trials, worst, worst >= 0)


def check_convexity(rng, trials=1000) -> CheckResult:
    worst = math.inf
    for _ in range(trials):
        P = _random_dist(rng)
        rate = float(rng.uniform(0, 1))
        q1 = rng.dirichlet(np.ones(4)) * P.support
        q2 = rng.dirichlet(np.ones(4)) * P.support
        q1, q2 = q1 / q1.sum(), q2 / q2.sum()
        lam = float(rng.uniform(0, 1))
        f = lambda q: ex.exponent_objective(q, P.probs, rate, 2)  # noqa: E731
        slack = lam * f(q1) + (1 - lam) * f(q2) + 1e-12 - f(lam * q1 + (1 - lam) * q2)
        worst = min(worst, slack)
    return CheckResult("exponent.convexity", trials, worst, worst >= 0)


def check_preprocessing_inequality(rng, trials=200) -> CheckResult:
    worst = math.inf
    for i in range(trials):
        ch = chmod.random_channel(2, rng, rank=int(rng.integers(1, 5)))
        rep = ex.bound_comparison(ch, seed=i)
        worst = min(worst, rep.slack)
    return CheckResult("exponent.preprocessing_inequality", trials, worst + 1e-8, worst >= -1e-8)


def check_bound_ordering(rng=None) -> CheckResult:
    worst = math.inf
    for g in np.linspace(0, 1, 101):
        f = ex.amplitude_damping_bound(g)
        gg = 1 - ex.h1(ex.amplitude_damping_p_prime(g))
        worst = min(worst, f - gg)
    return CheckResult("exponent.bound_ordering", 101, worst, worst >= -1e-12)


def _random_code(rng, n, d=2):
    k = int(rng.integers(1, n + 1))
    fam = list(gfsym.enumerate_self_orthogonal(n, n - k, d))
    return fam[int(rng.integers(len(fam)))]


def check_residual_bound(rng, trials=200) -> CheckResult:
    worst = math.inf
    for _ in range(trials):
        n = int(rng.integers(1, 4))
        L = _random_code(rng, n)
        ch = chmod.random_channel(2, rng, rank=int(rng.integers(1, 3)))
        chn = chmod.tensor_power(ch, n)
        codes = simkit.build_codes(L)
        code = codes[int(rng.integers(len(codes)))]
        rec = simkit.build_recovery(code)
        psi = simkit.random_code_state(code, rng)
        J = code.leaders if rng.random() < 0.5 else simkit.enlarge_correctable_set(L, code.leaders)
        slack = simkit.state_fidelity(psi, chn, rec) - simkit.residual_lower_bound(psi, chn, J)
        worst = min(worst, slack)
    return CheckResult("simkit.residual_bound_soundness", trials, worst + 1e-8, worst >= -1e-8)


def check_code_structure(rng, trials=20) -> CheckResult:
    worst = 0.0
    for _ in range(trials):
        n = int(rng.integers(1, 4))
        L = _random_code(rng, n)
        for code in simkit.build_codes(L):
            cb = code.code_basis
            for g, tau in zip(code.generators(), code.syndrome):
                worst = max(worst, float(np.max(np.abs(g @ cb - tau * cb))))
            rec = simkit.build_recovery(code)
            worst = max(worst, rec.tp_error() * 1e-1)
    return CheckResult("simkit.eigenspace_and_tp", trials, 1e-10 - worst, worst <= 1e-10)


def check_damping_code(rng=None) -> CheckResult:
    L = gfsym.SymplecticSubspace.from_strings(["0101"])
    J0 = [gfsym.SymplecticVector.from_string(s) for s in ("0000", "1000")]
    worst = 0.0
    gammas = [0.1, 0.3, 0.5]
    for g in gammas:
        rep = simkit.ensemble_check(L, chmod.amplitude_damping(g), leaders=J0, starts=8)
        for r in rep.per_code:
            worst = max(worst, abs(r.min_fidelity - (1 - g)), abs(r.min_avg_fidelity_upper - (1 - g / 2)))
        worst = max(worst, abs(rep.rhs - 3 * g / 4))
        if rep.verdict != "confirmed":
            worst = math.inf
    return CheckResult("simkit.damping_code", len(gammas), 1e-6 - worst, worst <= 1e-6)


SUITES: dict[str, list[Callable]] = {
    "gfsym": [check_bilinearity, check_duality, check_isotropic_census, check_types, check_leaders],
    "channel": [check_orthonormality, check_representation_independence, check_expansion, check_choi_roundtrip],
    "exponent": [
        check_eq13,
        check_solver_agreement,
        check_monotone_and_zero_set,
        check_convexity,
        check_preprocessing_inequality,
        check_bound_ordering,
    ],
    "simkit": [check_code_structure, check_residual_bound, check_damping_code],
}


def run_suite(suite: str, seed: int = 0) -> list[CheckResult]:
    names = list(SUITES) if suite == "all" else [suite]
    if any(s not in SUITES for s in names):
        raise ValueError(f"unknown suite {suite!r}; choose from {sorted(SUITES) + ['all']}")
    out = []
    for i, name in enumerate(names):
        for j, check in enumerate(SUITES[name]):
            rng = np.random.default_rng([seed, i, j])
            out.append(check(rng))
    return out
