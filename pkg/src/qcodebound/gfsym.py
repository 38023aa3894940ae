"""Exact linear algebra over the prime field F_d with the symplectic form.

Vectors of F_d^{2n} are stored interleaved as (u1, v1, ..., un, vn), so that
the i-th pair (u_i, v_i) indexes the error operator X^{u_i} Z^{v_i} on qudit i.
All arithmetic is integer arithmetic mod d; nothing here touches floats except
entropies used to rank coset leaders.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DimensionError, InvariantViolation, ResourceError

ENUMERATION_CAP_BITS = 24


def is_prime(d: int) -> bool:
    if d < 2:
        return False
    for q in range(2, math.isqrt(d) + 1):
        if d % q == 0:
            return False
    return True


def check_prime(d: int) -> int:
    d = int(d)
    if not is_prime(d):
        raise ValueError(f"modulus d={d} is not prime")
    return d


@dataclass(frozen=True)
class SymplecticVector:
    """A vector of F_d^{2n} in interleaved (u, v) coordinates."""

    coords: tuple[int, ...]
    d: int = 2

    def __post_init__(self):
        check_prime(self.d)
        coords = tuple(int(c) for c in self.coords)
        if len(coords) == 0 or len(coords) % 2:
            raise DimensionError(f"length must be even and positive, got {len(coords)}")
        if any(c < 0 or c >= self.d for c in coords):
            raise ValueError(f"coordinates must lie in [0, {self.d})")
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_string(cls, s: str, d: int = 2) -> "SymplecticVector":
        return cls(tuple(int(ch) for ch in s.strip()), d)

    @classmethod
    def zero(cls, n: int, d: int = 2) -> "SymplecticVector":
        return cls((0,) * (2 * n), d)

    @property
    def n(self) -> int:
        return len(self.coords) // 2

    @property
    def symbols(self) -> tuple[tuple[int, int], ...]:
        c = self.coords
        return tuple((c[2 * i], c[2 * i + 1]) for i in range(self.n))

    def as_array(self) -> np.ndarray:
        return np.array(self.coords, dtype=np.int64)

    def __add__(self, other: "SymplecticVector") -> "SymplecticVector":
        _check_compatible(self, other)
        return SymplecticVector(tuple((a + b) % self.d for a, b in zip(self.coords, other.coords)), self.d)

    def __sub__(self, other: "SymplecticVector") -> "SymplecticVector":
        _check_compatible(self, other)
        return SymplecticVector(tuple((a - b) % self.d for a, b in zip(self.coords, other.coords)), self.d)

    def scale(self, a: int) -> "SymplecticVector":
        return SymplecticVector(tuple((a * c) % self.d for c in self.coords), self.d)

    def is_zero(self) -> bool:
        return not any(self.coords)

    def __str__(self) -> str:
        if self.d <= 10:
            return "".join(str(c) for c in self.coords)
        return ",".join(str(c) for c in self.coords)


def _check_compatible(x: SymplecticVector, y: SymplecticVector) -> None:
    if len(x.coords) != len(y.coords) or x.d != y.d:
        raise DimensionError(
            f"vectors differ in length or modulus: ({len(x.coords)}, d={x.d}) vs ({len(y.coords)}, d={y.d})"
        )


def symplectic_matrix(n: int) -> np.ndarray:
    """Gram matrix Omega with <x, y> = x Omega y^T in interleaved coordinates."""
    omega = np.zeros((2 * n, 2 * n), dtype=np.int64)
    for i in range(n):
        omega[2 * i, 2 * i + 1] = 1
        omega[2 * i + 1, 2 * i] = -1
    return omega


def symplectic_form(x: SymplecticVector, y: SymplecticVector) -> int:
    """Return sum_i (u_i v'_i - v_i u'_i) mod d."""
    _check_compatible(x, y)
    a, b = x.coords, y.coords
    s = 0
    for i in range(0, len(a), 2):
        s += a[i] * b[i + 1] - a[i + 1] * b[i]
    return s % x.d


def rref(mat: np.ndarray, d: int) -> tuple[np.ndarray, list[int]]:
    """Row-reduced echelon form mod d; zero rows are dropped."""
    m = np.array(mat, dtype=np.int64) % d
    if m.ndim != 2:
        raise DimensionError("rref expects a 2-D array")
    rows, cols = m.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        nz = np.nonzero(m[r:, c])[0]
        if nz.size == 0:
            continue
        p = r + int(nz[0])
        if p != r:
            m[[r, p]] = m[[p, r]]
        m[r] = (m[r] * pow(int(m[r, c]), -1, d)) % d
        for i in range(rows):
            if i != r and m[i, c]:
                m[i] = (m[i] - m[i, c] * m[r]) % d
        pivots.append(c)
        r += 1
    return m[:r], pivots


def nullspace(mat: np.ndarray, d: int, ncols: int | None = None) -> np.ndarray:
    """Basis (as rows) of {y : mat y = 0 mod d}."""
    mat = np.asarray(mat, dtype=np.int64)
    if ncols is None:
        ncols = mat.shape[1]
    if mat.size == 0:
        return np.eye(ncols, dtype=np.int64)
    r, pivots = rref(mat, d)
    free = [c for c in range(ncols) if c not in pivots]
    basis = np.zeros((len(free), ncols), dtype=np.int64)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for i, p in enumerate(pivots):
            basis[k, p] = (-r[i, f]) % d
    return basis


class SymplecticSubspace:
    """A linear subspace of F_d^{2n}, stored in canonical row-reduced form.

    Two equal subspaces always carry identical ``basis`` tuples, so equality
    and hashing are structural.
    """

    __slots__ = ("n", "d", "_basis", "_pivots")

    def __init__(self, vectors: Iterable, n: int, d: int = 2):
        self.d = check_prime(d)
        self.n = int(n)
        if self.n < 1:
            raise DimensionError("ambient n must be positive")
        rows = []
        for v in vectors:
            if isinstance(v, SymplecticVector):
                if v.d != self.d:
                    raise DimensionError(f"vector modulus {v.d} differs from subspace modulus {self.d}")
                v = v.coords
            elif isinstance(v, str):
                v = tuple(int(ch) for ch in v)
            v = tuple(int(c) for c in v)
            if len(v) != 2 * self.n:
                raise DimensionError(f"expected length {2 * self.n}, got {len(v)}")
            rows.append(v)
        if rows:
            r, piv = rref(np.array(rows, dtype=np.int64), self.d)
        else:
            r, piv = np.zeros((0, 2 * self.n), dtype=np.int64), []
        self._basis = tuple(tuple(int(c) for c in row) for row in r)
        self._pivots = tuple(piv)

    @classmethod
    def zero(cls, n: int, d: int = 2) -> "SymplecticSubspace":
        return cls([], n, d)

    @classmethod
    def full(cls, n: int, d: int = 2) -> "SymplecticSubspace":
        return cls(np.eye(2 * n, dtype=np.int64), n, d)

    @classmethod
    def from_strings(cls, gens: Sequence[str], d: int = 2) -> "SymplecticSubspace":
        if not gens:
            raise ValueError("need at least one generator to infer n; use SymplecticSubspace.zero")
        n = len(gens[0].strip()) // 2
        return cls([g.strip() for g in gens], n, d)

    @property
    def basis(self) -> tuple[tuple[int, ...], ...]:
        return self._basis

    @property
    def pivots(self) -> tuple[int, ...]:
        return self._pivots

    @property
    def dim(self) -> int:
        return len(self._basis)

    @property
    def ambient_n(self) -> int:
        return self.n

    def basis_vectors(self) -> list[SymplecticVector]:
        return [SymplecticVector(row, self.d) for row in self._basis]

    def basis_array(self) -> np.ndarray:
        if not self._basis:
            return np.zeros((0, 2 * self.n), dtype=np.int64)
        return np.array(self._basis, dtype=np.int64)

    def __len__(self) -> int:
        return self.d ** self.dim

    def __iter__(self) -> Iterator[SymplecticVector]:
        b = self.basis_array()
        for coeffs in itertools.product(range(self.d), repeat=self.dim):
            v = (np.array(coeffs, dtype=np.int64) @ b) % self.d if self.dim else np.zeros(2 * self.n, dtype=np.int64)
            yield SymplecticVector(tuple(int(c) for c in v), self.d)

    def __contains__(self, x) -> bool:
        if isinstance(x, str):
            x = SymplecticVector.from_string(x, self.d)
        if x.d != self.d or len(x.coords) != 2 * self.n:
            raise DimensionError("vector does not live in this ambient space")
        if self.dim == 0:
            return x.is_zero()
        stacked = np.vstack([self.basis_array(), x.as_array()])
        return rref(stacked, self.d)[0].shape[0] == self.dim

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymplecticSubspace):
            return NotImplemented
        return (self.n, self.d, self._basis) == (other.n, other.d, other._basis)

    def __hash__(self) -> int:
        return hash((self.n, self.d, self._basis))

    def __repr__(self) -> str:
        gens = ", ".join(str(v) for v in self.basis_vectors()) or "0"
        return f"SymplecticSubspace(n={self.n}, d={self.d}, span{{{gens}}})"

    def issubspace(self, other: "SymplecticSubspace") -> bool:
        return all(v in other for v in self.basis_vectors())


def dual_space(L: SymplecticSubspace) -> SymplecticSubspace:
    """Symplectic complement L^perp = {x : <x, y> = 0 for all y in L}."""
    if L.dim == 0:
        return SymplecticSubspace.full(L.n, L.d)
    # <y, x> = y Omega x^T, so L^perp is the null space of B Omega
    a =(L.basis_array() @ symplectic_matrix(L.n)) % L.d
    return SymplecticSubspace(nullspace(a, L.d, 2 * L.n), L.n, L.d)


def is_self_orthogonal(L: SymplecticSubspace) -> bool:
    b = L.basis_array()
    if L.dim == 0:
        return True
    gram = (b @ symplectic_matrix(L.n) @ b.T) % L.d
    return not gram.any()


def _check_cap(bits: float, what: str) -> None:
    if bits > ENUMERATION_CAP_BITS + 1e-12:
        raise ResourceError(
            f"{what} needs about 2^{bits:.1f} elements, above the exact-enumeration cap 2^{ENUMERATION_CAP_BITS}; "
            "use the sampling utilities instead"
        )


def _rref_matrices(rows: int, cols: int, d: int) -> Iterator[np.ndarray]:
    """Every full-rank rows x cols matrix in reduced echelon form, once each."""
    for pivots in itertools.combinations(range(cols), rows):
        free_slots = [
            (i, c) for i in range(rows) for c in range(pivots[i] + 1, cols) if c not in pivots
        ]
        for values in itertools.product(range(d), repeat=len(free_slots)):
            m = np.zeros((rows, cols), dtype=np.int64)
            for i, p in enumerate(pivots):
                m[i, p] = 1
            for (i, c), val in zip(free_slots, values):
                m[i, c] = val
            yield m


def enumerate_self_orthogonal(n: int, dim: int, d: int = 2) -> Iterator[SymplecticSubspace]:
    """Yield every self-orthogonal subspace of F_d^{2n} of the given dimension.

    Subspaces are generated directly in canonical form, so no deduplication is
    needed. Raises ResourceError when 2n * dim * log2(d) exceeds the cap.
    """
    d = check_prime(d)
    if dim < 0 or dim > n:
        if dim > n:
            return
        raise ValueError("dim must be nonnegative")
    _check_cap(2 * n * dim * math.log2(d), "self-orthogonal subspace enumeration")
    if dim == 0:
        yield SymplecticSubspace.zero(n, d)
        return
    omega = symplectic_matrix(n)
    for m in _rref_matrices(dim, 2 * n, d):
        if not ((m @ omega @ m.T) % d).any():
            yield SymplecticSubspace(m, n, d)


def count_self_orthogonal(n: int, dim: int, d: int = 2) -> int:
    """Closed-form number of totally isotropic dim-subspaces of F_d^{2n}."""
    num, den = 1, 1
    for i in range(dim):
        num *= d ** (2 * (n - i)) - 1
        den *= d ** (i + 1) - 1
    return num // den


@dataclass(frozen=True)
class TypeDistribution:
    """Empirical symbol distribution of a length-n sequence over X = F_d^2."""

    counts: tuple[tuple[tuple[int, int], int], ...]
    n: int
    d: int = 2

    def __post_init__(self):
        if sum(c for _, c in self.counts) != self.n:
            raise InvariantViolation("type counts must sum to n")

    @classmethod
    def from_symbols(cls, symbols: Sequence[tuple[int, int]], d: int = 2) -> "TypeDistribution":
        cnt = Counter(tuple(s) for s in symbols)
        return cls(tuple(sorted(cnt.items())), len(symbols), d)

    def as_dict(self) -> dict[tuple[int, int], int]:
        return dict(self.counts)

    def probability(self, u: tuple[int, int]) -> Fraction:
        return Fraction(self.as_dict().get(tuple(u), 0), self.n)

    def probs(self) -> dict[tuple[int, int], Fraction]:
        return {u: Fraction(c, self.n) for u, c in self.counts}

    def entropy(self, base: float | None = None) -> float:
        return _count_entropy(tuple(c for _, c in self.counts), self.n, base or self.d)


def _count_entropy(counts: tuple[int, ...], n: int, base: float) -> float:
    # sorted counts make equal multisets give bit-identical floats, so ties are exact
    h = 0.0
    for c in sorted(counts):
        if c:
            h -= (c / n) * math.log(c / n)
    return h / math.log(base)


def type_of(x: SymplecticVector) -> TypeDistribution:
    return TypeDistribution.from_symbols(x.symbols, x.d)


def syndrome(x: SymplecticVector, L: SymplecticSubspace) -> tuple[int, ...]:
    """Values <x, g> for the canonical generators g of L; constant on cosets of L^perp."""
    return tuple(symplectic_form(x, g) for g in L.basis_vectors())


def syndrome_index(s: Sequence[int], d: int) -> int:
    idx = 0
    for t in s:
        idx = idx * d + int(t)
    return idx


def all_vectors(n: int, d: int = 2) -> Iterator[SymplecticVector]:
    """Every vector of F_d^{2n} in lexicographic order."""
    for coords in itertools.product(range(d), repeat=2 * n):
        yield SymplecticVector(coords, d)


def min_entropy_coset_leaders(
    L: SymplecticSubspace,
    preferred: Iterable[SymplecticVector | str] | None = None,
) -> list[SymplecticVector]:
    """One minimum-type-entropy representative per coset of L^perp.

    Leaders are returned in syndrome order (the coset whose syndrome digits read
    as the base-d integer k comes k-th). Ties are broken by the lexicographically
    smallest vector unless a ``preferred`` vector lies in the coset and is itself
    an entropy minimizer there.
    """
    if not is_self_orthogonal(L):
        raise ValueError("L must be self-orthogonal")
    d, n = L.d, L.n
    _check_cap(2 * n * math.log2(d), "coset enumeration")
    pref = {}
    for p in preferred or ():
        if isinstance(p, str):
            p = SymplecticVector.from_string(p, d)
        pref.setdefault(syndrome_index(syndrome(p, L), d), []).append(p)

    best: dict[int, tuple[float, SymplecticVector]] = {}
    entropies: dict[SymplecticVector, float] = {}
    gens = L.basis_array()
    omega = symplectic_matrix(n)
    gw = (gens @ omega.T) % d if L.dim else gens
    for x in all_vectors(n, d):
        # <x, g> = x Omega g^T
        s = tuple(int(t) for t in (gw @ np.array(x.coords)) % d) if L.dim else ()
        k = syndrome_index(s, d)
        h = type_of(x).entropy()
        if k in pref:
            entropies[x] = h
        cur = best.get(k)
        if cur is None or h < cur[0]:
            best[k] = (h, x)
    for k, cands in pref.items():
        hmin = best[k][0]
        chosen = [p for p in cands if type_of(p).entropy() <= hmin]
        if not chosen:
            raise ValueError(f"preferred leaders {[str(c) for c in cands]} do not minimize entropy in their coset")
        best[k] = (hmin, min(chosen, key=lambda v: v.coords))
    expected = d ** L.dim
    if len(best) != expected:
        raise InvariantViolation(f"found {len(best)} cosets, expected {expected}")
    leaders = [best[k][1] for k in sorted(best)]
    check_leader_premise(leaders, L)
    return leaders


def check_leader_premise(leaders: Sequence[SymplecticVector], L: SymplecticSubspace) -> bool:
    """Raise unless distinct leaders never differ by an element of L^perp."""
    seen = {}
    for x in leaders:
        k = syndrome(x, L)
        if k in seen and seen[k] != x:
            raise ValueError(f"leaders {seen[k]} and {x} differ by an element of L^perp")
        seen[k] = x
    return True


def enlarge_leaders(L: SymplecticSubspace, leaders: Sequence[SymplecticVector]) -> list[SymplecticVector]:
    """The set {z + w : z in leaders, w in L}, checked against L^perp minus L."""
    check_leader_premise(leaders, L)
    span = list(L)
    J = sorted({z + w for z in leaders for w in span}, key=lambda v: v.coords)
    if len(J) != len(leaders) * len(span):
        raise InvariantViolation("leader translates by L are not disjoint")
    perp = dual_space(L)
    for x in J:
        for y in J:
            diff = y - x
            if diff in perp and diff not in L:
                raise InvariantViolation(f"{y} - {x} lies in L^perp but not in L")
    return J


def isotropic_ratio_census(n: int, kprime: int, d: int = 2) -> tuple[Fraction, Fraction]:
    """Exact check that |{L : x in L^perp, x != 0}| / |A_so| is the same for all x != 0.

    A_so ranges over self-orthogonal L with dim L = n - kprime. Returns the
    observed common ratio and the closed form (d^{n+k'} - 1) / (d^{2n} - 1).
    """
    d = check_prime(d)
    dim = n - kprime
    if dim < 0:
        raise ValueError("kprime must not exceed n")
    _check_cap(2 * n * math.log2(d), "vector enumeration")
    family = list(enumerate_self_orthogonal(n, dim, d))
    total = len(family)
    omega = symplectic_matrix(n)
    # x in L^perp  <=>  B Omega x^T = 0
    checks = [(L.basis_array() @ omega) % d for L in family]
    ratios = set()
    for x in all_vectors(n, d):
        if x.is_zero():
            continue
        xv = np.array(x.coords, dtype=np.int64)
        count = sum(1 for c in checks if not ((c @ xv) % d).any())
        ratios.add(Fraction(count, total))
    formula = Fraction(d ** (n + kprime) - 1, d ** (2 * n) - 1)
    if len(ratios) != 1:
        raise InvariantViolation(f"ratio depends on x: {sorted(ratios)}")
    observed = ratios.pop()
    return observed, formula


def types_census(n: int, d: int = 2) -> dict[tuple[int, ...], int]:
    """Map each type (count vector over X in index order u*d+v) to its class size."""
    q = d * d
    _check_cap(n * math.log2(q), "type-class enumeration")
    census: Counter = Counter()
    for seq in itertools.product(range(q), repeat=n):
        cnt = [0] * q
        for s in seq:
            cnt[s] += 1
        census[tuple(cnt)] += 1
    return dict(census)
