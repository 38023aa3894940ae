"""Kraus-set channels, the generalized Pauli error basis, and Choi states.

Symbols of X = {0..d-1}^2 are indexed ``u * d + v`` throughout, so a
probability vector over X is a flat array of length d**2 and N_(u,v) = X^u Z^v
sits at position ``u * d + v``.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from functools import reduce
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DimensionError, ValidationError
from .gfsym import check_prime

TP_TOL = 1e-9
CP_TOL = 1e-10
UNITARY_TOL = 1e-9


def symbols(d: int) -> list[tuple[int, int]]:
    return [(u, v) for u in range(d) for v in range(d)]


def _as_operator(a, dim: int | None = None) -> np.ndarray:
    m = np.asarray(a, dtype=np.complex128)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"operator must be square, got shape {m.shape}")
    if dim is not None and m.shape[0] != dim:
        raise DimensionError(f"operator has dimension {m.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(m)):
        raise ValidationError("operator has non-finite entries")
    return m


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return bool(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))) <= tol)


@dataclass(frozen=True, eq=False)
class ErrorBasis:
    """The d**2 operators N_(i,j) = X^i Z^j built from an ONB and a root omega.

    ``kets`` holds the basis vectors |b_j> as columns. X|b_j> = |b_{j-1 mod d}>
    and Z|b_j> = omega^j |b_j>.
    """

    d: int
    kets: np.ndarray
    omega: complex
    operators: tuple[np.ndarray, ...] = field(repr=False)

    def __getitem__(self, u: tuple[int, int]) -> np.ndarray:
        return self.operators[u[0] * self.d + u[1]]

    @property
    def X(self) -> np.ndarray:
        return self[(1, 0)]

    @property
    def Z(self) -> np.ndarray:
        return self[(0, 1)]

    def inner(self, a: np.ndarray, b: np.ndarray) -> complex:
        """<A, B> = Tr(A^dagger B) / d."""
        return complex(np.vdot(a, b) / self.d)


def error_basis(kets: np.ndarray, omega: complex) -> ErrorBasis:
    kets = _as_operator(kets)
    d = check_prime(kets.shape[0])
    if not is_unitary(kets, 1e-10):
        raise ValidationError("basis kets are not orthonormal")
    if abs(omega**d - 1) > 1e-10 or any(abs(omega**k - 1) < 1e-10 for k in range(1, d)):
        raise ValueError(f"omega={omega} is not a primitive {d}-th root of unity")
    shift = np.roll(np.eye(d), 1, axis=1)  # column j holds e_{j-1}
    phase = np.diag([omega**j for j in range(d)])
    X = kets @ shift @ kets.conj().T
    Z = kets @ phase @ kets.conj().T
    ops = tuple(
        np.linalg.matrix_power(X, u) @ np.linalg.matrix_power(Z, v) for u, v in symbols(d)
    )
    return ErrorBasis(d, kets, complex(omega), ops)


def standard_error_basis(d: int, root: int = 1) -> ErrorBasis:
    """Computational kets and omega = exp(2 pi i root / d)."""
    d = check_prime(d)
    if root % d == 0:
        raise ValueError("root exponent must be coprime to d")
    return error_basis(np.eye(d), np.exp(2j * np.pi * root / d))


def tensor_error_operator(x: Sequence[int], basis: ErrorBasis) -> np.ndarray:
    """N_x = N_{x_1} (x) ... (x) N_{x_n} for interleaved coordinates x."""
    coords = tuple(getattr(x, "coords", x))
    mats = [basis[(coords[2 * i], coords[2 * i + 1])] for i in range(len(coords) // 2)]
    return reduce(np.kron, mats)


@dataclass(frozen=True, eq=False)
class ErrorDistribution:
    """A probability vector over X indexed u * d + v."""

    d: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float).reshape(-1)
        if p.size != self.d**2:
            raise DimensionError(f"need {self.d ** 2} probabilities, got {p.size}")
        if np.any(p < -1e-12) or not np.all(np.isfinite(p)):
            raise ValidationError("probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > TP_TOL:
            raise ValidationError(f"probabilities sum to {p.sum():.12g}, not 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    @classmethod
    def from_mapping(cls, d: int, probs: Mapping[tuple[int, int], float]) -> "ErrorDistribution":
        p = np.zeros(d * d)
        for (u, v), val in probs.items():
            p[u * d + v] = val
        return cls(d, p)

    @classmethod
    def point_mass(cls, d: int, u: tuple[int, int] = (0, 0)) -> "ErrorDistribution":
        p = np.zeros(d * d)
        p[u[0] * d + u[1]] = 1.0
        return cls(d, p)

    @classmethod
    def depolarizing(cls, p: float, d: int = 2) -> "ErrorDistribution":
        q = np.full(d * d, p / (d * d - 1))
        q[0] = 1.0 - p
        return cls(d, q)

    def __getitem__(self, u: tuple[int, int]) -> float:
        return float(self.probs[u[0] * self.d + u[1]])

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {u: float(self.probs[i]) for i, u in enumerate(symbols(self.d))}

    @property
    def support(self) -> np.ndarray:
        return self.probs > 0


class QuantumChannel:
    """A trace-preserving Kraus set on (C^d)^{(x) m}."""

    def __init__(self, kraus: Iterable, d: int = 2, m: int = 1, tol: float = TP_TOL, name: str = ""):
        self.d = check_prime(d)
        self.m = int(m)
        self.dim = self.d**self.m
        ops = [_as_operator(a, self.dim) for a in kraus]
        if not ops:
            raise ValidationError("empty Kraus list")
        if len(ops) > self.dim**2:
            raise ValidationError(f"{len(ops)} Kraus operators exceed the (d^m)^2 = {self.dim ** 2} limit")
        self.kraus: tuple[np.ndarray, ...] = tuple(ops)
        self.name = name
        err = self.tp_error()
        if err > tol:
            raise ValidationError(f"Kraus set is not trace preserving: max|sum A^dag A - I| = {err:.3e}")

    def tp_error(self) -> float:
        s = sum(a.conj().T @ a for a in self.kraus)
        return float(np.max(np.abs(s - np.eye(self.dim))))

    def __repr__(self) -> str:
        label = f" {self.name}" if self.name else ""
        return f"<QuantumChannel{label} d={self.d} m={self.m} kraus={len(self.kraus)}>"

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return apply_channel(self, rho)

    # file I/O ------------------------------------------------------------

    def to_json(self) -> str:
        kraus = [[[[float(z.real), float(z.imag)] for z in row] for row in a] for a in self.kraus]
        return json.dumps({"d": self.d, "m": self.m, "kraus": kraus})

    @classmethod
    def from_json(cls, text: str) -> "QuantumChannel":
        try:
            data = json.loads(text)
            d, m = int(data["d"]), int(data.get("m", 1))
            kraus = [
                np.array([[complex(e[0], e[1]) for e in row] for row in a], dtype=np.complex128)
                for a in data["kraus"]
            ]
        except (KeyError, TypeError, IndexError, ValueError) as exc:
            raise ValidationError(f"malformed channel file: {exc}") from exc
        return cls(kraus, d=d, m=m)

    @classmethod
    def load(cls, path: str | Path) -> "QuantumChannel":
        return cls.from_json(Path(path).read_text())

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())


# built-in channels --------------------------------------------------------


def identity_channel(d: int = 2) -> QuantumChannel:
    return QuantumChannel([np.eye(d)], d=d, name="identity")


def amplitude_damping(gamma: float) -> QuantumChannel:
    if not 0.0 <= gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    a0 = np.array([[1.0, 0.0], [0.0, math.sqrt(1.0 - gamma)]])
    a1 = np.array([[0.0, math.sqrt(gamma)], [0.0, 0.0]])
    return QuantumChannel([a0, a1], d=2, name=f"amplitude_damping({gamma:g})")


def pauli_channel(P: ErrorDistribution, basis: ErrorBasis | None = None) -> QuantumChannel:
    """A ~ { sqrt(P(u)) N_u }."""
    basis = basis or standard_error_basis(P.d)
    if basis.d != P.d:
        raise DimensionError("basis and distribution disagree on d")
    ops = [math.sqrt(p) * n for p, n in zip(P.probs, basis.operators) if p > 0]
    return QuantumChannel(ops, d=P.d, name="pauli")


def depolarizing(p: float, d: int = 2) -> QuantumChannel:
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    ch = pauli_channel(ErrorDistribution.depolarizing(p, d))
    ch.name = f"depolarizing({p:g})"
    return ch


def dephasing(q: float, d: int = 2) -> QuantumChannel:
    """rho -> (1 - q) rho + q Z rho Z^dagger."""
    if not 0.0 <= q <= 1.0:
        raise ValueError("q must lie in [0, 1]")
    z = standard_error_basis(d).Z
    return QuantumChannel([math.sqrt(1 - q) * np.eye(d), math.sqrt(q) * z], d=d, name=f"dephasing({q:g})")


BUILTINS = {
    "identity": (identity_channel, None),
    "depolarizing": (depolarizing, "p"),
    "amplitude_damping": (amplitude_damping, "gamma"),
    "dephasing": (dephasing, "q"),
}


def builtin_channel(name: str, value: float | None = None) -> QuantumChannel:
    try:
        factory, param = BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown built-in channel {name!r}; choose from {sorted(BUILTINS)}") from None
    if param is None:
        return factory()
    if value is None:
        raise ValueError(f"channel {name} needs parameter {param}")
    return factory(value)


# algebra ------------------------------------------------------------------


def expand_in_error_basis(a: np.ndarray, basis: ErrorBasis) -> np.ndarray:
    """Coefficients a_v = Tr(N_v^dagger A) / d, indexed u * d + v."""
    a = _as_operator(a)
    if a.shape[0] != basis.d:
        raise DimensionError(f"operator has dimension {a.shape[0]}, basis has d={basis.d}")
    return np.array([np.vdot(n, a) / basis.d for n in basis.operators])


def error_distribution(ch: QuantumChannel, basis: ErrorBasis | None = None) -> ErrorDistribution:
    """P(v) = sum_u |a_uv|^2 for a single-qudit channel."""
    if ch.m != 1:
        raise DimensionError("error_distribution needs a single-system channel (m = 1)")
    basis = basis or standard_error_basis(ch.d)
    if basis.d != ch.d:
        raise DimensionError("basis and channel disagree on d")
    coeffs = np.array([expand_in_error_basis(a, basis) for a in ch.kraus])
    return ErrorDistribution(ch.d, np.sum(np.abs(coeffs) ** 2, axis=0))


change_basis = error_distribution


def compose_unitary(u: np.ndarray, ch: QuantumChannel) -> QuantumChannel:
    """The channel rho -> U A(rho) U^dagger, i.e. Kraus set {U A_u}."""
    u = _as_operator(u, ch.dim)
    if not is_unitary(u):
        raise ValueError("preprocessing operator is not unitary")
    return QuantumChannel([u @ a for a in ch.kraus], d=ch.d, m=ch.m)


def apply_channel(ch: QuantumChannel, rho: np.ndarray) -> np.ndarray:
    rho = _as_operator(rho, None)
    if rho.shape[0] != ch.dim:
        raise DimensionError(f"state has dimension {rho.shape[0]}, channel acts on {ch.dim}")
    return sum(a @ rho @ a.conj().T for a in ch.kraus)


def tensor_power(ch: QuantumChannel, n: int) -> QuantumChannel:
    """A^{(x) n}; Kraus products that vanish identically are dropped."""
    if ch.m != 1:
        raise DimensionError("tensor_power expects a single-system channel")
    if n < 1:
        raise ValueError("n must be positive")
    ops = [a for a in ch.kraus if np.any(a)]
    out = []
    for combo in itertools.product(ops, repeat=n):
        out.append(reduce(np.kron, combo))
    return QuantumChannel(out, d=ch.d, m=n, name=f"{ch.name}^{n}" if ch.name else "")


class ProductDistribution:
    """Lazy P^n over X^n; sequences are given as interleaved F_d^{2n} coordinates."""

    def __init__(self, P: ErrorDistribution, n: int):
        if n < 1:
            raise ValueError("n must be positive")
        self.P, self.n, self.d = P, int(n), P.d

    def __call__(self, y) -> float:
        coords = tuple(getattr(y, "coords", y))
        if len(coords) != 2 * self.n:
            raise DimensionError(f"expected {2 * self.n} coordinates")
        out = 1.0
        for i in range(self.n):
            out *= self.P.probs[coords[2 * i] * self.d + coords[2 * i + 1]]
        return float(out)

    __getitem__ = __call__

    def as_array(self) -> np.ndarray:
        """Full table in lexicographic order of interleaved coordinates."""
        if self.d ** (2 * self.n) > 2**20:
            from .errors import ResourceError

            raise ResourceError("product table exceeds 2^20 entries")
        return reduce(np.kron, [self.P.probs] * self.n)


def product_distribution(P: ErrorDistribution, n: int) -> ProductDistribution:
    return ProductDistribution(P, n)


# Choi states --------------------------------------------------------------


def choi_state(ch: QuantumChannel) -> np.ndarray:
    """[I (x) A](|Phi+><Phi+|) with |Phi+> = d^{-1/2} sum_j |jj>."""
    if ch.m != 1:
        raise DimensionError("choi_state needs a single-system channel")
    d = ch.d
    # (I (x) A)|jj> summed over j is vec(A^T) in row-major order
    vecs = np.array([a.T.reshape(-1) for a in ch.kraus])
    m = vecs.T @ vecs.conj() / d
    check_choi(m)
    return m


def check_choi(m: np.ndarray, tol: float = CP_TOL) -> None:
    m = _as_operator(m)
    if np.max(np.abs(m - m.conj().T)) > 1e-9:
        raise ValidationError("Choi matrix is not Hermitian")
    lo = float(np.linalg.eigvalsh((m + m.conj().T) / 2).min())
    if lo < -tol:
        raise ValidationError(f"map is not completely positive: Choi eigenvalue {lo:.3e}")


def kraus_from_choi(m: np.ndarray, d: int = 2, tol: float = 1e-12) -> QuantumChannel:
    """Operator-sum representation recovered from a Choi state.

    d * M = sum_x a_x a_x^dagger over eigenvectors; each row vector is folded
    back into an operator by the inverse of the vectorization used in
    ``choi_state``.
    """
    d = check_prime(d)
    m = _as_operator(m, d * d)
    check_choi(m)
    w, v = np.linalg.eigh(d * (m + m.conj().T) / 2)
    ops = []
    for lam, vec in zip(w[::-1], v.T[::-1]):
        if lam > tol:
            ops.append(math.sqrt(lam) * vec.reshape(d, d).T)
    return QuantumChannel(ops, d=d)


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_channel(d: int, rng: np.random.Generator, rank: int | None = None) -> QuantumChannel:
    """A TP channel from a random Choi state (Stinespring isometry sampling)."""
    rank = rank or d * d
    g = rng.standard_normal((rank * d, d)) + 1j * rng.standard_normal((rank * d, d))
    q, _ = np.linalg.qr(g)
    ops = [q[k * d : (k + 1) * d, :] for k in range(rank)]
    return QuantumChannel(ops, d=d, name="random")
