"""Torsion at a single frame: the operator del and its skew right inverse.

Tensors use the standard basis of R^n and the standard inner product, so
adjoints are transposes.  Index conventions::

    phi[i, j, k]  = k-th component of phi(e_i, e_j)
    xi[i]         = the matrix xi(e_i), so xi(e_i)(e_j) = xi[i][:, j]
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import RankTolerance

__all__ = [
    "TorsionTensor",
    "ConnectionAdjustment",
    "SubalgebraBasis",
    "DelReport",
    "delta",
    "skew_inverse",
    "del_matrix",
    "intrinsic_torsion_residual",
    "RANK_RTOL",
]

RANK_RTOL = 1e-9
# singular values within this factor of the threshold are too close to call
RANK_BAND = 100.0


@dataclass(frozen=True, eq=False)
class TorsionTensor:
    phi: np.ndarray

    def __post_init__(self):
        phi = np.array(self.phi, dtype=float)
        if phi.ndim != 3 or len(set(phi.shape)) != 1:
            raise ValueError(f"phi must have shape (n, n, n), got {phi.shape}")
        scale = max(1.0, float(np.max(np.abs(phi), initial=0.0)))
        if np.max(np.abs(phi + phi.transpose(1, 0, 2)), initial=0.0) > 1e-12 * scale:
            raise ValueError("phi is not antisymmetric in its first two slots")
        phi = 0.5 * (phi - phi.transpose(1, 0, 2))
        phi.flags.writeable = False
        object.__setattr__(self, "phi", phi)

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    @classmethod
    def zeros(cls, n: int) -> "TorsionTensor":
        return cls(np.zeros((n, n, n)))

    @classmethod
    def random(cls, n: int, rng) -> "TorsionTensor":
        a = rng.standard_normal((n, n, n))
        return cls(a - a.transpose(1, 0, 2))

    @classmethod
    def from_vector(cls, n: int, v) -> "TorsionTensor":
        phi = np.zeros((n, n, n))
        for row, (i, j) in enumerate(combinations(range(n), 2)):
            phi[i, j] = v[row * n:(row + 1) * n]
            phi[j, i] = -phi[i, j]
        return cls(phi)

    def vector(self) -> np.ndarray:
        """Coordinates in the basis ``e^i ^ e^j (x) e_k``, ``i < j``."""
        return np.concatenate([self.phi[i, j] for i, j in combinations(range(self.n), 2)])


@dataclass(frozen=True, eq=False)
class ConnectionAdjustment:
    xi: np.ndarray

    def __post_init__(self):
        xi = np.array(self.xi, dtype=float)
        if xi.ndim != 3 or len(set(xi.shape)) != 1:
            raise ValueError(f"xi must have shape (n, n, n), got {xi.shape}")
        xi.flags.writeable = False
        object.__setattr__(self, "xi", xi)

    @property
    def n(self) -> int:
        return self.xi.shape[0]

    def skew_defect(self) -> float:
        return float(np.max(np.abs(self.xi + self.xi.transpose(0, 2, 1)), initial=0.0))


def delta(xi: ConnectionAdjustment) -> TorsionTensor:
    """``(del xi)(X, Y) = xi(X)(Y) - xi(Y)(X)``."""
    x = xi.xi
    # phi[i, j, k] = xi[i][k, j] - xi[j][k, i]
    phi = x.transpose(0, 2, 1) - x.transpose(0, 2, 1).transpose(1, 0, 2)
    return TorsionTensor(phi)


def skew_inverse(phi: TorsionTensor) -> ConnectionAdjustment:
    """Skew-valued ``xi`` with ``del xi = phi``.

    ``2 xi(X)(Y) = phi(X, Y) - phi(X, .)^T (Y) - phi(Y, .)^T (X)``
    """
    p = phi.phi
    # 2 xi[i][k, j] = p[i, j, k] - p[i, k, j] - p[j, k, i]
    two_xi = p.transpose(0, 2, 1) - p - p.transpose(2, 1, 0)
    return ConnectionAdjustment(0.5 * two_xi)


@dataclass(frozen=True, eq=False)
class SubalgebraBasis:
    n: int
    basis: tuple

    def __post_init__(self):
        mats = tuple(np.asarray(b, dtype=float).reshape(self.n, self.n) for b in self.basis)
        object.__setattr__(self, "basis", mats)
        if not mats:
            return
        M = np.stack([b.ravel() for b in mats], axis=1)
        s = np.linalg.svd(M, compute_uv=False)
        if s[-1] <= 1e-10 * s[0]:
            raise ValueError("basis matrices are linearly dependent")
        Q, _ = np.linalg.qr(M)
        for a in mats:
            for b in mats:
                c = (a @ b - b @ a).ravel()
                if np.linalg.norm(c - Q @ (Q.T @ c)) > 1e-9 * max(1.0, np.linalg.norm(c)):
                    raise ValueError("span is not closed under the commutator")

    @property
    def dim(self) -> int:
        return len(self.basis)

    @classmethod
    def zero(cls, n: int) -> "SubalgebraBasis":
        return cls(n, ())

    @classmethod
    def so(cls, n: int) -> "SubalgebraBasis":
        out = []
        for i, j in combinations(range(n), 2):
            E = np.zeros((n, n))
            E[i, j], E[j, i] = 1.0, -1.0
            out.append(E)
        return cls(n, tuple(out))

    @classmethod
    def co(cls, n: int) -> "SubalgebraBasis":
        return cls(n, cls.so(n).basis + (np.eye(n),))

    @classmethod
    def gl(cls, n: int) -> "SubalgebraBasis":
        out = []
        for i in range(n):
            for j in range(n):
                E = np.zeros((n, n))
                E[i, j] = 1.0
                out.append(E)
        return cls(n, tuple(out))

    @classmethod
    def sl(cls, n: int) -> "SubalgebraBasis":
        out = [E for E in cls.gl(n).basis if np.trace(E) == 0]
        for i in range(n - 1):
            H = np.zeros((n, n))
            H[i, i], H[i + 1, i + 1] = 1.0, -1.0
            out.append(H)
        return cls(n, tuple(out))

    @classmethod
    def named(cls, name: str, n: int) -> "SubalgebraBasis":
        try:
            return {"so": cls.so, "co": cls.co, "gl": cls.gl, "sl": cls.sl, "zero": cls.zero}[name](n)
        except KeyError:
            raise ValueError(f"unknown algebra {name!r}") from None


@dataclass(frozen=True)
class DelReport:
    domain_dim: int
    codomain_dim: int
    rank: int
    kernel_dim: int
    coker_dim: int
    matrix: np.ndarray

    def row(self) -> tuple:
        return (self.domain_dim, self.codomain_dim, self.rank, self.kernel_dim, self.coker_dim)


def _assemble(algebra: SubalgebraBasis) -> np.ndarray:
    n = algebra.n
    cols = []
    for i in range(n):
        for B in algebra.basis:
            xi = np.zeros((n, n, n))
            xi[i] = B
            cols.append(delta(ConnectionAdjustment(xi)).vector())
    codim = n * n * (n - 1) // 2
    if not cols:
        return np.zeros((codim, 0))
    return np.stack(cols, axis=1)


def del_matrix(algebra: SubalgebraBasis, rtol: float = RANK_RTOL) -> DelReport:
    """Rank data of ``del`` restricted to ``(R^n)^* (x) g``.

    Columns are ordered ``(i, a)`` for the form ``e^i (x) basis[a]``; rows follow
    :meth:`TorsionTensor.vector`.
    """
    M = _assemble(algebra)
    codim, dom = M.shape
    if M.size == 0:
        rank = 0
    else:
        s = np.linalg.svd(M, compute_uv=False)
        thresh = rtol * s[0] if s[0] > 0 else 0.0
        if s[0] > 0 and np.any((s > thresh / RANK_BAND) & (s < thresh * RANK_BAND)):
            raise RankTolerance(f"singular values cluster near {thresh:.3e}")
        rank = int(np.sum(s > thresh)) if s[0] > 0 else 0
    return DelReport(dom, codim, rank, dom - rank, codim - rank, M)


def intrinsic_torsion_residual(phi: TorsionTensor, algebra: SubalgebraBasis) -> float:
    """Norm of the part of ``phi`` orthogonal to ``del((R^n)^* (x) g)``."""
    v = phi.vector()
    M = _assemble(algebra)
    if M.shape[1] == 0:
        return float(np.linalg.norm(v))
    U, s, _ = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
    U = U[:, :r]
    return float(np.linalg.norm(v - U @ (U.T @ v)))
