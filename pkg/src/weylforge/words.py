"""Explicit words in a matrix group, used as a brute-force membership oracle.

Given generators of a group G that contains SO_n and at least one
non-conformal element, :func:`synthesize` writes an arbitrary ``T`` in
``SL_n`` as a product of generators, their inverses and rotations.  Every
factor is one of those three kinds, so evaluating the word and comparing with
``T`` checks ``SL_n <= G`` without trusting the classification code.

The construction extracts a diagonal element and forms the commutator-type
witness ``D^-1 S^T D S``.  Interpolating along ``A R_t A`` reaches every
``Diag(x, 1/x)`` with ``x`` in a bounded interval; powers extend the range,
and signed permutations move the result between coordinate planes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np

from . import matgroup

__all__ = ["Word", "synthesize"]


@dataclass(frozen=True)
class Word:
    """Product of labelled factors; labels are ``"g<i>"``, ``"g<i>^-1"`` or ``"so"``."""

    n: int
    factors: tuple = ()

    @classmethod
    def generator(cls, gens, i: int) -> "Word":
        return cls(gens[i].shape[0], ((f"g{i}", np.asarray(gens[i], dtype=float)),))

    @classmethod
    def rotation(cls, Q, tol: float = 1e-10) -> "Word":
        Q = np.asarray(Q, dtype=float)
        n = Q.shape[0]
        if np.max(np.abs(Q.T @ Q - np.eye(n))) > tol or np.linalg.det(Q) < 0:
            raise ValueError("factor is not in SO_n")
        return cls(n, (("so", Q),))

    def __mul__(self, other: "Word") -> "Word":
        return Word(self.n, self.factors + other.factors)

    def inverse(self) -> "Word":
        out = []
        for label, M in reversed(self.factors):
            if label == "so":
                out.append(("so", M.T))
            elif label.endswith("^-1"):
                out.append((label[:-3], np.linalg.inv(M)))
            else:
                out.append((label + "^-1", np.linalg.inv(M)))
        return Word(self.n, tuple(out))

    def __pow__(self, k: int) -> "Word":
        base = self if k >= 0 else self.inverse()
        out = Word(self.n)
        for _ in range(abs(k)):
            out = out * base
        return out

    def matrix(self) -> np.ndarray:
        return reduce(np.matmul, (M for _, M in self.factors), np.eye(self.n))

    def __len__(self):
        return len(self.factors)

    def labels(self) -> list:
        return [label for label, _ in self.factors]


def _special_orthogonal_eigh(P: np.ndarray):
    w, Q = np.linalg.eigh(0.5 * (P + P.T))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return w, Q


def _diagonal_part(word: Word) -> Word:
    """Word in the same group whose value is diagonal (up to rounding).

    With ``M = R P`` and ``P = Q L Q^T`` we have ``Q^T M Q = R' L``.  If
    ``R'`` has determinant -1 it is corrected by ``F = Diag(-1, 1, ...)`` so
    that only rotations are used; the result is then ``F L``.
    """
    n = word.n
    M = word.matrix()
    pf = matgroup.polar_decompose(M)
    _, Q = _special_orthogonal_eigh(pf.spd)
    Rp = Q.T @ pf.orthogonal @ Q
    if np.linalg.det(Rp) < 0:
        F = np.eye(n)
        F[0, 0] = -1.0
        Rp = Rp @ F
    return Word.rotation(Rp.T) * Word.rotation(Q.T) * word * Word.rotation(Q)


def _signed_swap(n: int, i: int, j: int) -> np.ndarray:
    """Rotation by pi/2 in the (i, j) plane; conjugation swaps diagonal entries i, j."""
    return matgroup.plane_rotation(n, i, j, math.pi / 2)


def _plane_mover(n: int, p: int) -> np.ndarray:
    """Rotation in SO_n sending e0 -> +-e_p and e1 -> +-e_{p+1}."""
    perm = [p, p + 1] + [k for k in range(n) if k not in (p, p + 1)]
    P = np.zeros((n, n))
    for src, dst in enumerate(perm):
        P[dst, src] = 1.0
    if np.linalg.det(P) < 0:
        # only reachable for n >= 3; the last column is not e0 or e1's image
        P[:, -1] = -P[:, -1]
    return P


def _embed2(n: int, M2: np.ndarray) -> np.ndarray:
    M = np.eye(n)
    M[:2, :2] = M2
    return M


def _block_diagonal_part(word: Word) -> Word:
    """Like :func:`_diagonal_part` for words acting only on the (0, 1) plane."""
    n = word.n
    M = word.matrix()[:2, :2]
    pf = matgroup.polar_decompose(M)
    w, Q = _special_orthogonal_eigh(pf.spd)
    # largest eigenvalue first
    Q = Q[:, ::-1].copy()
    Q[:, 1] = -Q[:, 1]
    Rp = Q.T @ pf.orthogonal @ Q
    if np.linalg.det(Rp) < 0:
        raise ArithmeticError("block word left SO_2 x GL+ unexpectedly")
    return Word.rotation(_embed2(n, Rp.T)) * Word.rotation(_embed2(n, Q.T)) * word * Word.rotation(_embed2(n, Q))


class _Builder:
    def __init__(self, generators, tol: float = matgroup.TOL):
        self.gens = [np.asarray(g, dtype=float) for g in generators]
        self.n = self.gens[0].shape[0]
        self.tol = tol
        self._base = None

    def base(self):
        """``(word, b)`` with word ~ Diag(b, 1/b, 1, ..., 1), ``b > 1``."""
        if self._base is not None:
            return self._base
        n = self.n
        idx = next(
            (i for i, g in enumerate(self.gens) if matgroup.is_conformal(g, self.tol) is None), None
        )
        if idx is None:
            raise ValueError("all generators are conformal; SL_n is not generated")
        D = _diagonal_part(Word.generator(self.gens, idx))
        D = D * D
        S, _ = matgroup.lemma2_witness(np.diag(np.diag(D.matrix())), self.tol)
        B = D.inverse() * Word.rotation(S).inverse() * D * Word.rotation(S)
        E = _diagonal_part(B)
        E = E * E
        e = np.diag(E.matrix())
        i, j = int(np.argmax(e)), int(np.argmin(e))
        J = Word.rotation(_signed_swap(n, i, j))
        ratio = E * (J * E * J.inverse()).inverse()
        # move plane (i, j) onto (0, 1) keeping the larger entry in slot 0
        perm = [i, j] + [k for k in range(n) if k not in (i, j)]
        P = np.zeros((n, n))
        for src, dst in enumerate(perm):
            P[dst, src] = 1.0
        if np.linalg.det(P) < 0:
            P[:, -1] = -P[:, -1]
        Pw = Word.rotation(P)
        w = Pw.inverse() * ratio * Pw
        b = float(w.matrix()[0, 0])
        self._base = (w, b)
        return self._base

    def plane_scaling(self, u: float) -> Word:
        """Word ~ Diag(u, 1/u, 1, ..., 1) for any ``u > 0``."""
        if u <= 0:
            raise ValueError("u must be positive")
        if abs(math.log(u)) < 1e-15:
            return Word(self.n)
        if u < 1:
            return self.plane_scaling(1.0 / u).inverse()
        base, b = self.base()
        # psi along base R_t base covers [1, b**2]; squaring the diagonal part
        # doubles the exponent, so each factor contributes x**2 with x <= b**2
        k = max(1, math.ceil(math.log(u) / (4 * math.log(b))))
        x = min(u ** (1.0 / (2 * k)), b * b)
        t = matgroup.psi_interpolate(b, x)
        R = Word.rotation(_embed2(self.n, matgroup.rotation(t)))
        step = _block_diagonal_part(base * R * base)
        step = step * step
        return step ** k

    def positive_diagonal(self, s) -> Word:
        """Word ~ Diag(s) for positive ``s`` with product one."""
        n = self.n
        out = Word(n)
        u = 1.0
        for p in range(n - 1):
            u *= s[p]
            mover = Word.rotation(_plane_mover(n, p))
            out = out * mover * self.plane_scaling(u) * mover.inverse()
        return out


def synthesize(generators, target, tol: float = matgroup.TOL) -> Word:
    """Word over ``generators`` and SO_n evaluating to ``target`` in SL_n.

    Requires at least one non-conformal generator.
    """
    T = np.asarray(target, dtype=float)
    n = T.shape[0]
    if abs(np.linalg.det(T) - 1) > 1e-9:
        raise ValueError("target must have determinant one")
    if n == 1:
        return Word(1)
    U, s, Vt = np.linalg.svd(T)
    if np.linalg.det(U) < 0:
        U[:, -1] = -U[:, -1]
        Vt[-1, :] = -Vt[-1, :]
    builder = _Builder(generators, tol)
    return Word.rotation(U) * builder.positive_diagonal(s) * Word.rotation(Vt)
