"""Closed subgroups of GL_n(R) that contain SO_n(R).

Such a group is either ``SO_n x| H`` or ``SL_n x| H`` where ``H`` is a closed
subgroup of the multiplicative reals, embedded through the section
``x -> |x|**(1/n) * Diag(sgn x, 1, ..., 1)``.  Groups are presented by a
finite list of generators; SO_n is always implicitly included.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import reduce
from typing import Optional, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import AmbiguousCommensurability, OutOfRange, SingularInput

__all__ = [
    "TOL",
    "TOL_SINGULAR",
    "MAX_DENOMINATOR",
    "MatrixGroupSpec",
    "HClass",
    "GroupClassification",
    "PolarFactors",
    "polar_decompose",
    "is_conformal",
    "classify_group",
    "classify_det_subgroup",
    "splitting_section",
    "lemma2_witness",
    "lemma2_matrix",
    "psi",
    "psi_interpolate",
    "rotation",
    "plane_rotation",
]

TOL = 1e-8
TOL_SINGULAR = 1e-12
MAX_DENOMINATOR = 10**6
# q**2 * |r - p/q| for a convergent p/q roughly equals 1/a_next, the inverse
# of the next partial quotient.  Genuine rational ratios give a huge a_next
# (limited only by rounding); typical irrationals give small ones.
RELATION_TOL = 1e-9
AMBIGUITY_BAND = 1e-4


def _as_matrix(A) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def _check_invertible(A: np.ndarray, tol_singular: float = TOL_SINGULAR) -> float:
    d = float(np.linalg.det(A))
    if abs(d) <= tol_singular:
        raise SingularInput(f"|det A| = {abs(d):.3e} <= {tol_singular:g}")
    return d


def rotation(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def plane_rotation(n: int, i: int, j: int, angle: float) -> np.ndarray:
    """Rotation of ``R^n`` by ``angle`` in the oriented coordinate plane (i, j)."""
    R = np.eye(n)
    c, s = math.cos(angle), math.sin(angle)
    R[i, i] = R[j, j] = c
    R[i, j] = -s
    R[j, i] = s
    return R


@dataclass(frozen=True)
class PolarFactors:
    orthogonal: np.ndarray
    spd: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return self.orthogonal @ self.spd


def polar_decompose(A, tol: float = TOL, tol_singular: float = TOL_SINGULAR) -> PolarFactors:
    """Right polar decomposition ``A = orthogonal @ spd``.

    Raises SingularInput for (numerically) singular input and
    ArithmeticError if the factors miss their residual contract.
    """
    A = _as_matrix(A)
    _check_invertible(A, tol_singular)
    U, P = scipy.linalg.polar(A, side="right")
    P = 0.5 * (P + P.T)
    n = A.shape[0]
    scale = max(np.linalg.norm(A), 1.0)
    if (
        np.linalg.norm(U.T @ U - np.eye(n)) > tol
        or np.linalg.norm(U @ P - A) > tol * scale
        or np.linalg.eigvalsh(P)[0] <= 0
    ):
        raise ArithmeticError("polar factors violate their residual bounds")
    return PolarFactors(U, P)


def is_conformal(A, tol: float = TOL, tol_singular: float = TOL_SINGULAR) -> Optional[float]:
    """Return ``lam > 0`` if ``A.T @ A == lam**2 * I`` within ``tol``, else None."""
    A = _as_matrix(A)
    _check_invertible(A, tol_singular)
    n = A.shape[0]
    AtA = A.T @ A
    lam2 = float(np.trace(AtA)) / n
    if np.max(np.abs(AtA - lam2 * np.eye(n))) <= tol * lam2:
        return math.sqrt(lam2)
    return None


def splitting_section(x: float, n: int) -> np.ndarray:
    """The homomorphic section ``|x|**(1/n) Diag(sgn x, 1, ..., 1)`` of det."""
    if x == 0 or not math.isfinite(x):
        raise ValueError("x must be finite and nonzero")
    if n < 1:
        raise ValueError("n must be >= 1")
    D = np.full(n, abs(x) ** (1.0 / n))
    if x < 0:
        D[0] = -D[0]
    return np.diag(D)


def lemma2_matrix(D, S) -> np.ndarray:
    """``D^-1 S^T D S`` for diagonal ``D`` and rotation ``S``."""
    D = np.asarray(D, dtype=float)
    S = np.asarray(S, dtype=float)
    return np.diag(1.0 / np.diag(D)) @ S.T @ D @ S


def lemma2_witness(D, tol: float = TOL, S=None):
    """Certify ``SL_n`` inside a group containing the diagonal element ``D``.

    If ``D**2`` is not a multiple of the identity, return ``(S, B)`` with S a
    rotation not commuting with ``D**2`` and ``B = D^-1 S^T D S`` a unimodular
    matrix outside SO_n.  Return None when ``D**2`` is scalar.  A rotation may
    be supplied through ``S``; if it commutes with ``D**2`` the result is None.
    """
    D = _as_matrix(D)
    if np.max(np.abs(D - np.diag(np.diag(D)))) > 0:
        raise ValueError("D must be diagonal")
    _check_invertible(D)
    n = D.shape[0]
    d2 = np.diag(D) ** 2
    if np.max(d2) - np.min(d2) <= tol * np.max(d2):
        return None
    if S is None:
        i, j = int(np.argmax(d2)), int(np.argmin(d2))
        S = plane_rotation(n, i, j, math.pi / 4)
    else:
        S = _as_matrix(S)
    D2 = np.diag(d2)
    if np.max(np.abs(S @ D2 - D2 @ S)) <= tol * np.max(d2):
        return None
    B = lemma2_matrix(D, S)
    if np.max(np.abs(B @ B.T - np.eye(n))) <= tol or abs(np.linalg.det(B) - 1) > 1e3 * tol:
        raise ArithmeticError("witness B failed to certify B outside SO_n")
    return S, B


def psi(M) -> float:
    """Largest eigenvalue of the SPD polar factor of ``M``."""
    return float(np.linalg.svd(np.asarray(M, dtype=float), compute_uv=False)[0])


def _psi_path(a: float, angle: float) -> float:
    A = np.diag([a, 1.0 / a])
    return psi(A @ rotation(angle) @ A)


def psi_interpolate(a: float, target: float, tol: float = 1e-12) -> float:
    """Angle ``t`` in [0, pi/2] with ``psi(A R_t A) == target`` for ``A = Diag(a, 1/a)``.

    The path runs continuously from ``a**2`` at ``t = 0`` down to 1 at
    ``t = pi/2``; bisection locates the crossing.
    """
    if not a > 1:
        raise ValueError("a must exceed 1")
    if not 1.0 <= target <= a * a:
        raise OutOfRange(f"target {target} outside [1, {a * a}]")
    if abs(_psi_path(a, 0.0) - target) <= tol:
        return 0.0
    if abs(_psi_path(a, math.pi / 2) - target) <= tol:
        return math.pi / 2
    return scipy.optimize.bisect(
        lambda t: _psi_path(a, t) - target, 0.0, math.pi / 2, xtol=1e-15, rtol=8.9e-16, maxiter=200
    )


# --------------------------------------------------------------------------
# closed subgroups of R*


@dataclass(frozen=True)
class HClass:
    """A closed subgroup of the multiplicative group of nonzero reals.

    ``positive`` is ``"trivial"``, ``"cyclic"`` (generated by ``generator > 1``)
    or ``"continuum"``.  ``negative`` is ``"none"``, ``"minus_one"`` (``-1`` is
    in the group) or ``"negative_generator"`` (the group is ``mu**Z`` with
    ``mu < -1``; then ``generator == mu**2``).
    """

    positive: str = "trivial"
    generator: Optional[float] = None
    negative: str = "none"
    mu: Optional[float] = None

    def __post_init__(self):
        if self.positive not in ("trivial", "cyclic", "continuum"):
            raise ValueError(f"bad positive part {self.positive!r}")
        if self.negative not in ("none", "minus_one", "negative_generator"):
            raise ValueError(f"bad negative part {self.negative!r}")
        if self.positive == "cyclic" and not (self.generator and self.generator > 1):
            raise ValueError("cyclic generator must be > 1")
        if self.negative == "negative_generator":
            if self.positive != "cyclic" or self.mu is None or self.mu >= -1:
                raise ValueError("negative_generator needs mu < -1 and a cyclic positive part")
            if not math.isclose(self.mu**2, self.generator, rel_tol=1e-9):
                raise ValueError("mu**2 must generate the positive part")

    def contains(self, x: float, tol: float = 1e-9) -> bool:
        if x == 0:
            return False
        if x < 0:
            if self.negative == "none":
                return False
            if self.negative == "minus_one":
                return self.contains(-x, tol)
            return self.contains(x / self.mu, tol)
        if self.positive == "continuum":
            return True
        ell = math.log(x)
        if self.positive == "trivial":
            return abs(ell) <= tol
        k = ell / math.log(self.generator)
        return abs(k - round(k)) <= tol * max(1.0, abs(k))

    def isclose(self, other: "HClass", rel_tol: float = 1e-9) -> bool:
        if (self.positive, self.negative) != (other.positive, other.negative):
            return False
        for a, b in ((self.generator, other.generator), (self.mu, other.mu)):
            if (a is None) != (b is None):
                return False
            if a is not None and not math.isclose(a, b, rel_tol=rel_tol):
                return False
        return True

    def to_dict(self) -> dict:
        pos: dict = {"kind": self.positive}
        if self.positive == "cyclic":
            pos["generator"] = self.generator
        neg: dict = {"kind": self.negative}
        if self.negative == "negative_generator":
            neg["generator"] = self.mu
        return {"positive_part": pos, "negative_part": neg}

    @classmethod
    def from_dict(cls, d: dict) -> "HClass":
        pos, neg = d["positive_part"], d["negative_part"]
        return cls(pos["kind"], pos.get("generator"), neg["kind"], neg.get("generator"))

    def __str__(self):
        pos = {"trivial": "{1}", "continuum": "R+"}.get(self.positive)
        if pos is None:
            pos = f"{self.generator:g}^Z"
        if self.negative == "minus_one":
            return f"{{+-1}} x {pos}"
        if self.negative == "negative_generator":
            return f"({self.mu:g})^Z"
        return pos


def _convergents(r: float, max_denominator: int):
    """Continued-fraction convergents of ``r`` with denominator <= the bound."""
    x = Fraction(r)
    h0, h1, k0, k1 = 0, 1, 1, 0
    while True:
        a = x.numerator // x.denominator
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > max_denominator:
            return
        yield Fraction(h1, k1)
        frac = x - a
        if frac == 0:
            return
        x = 1 / frac


def _relation(r: float, max_denominator: int):
    """Classify the real ratio ``r`` as rational (returns a Fraction) or not (None).

    Each convergent ``p/q`` is scored by ``q**2 * |r - p/q|``.
    """
    best = math.inf
    scale = max(1.0, abs(r))
    for p in _convergents(r, max_denominator):
        score = p.denominator**2 * abs(r - p.numerator / p.denominator)
        if score <= RELATION_TOL * scale:
            return p
        best = min(best, score)
    if best <= AMBIGUITY_BAND * scale:
        raise AmbiguousCommensurability(
            f"ratio {r!r} has a suspiciously good rational approximation "
            f"(q^2*err = {best:.2e}) but none is conclusive with denominators <= {max_denominator}"
        )
    return None


def classify_det_subgroup(
    values: Sequence[float], tol: float = 1e-9, max_denominator: int = MAX_DENOMINATOR
) -> HClass:
    """Closed subgroup of R* generated by ``values``."""
    values = [float(v) for v in values]
    if not values:
        return HClass()
    for v in values:
        if v == 0 or not math.isfinite(v):
            raise ValueError(f"values must be finite and nonzero, got {v}")
    logs = [math.log(abs(v)) for v in values]
    signs = [v < 0 for v in values]
    nonzero = [i for i, ell in enumerate(logs) if abs(ell) > tol]
    has_negative = any(signs)

    if not nonzero:
        return HClass("trivial", None, "minus_one" if has_negative else "none")

    ref = max(nonzero, key=lambda i: abs(logs[i]))
    ratios = {}
    for i in nonzero:
        if i == ref:
            ratios[i] = Fraction(1)
            continue
        rel = _relation(logs[i] / logs[ref], max_denominator)
        if rel is None:
            return HClass("continuum", None, "minus_one" if has_negative else "none")
        ratios[i] = rel

    # gcd of the rationals ratios[i]: gcd(numerators) / lcm(denominators)
    num = reduce(math.gcd, (abs(f.numerator) for f in ratios.values()))
    den = reduce(lambda a, b: a * b // math.gcd(a, b), (f.denominator for f in ratios.values()))
    unit = Fraction(num, den)
    gamma = abs(logs[ref]) * float(unit)
    sgn = 1 if logs[ref] > 0 else -1
    k = [0] * len(values)
    for i, f in ratios.items():
        q = f / unit
        assert q.denominator == 1
        k[i] = sgn * q.numerator
    lam = math.exp(gamma)

    if not has_negative:
        return HClass("cyclic", lam, "none")
    # The group is the image of {(k_i, sign_i)} in Z x Z/2.  It is cyclic
    # generated by (1, 1) iff every sign bit equals the parity of k_i;
    # otherwise (0, 1), i.e. -1, lies in it.
    if all(s == (ki % 2 == 1) for s, ki in zip(signs, k)):
        return HClass("cyclic", lam * lam, "negative_generator", -lam)
    return HClass("cyclic", lam, "minus_one")


# --------------------------------------------------------------------------
# groups


@dataclass(frozen=True)
class MatrixGroupSpec:
    n: int
    generators: tuple
    tol: float = TOL

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        gens = tuple(_as_matrix(g) for g in self.generators)
        if not gens:
            raise ValueError("at least one generator is required")
        for g in gens:
            if g.shape != (self.n, self.n):
                raise ValueError(f"generator shape {g.shape} does not match n={self.n}")
            _check_invertible(g)
        object.__setattr__(self, "generators", gens)

    @classmethod
    def from_dict(cls, d: dict) -> "MatrixGroupSpec":
        n = int(d["n"])
        gens = []
        for flat in d["generators"]:
            arr = np.asarray(flat, dtype=float)
            if arr.size != n * n:
                raise ValueError(f"generator has {arr.size} entries, expected {n * n}")
            gens.append(arr.reshape(n, n))
        return cls(n, tuple(gens), float(d.get("tol", TOL)))

    def to_dict(self) -> dict:
        return {"n": self.n, "generators": [g.ravel().tolist() for g in self.generators], "tol": self.tol}


@dataclass(frozen=True)
class GroupClassification:
    linear_part: str
    h: HClass
    splitting_witnesses: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "linear_part": self.linear_part,
            "h": self.h.to_dict(),
            "witnesses": [w.ravel().tolist() for w in self.splitting_witnesses],
        }

    def contains(self, A, tol: float = TOL) -> bool:
        """Membership of ``A`` in the classified group."""
        A = _as_matrix(A)
        d = float(np.linalg.det(A))
        if not self.h.contains(d, tol=max(tol, 1e-9)):
            return False
        if self.linear_part == "SL":
            return True
        return is_conformal(A, tol) is not None

    def __str__(self):
        return f"{self.linear_part}_n x| {self.h}"


def classify_group(
    spec: MatrixGroupSpec, max_denominator: int = MAX_DENOMINATOR
) -> GroupClassification:
    """Decompose the closed group generated by ``spec.generators`` and SO_n.

    A single non-conformal generator forces the full ``SL_n``: its positive
    polar factor is non-scalar and yields an element outside SO_n of
    determinant one.  Otherwise the group stays inside CO_n, where the
    unimodular part is SO_n.
    """
    n = spec.n
    dets = [float(np.linalg.det(g)) for g in spec.generators]
    linear = "SO"
    for g in spec.generators:
        if is_conformal(g, spec.tol) is None:
            linear = "SL"
            break
    h = classify_det_subgroup(dets, max_denominator=max_denominator)
    return GroupClassification(linear, h, [splitting_section(d, n) for d in dets])
