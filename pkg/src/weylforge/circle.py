"""A closed Weyl structure on the circle that is not exact.

The structure group is ``H = lam**Z`` inside the positive reals, and the
H-bundle over S^1 is described by one transition value ``lam`` at the cut
point ``t = 0``.  On the universal cover R the metric ``exp(2 c t) dt^2`` with
``c = log(lam) / (2 pi)`` is carried to ``lam**2`` times itself by the deck
translation, so its Levi-Civita connection descends to S^1.  Measured
against ``dt^2`` that connection has Lee form ``-2 c dt``, whose period
``-2 log(lam)`` is nonzero unless the bundle is trivial.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "CircleBundle",
    "CoverMetric",
    "DescendedWeyl",
    "build_circle_structure",
    "bundles_isomorphic",
    "reduction_obstruction",
    "cover_metric",
    "descend_weyl",
    "lee_holonomy",
    "conformal_class_invariance",
    "random_periodic",
]

MIN_SAMPLES = 16


@dataclass(frozen=True)
class CircleBundle:
    lam: float
    samples: int
    cut: float = 0.0

    def __post_init__(self):
        if not self.lam > 0 or not math.isfinite(self.lam):
            raise ValueError("lambda must be a positive real")
        if self.samples < MIN_SAMPLES:
            raise ValueError(f"samples must be >= {MIN_SAMPLES}")

    @property
    def transitions(self) -> dict:
        """Transition values keyed by cut point (a single one)."""
        return {self.cut: self.lam}

    def t(self) -> np.ndarray:
        return 2 * math.pi * np.arange(self.samples) / self.samples

    def fiber_representative(self, t):
        """``lam**(t / 2 pi)``, the coset representative of the fibre over ``t``."""
        return self.lam ** (np.asarray(t, dtype=float) / (2 * math.pi))


def build_circle_structure(lam: float, samples: int = 64) -> CircleBundle:
    return CircleBundle(float(lam), int(samples))


def _same_coset(a: float, b: float, lam: float, tol: float) -> bool:
    if abs(math.log(lam)) <= tol:
        return abs(math.log(a / b)) <= tol
    k = math.log(a / b) / math.log(lam)
    return abs(k - round(k)) <= tol


def bundles_isomorphic(a: CircleBundle, b: CircleBundle, tol: float = 1e-9) -> str | None:
    """How ``b`` maps onto ``a``: ``"identity"``, ``"flip"`` (``t -> 2 pi - t``) or None.

    Both must have the same structure group; the check compares fibre cosets
    at every sample.
    """
    # lam**Z == mu**Z iff |log lam| == |log mu|
    if not math.isclose(abs(math.log(a.lam)), abs(math.log(b.lam)), rel_tol=tol, abs_tol=tol):
        return None
    t = b.t()
    fb = b.fiber_representative(t)
    if all(_same_coset(x, y, a.lam, tol) for x, y in zip(a.fiber_representative(t), fb)):
        return "identity"
    flipped = a.fiber_representative(2 * math.pi - t)
    if all(_same_coset(x, y, a.lam, tol) for x, y in zip(flipped, fb)):
        return "flip"
    return None


def reduction_obstruction(bundle: CircleBundle, tol: float = 1e-12):
    """Holonomy of the bundle in H and whether it reduces to the trivial group."""
    hol = math.prod(bundle.transitions.values())
    return hol, abs(hol - 1.0) <= tol


@dataclass(frozen=True)
class CoverMetric:
    c: float

    @classmethod
    def from_lambda(cls, lam: float) -> "CoverMetric":
        return cls(math.log(lam) / (2 * math.pi))

    def __call__(self, t):
        return np.exp(2 * self.c * np.asarray(t, dtype=float))

    def deck_ratio_defect(self, lam: float, t, k: int = 1) -> float:
        """Relative defect of ``g(t + 2 pi k) = lam**(2k) g(t)`` at the given points."""
        t = np.asarray(t, dtype=float)
        pulled = self(t + 2 * math.pi * k)
        return float(np.max(np.abs(pulled / (lam ** (2 * k) * self(t)) - 1.0)))


def cover_metric(lam: float, check_points=None, tol: float = 1e-12) -> CoverMetric:
    if not lam > 0:
        raise ValueError("lambda must be positive")
    cm = CoverMetric.from_lambda(lam)
    if check_points is None:
        check_points = np.linspace(-2 * math.pi, 2 * math.pi, 33)
    defect = cm.deck_ratio_defect(lam, check_points)
    if defect > tol:
        raise ArithmeticError(f"deck translation is not a similarity of ratio {lam} ({defect:.2e})")
    return cm


@dataclass(frozen=True, eq=False)
class DescendedWeyl:
    t: np.ndarray
    gamma: np.ndarray
    theta: np.ndarray

    @property
    def samples(self) -> int:
        return len(self.t)


def descend_weyl(cover: CoverMetric, samples: int) -> DescendedWeyl:
    """Levi-Civita coefficient of the cover metric over one period, and its Lee form against dt^2.

    In one dimension ``Gamma = (log g)' / 2``; it is differenced on the cover
    (where the log-metric is linear) and restricted to ``[0, 2 pi)``.  With
    the reference metric ``dt^2``, ``nabla(dt^2) = -2 Gamma dt (x) dt^2``.
    """
    if samples < MIN_SAMPLES:
        raise ValueError(f"samples must be >= {MIN_SAMPLES}")
    h = 2 * math.pi / samples
    t = h * np.arange(samples)
    # sample one extra point on each side on the cover, not on the circle
    tt = h * np.arange(-1, samples + 1)
    logg = np.log(cover(tt))
    gamma = 0.5 * (logg[2:] - logg[:-2]) / (2 * h)
    theta = -2.0 * gamma
    return DescendedWeyl(t, gamma, theta)


def _periodic_trapezoid(values: np.ndarray) -> float:
    return float(np.sum(values) * 2 * math.pi / len(values))


def lee_holonomy(weyl: DescendedWeyl) -> float:
    """Period of the Lee form around S^1."""
    return _periodic_trapezoid(weyl.theta)


def random_periodic(rng, terms: int = 3, amplitude: float = 1.0):
    """Random trigonometric polynomial on S^1 as a vectorised callable."""
    k = rng.integers(1, 5, size=terms)
    a = rng.uniform(-amplitude, amplitude, size=terms)
    b = rng.uniform(-amplitude, amplitude, size=terms)
    c0 = rng.uniform(-amplitude, amplitude)

    def f(t):
        t = np.asarray(t, dtype=float)[..., None]
        return c0 + np.sum(a * np.cos(k * t) + b * np.sin(k * t), axis=-1)

    return f


def conformal_class_invariance(weyl: DescendedWeyl, f) -> dict:
    """Lee form against ``g' = exp(-2 f) dt^2`` and a comparison of periods.

    ``theta'`` is recomputed from ``nabla g' = theta' (x) g'``, i.e.
    ``theta' = (log g')' - 2 Gamma``, with periodic central differences.
    """
    t = weyl.t
    N = len(t)
    h = 2 * math.pi / N
    fv = f(t) if callable(f) else np.asarray(f, dtype=float)
    log_gp = -2.0 * fv
    dlog = (np.roll(log_gp, -1) - np.roll(log_gp, 1)) / (2 * h)
    theta_p = dlog - 2.0 * weyl.gamma
    hol = lee_holonomy(weyl)
    hol_p = _periodic_trapezoid(theta_p)
    tol = 10 * h**2
    return {
        "holonomy": hol,
        "holonomy_prime": hol_p,
        "abs_deviation": abs(hol_p - hol),
        "rel_deviation": abs(hol_p - hol) / abs(hol) if hol != 0 else abs(hol_p - hol),
        "pointwise_change": float(np.max(np.abs(theta_p - weyl.theta))),
        "tol": tol,
        "ok": abs(hol_p - hol) <= tol,
    }
