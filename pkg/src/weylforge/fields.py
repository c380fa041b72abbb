"""Rectangular charts and grid-sampled tensor fields.

Fields are numpy arrays whose leading axes index grid nodes (``indexing="ij"``)
and whose trailing axes carry tensor indices.  A field may also carry an
analytic description (:class:`Analytic`) used by verification code to
evaluate exact values and derivatives away from the nodes.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np
import sympy as sp

from .errors import DegenerateMetric

__all__ = [
    "Chart",
    "Analytic",
    "MetricField",
    "OneFormField",
    "ConnectionField",
    "VolumeDensityField",
    "ScalarField",
    "gradient",
    "COORDS",
    "save_field",
    "load_field",
]

COORDS = sp.symbols("x y z", real=True)
MIN_RESOLUTION = 8


@dataclass(frozen=True)
class Chart:
    extents: tuple
    resolution: tuple

    def __post_init__(self):
        ext = tuple((float(a), float(b)) for a, b in self.extents)
        res = tuple(int(r) for r in self.resolution)
        if len(ext) != len(res) or len(ext) not in (2, 3):
            raise ValueError("charts are 2- or 3-dimensional with one extent per axis")
        if any(r < MIN_RESOLUTION for r in res):
            raise ValueError(f"resolution must be >= {MIN_RESOLUTION} per axis")
        if any(b <= a for a, b in ext):
            raise ValueError("each extent must satisfy min < max")
        object.__setattr__(self, "extents", ext)
        object.__setattr__(self, "resolution", res)

    @classmethod
    def box(cls, n: int, resolution: int, lo: float = 0.0, hi: float = 1.0) -> "Chart":
        return cls(((lo, hi),) * n, (resolution,) * n)

    @property
    def n(self) -> int:
        return len(self.extents)

    @property
    def spacing(self) -> tuple:
        return tuple((b - a) / (r - 1) for (a, b), r in zip(self.extents, self.resolution))

    @property
    def h(self) -> float:
        return max(self.spacing)

    @property
    def shape(self) -> tuple:
        return self.resolution

    def axes(self) -> list:
        return [np.linspace(a, b, r) for (a, b), r in zip(self.extents, self.resolution)]

    def nodes(self) -> np.ndarray:
        """Node coordinates, shape ``resolution + (n,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def centers(self) -> np.ndarray:
        """Cell-center coordinates, shape ``(r - 1 for r in resolution) + (n,)``."""
        mids = [0.5 * (ax[:-1] + ax[1:]) for ax in self.axes()]
        return np.stack(np.meshgrid(*mids, indexing="ij"), axis=-1)

    def to_dict(self) -> dict:
        return {"extents": [list(e) for e in self.extents], "resolution": list(self.resolution)}

    @classmethod
    def from_dict(cls, d: dict) -> "Chart":
        return cls(tuple(tuple(e) for e in d["extents"]), tuple(d["resolution"]))


def to_centers(a: np.ndarray, n: int) -> np.ndarray:
    """Multilinear interpolation of node data to cell centers."""
    for axis in range(n):
        lo = [slice(None)] * a.ndim
        hi = [slice(None)] * a.ndim
        lo[axis] = slice(None, -1)
        hi[axis] = slice(1, None)
        a = 0.5 * (a[tuple(lo)] + a[tuple(hi)])
    return a


def gradient(values: np.ndarray, chart: Chart) -> np.ndarray:
    """Partial derivatives along each chart axis, stacked on a new axis after the grid axes.

    Second-order central differences inside, second-order one-sided at the
    boundary.  For ``values`` of shape ``grid + T`` the result has shape
    ``grid + (n,) + T``.
    """
    n = chart.n
    parts = [np.gradient(values, dx, axis=a, edge_order=2) for a, dx in enumerate(chart.spacing)]
    return np.stack(parts, axis=n)


class Analytic:
    """Tensor-valued sympy expression in the chart coordinates ``x, y, z``."""

    def __init__(self, expr, n: int):
        self.n = n
        self.expr = sp.Array(expr)
        self.coords = COORDS[:n]
        free = self.expr.free_symbols - set(self.coords)
        if free:
            raise ValueError(f"unbound symbols in expression: {sorted(map(str, free))}")
        flat = list(sp.flatten(self.expr)) if self.expr.shape else [self.expr[()]]
        self._fn = sp.lambdify(self.coords, flat, "numpy")

    @property
    def shape(self) -> tuple:
        return tuple(self.expr.shape)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        grid = pts.shape[:-1]
        vals = self._fn(*(pts[..., i] for i in range(self.n)))
        vals = [np.broadcast_to(np.asarray(v, dtype=float), grid) for v in vals]
        out = np.stack(vals, axis=-1)
        return out.reshape(grid + self.shape)

    def derivative(self) -> "Analytic":
        """Gradient with the derivative index first: ``d[l, ...] = d/dx^l expr[...]``."""
        return Analytic(sp.derive_by_array(self.expr, self.coords), self.n)


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class MetricField:
    chart: Chart
    g: np.ndarray
    exact: Optional[Analytic] = None

    def __post_init__(self):
        n = self.chart.n
        g = _freeze(self.g)
        if g.shape != self.chart.shape + (n, n):
            raise ValueError(f"metric array shape {g.shape} does not fit the chart")
        if not np.all(np.isfinite(g)):
            raise DegenerateMetric("metric has non-finite entries")
        if np.max(np.abs(g - np.swapaxes(g, -1, -2))) > 1e-12 * max(1.0, np.max(np.abs(g))):
            raise DegenerateMetric("metric is not symmetric")
        if np.min(np.linalg.eigvalsh(g)) <= 0:
            raise DegenerateMetric("metric is not positive definite at every node")
        object.__setattr__(self, "g", g)

    @classmethod
    def from_expr(cls, chart: Chart, expr) -> "MetricField":
        exact = Analytic(expr, chart.n)
        return cls(chart, exact(chart.nodes()), exact)

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.g)

    def derivative(self) -> np.ndarray:
        """``dg[..., l, i, j] = d_l g_ij`` by finite differences."""
        return gradient(self.g, self.chart)


@dataclass(frozen=True, eq=False)
class OneFormField:
    chart: Chart
    theta: np.ndarray
    exact: Optional[Analytic] = None

    def __post_init__(self):
        th = _freeze(self.theta)
        if th.shape != self.chart.shape + (self.chart.n,):
            raise ValueError(f"one-form array shape {th.shape} does not fit the chart")
        if not np.all(np.isfinite(th)):
            raise ValueError("one-form has non-finite entries")
        object.__setattr__(self, "theta", th)

    @classmethod
    def from_expr(cls, chart: Chart, expr) -> "OneFormField":
        exact = Analytic(expr, chart.n)
        return cls(chart, exact(chart.nodes()), exact)

    @classmethod
    def zeros(cls, chart: Chart) -> "OneFormField":
        return cls.from_expr(chart, [0] * chart.n)


@dataclass(frozen=True, eq=False)
class ConnectionField:
    """Christoffel symbols, ``gamma[..., k, i, j] = Gamma^k_ij``."""

    chart: Chart
    gamma: np.ndarray

    def __post_init__(self):
        n = self.chart.n
        gm = _freeze(self.gamma)
        if gm.shape != self.chart.shape + (n, n, n):
            raise ValueError(f"connection array shape {gm.shape} does not fit the chart")
        object.__setattr__(self, "gamma", gm)


@dataclass(frozen=True, eq=False)
class VolumeDensityField:
    chart: Chart
    rho: np.ndarray

    def __post_init__(self):
        r = _freeze(self.rho)
        if r.shape != self.chart.shape:
            raise ValueError("density array shape does not fit the chart")
        if not np.all(r > 0):
            raise ValueError("volume density must be positive")
        object.__setattr__(self, "rho", r)


@dataclass(frozen=True, eq=False)
class ScalarField:
    chart: Chart
    values: np.ndarray
    exact: Optional[Analytic] = None

    def __post_init__(self):
        v = _freeze(self.values)
        if v.shape != self.chart.shape:
            raise ValueError("scalar array shape does not fit the chart")
        object.__setattr__(self, "values", v)

    @classmethod
    def from_expr(cls, chart: Chart, expr) -> "ScalarField":
        exact = Analytic(expr, chart.n)
        return cls(chart, exact(chart.nodes()), exact)


# --------------------------------------------------------------------------
# grid field files

_KINDS = {
    MetricField: ("metric", "g"),
    OneFormField: ("one_form", "theta"),
    ConnectionField: ("connection", "gamma"),
    VolumeDensityField: ("density", "rho"),
    ScalarField: ("scalar", "values"),
}


def field_to_dict(field) -> dict:
    kind, attr = _KINDS[type(field)]
    return {
        "kind": kind,
        "chart": field.chart.to_dict(),
        "values": np.asarray(getattr(field, attr)).ravel().tolist(),
    }


def field_from_dict(d: dict):
    chart = Chart.from_dict(d["chart"])
    n = chart.n
    kind = d["kind"]
    values = np.asarray(d["values"], dtype=float)
    tails = {"metric": (n, n), "one_form": (n,), "connection": (n, n, n), "density": (), "scalar": ()}
    if kind not in tails:
        raise ValueError(f"unknown field kind {kind!r}")
    shape = chart.shape + tails[kind]
    if values.size != int(np.prod(shape)):
        raise ValueError(f"{kind} field needs {int(np.prod(shape))} values, got {values.size}")
    values = values.reshape(shape)
    cls = next(c for c, (k, _) in _KINDS.items() if k == kind)
    return cls(chart, values)


def save_field(field, path) -> None:
    with open(path, "w") as fh:
        json.dump(field_to_dict(field), fh)


def load_field(path):
    with open(path) as fh:
        return field_from_dict(json.load(fh))
