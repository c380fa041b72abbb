"""Analytic metric, one-form and density presets on standard charts."""
from __future__ import annotations

import numpy as np
import sympy as sp

from .fields import COORDS, Chart, MetricField, OneFormField, ScalarField, VolumeDensityField

__all__ = [
    "METRIC_PRESETS",
    "metric_preset",
    "chart_for",
    "theta_preset",
    "parse_one_form",
    "random_potential",
    "density_preset",
    "SL_VOLUME_PRESETS",
]

METRIC_PRESETS = ("flat", "polar", "conformal", "random-spd", "scaled")


def chart_for(preset: str, n: int, resolution: int) -> Chart:
    if preset == "polar":
        # x = r in [1, 2], y = angle in [0, pi/2], z (n = 3) is the cylinder axis
        ext = [(1.0, 2.0), (0.0, float(np.pi / 2))] + [(0.0, 1.0)] * (n - 2)
        return Chart(tuple(ext), (resolution,) * n)
    return Chart.box(n, resolution)


def _trig(rng, n: int, terms: int, amplitude: float, kmax: float):
    x = COORDS[:n]
    expr = sp.Integer(0)
    for _ in range(terms):
        k = rng.uniform(-kmax, kmax, size=n)
        phase = rng.uniform(0, 2 * np.pi)
        a = rng.uniform(-amplitude, amplitude)
        arg = sum(sp.Float(round(float(ki), 6)) * xi for ki, xi in zip(k, x)) + sp.Float(round(phase, 6))
        expr += sp.Float(round(a, 6)) * sp.sin(arg)
    return expr


def _random_spd_expr(n: int, seed: int):
    rng = np.random.default_rng(seed)
    L = sp.Matrix(n, n, lambda i, j: _trig(rng, n, 2, 0.3, 2.0))
    return sp.eye(n) + L * L.T


def metric_preset(
    preset: str, n: int = 2, resolution: int = 64, seed: int = 0, conformal_factor=None
) -> MetricField:
    """``flat``: identity; ``polar``: ``dr^2 + r^2 dphi^2`` (plus ``dz^2``);
    ``conformal``: ``exp(2 f) I``; ``random-spd``: ``I + L L^T`` with smooth
    trigonometric ``L``; ``scaled``: ``4 I``."""
    if n not in (2, 3):
        raise ValueError("charts are 2- or 3-dimensional")
    chart = chart_for(preset, n, resolution)
    x = COORDS[:n]
    if preset == "flat":
        expr = sp.eye(n)
    elif preset == "scaled":
        expr = 4 * sp.eye(n)
    elif preset == "polar":
        expr = sp.diag(*([1, x[0] ** 2] + [1] * (n - 2)))
    elif preset == "conformal":
        f = conformal_factor
        if f is None:
            f = sp.Rational(3, 10) * sp.sin(x[0]) * sp.cos(x[1])
        elif isinstance(f, str):
            f = sp.sympify(f, locals=dict(zip("xyz", COORDS)))
        expr = sp.exp(2 * f) * sp.eye(n)
    elif preset == "random-spd":
        expr = _random_spd_expr(n, seed)
    else:
        raise ValueError(f"unknown metric preset {preset!r}; choose from {METRIC_PRESETS}")
    return MetricField.from_expr(chart, sp.Array(expr.tolist()))


def random_potential(n: int, seed: int, amplitude: float = 0.02):
    rng = np.random.default_rng(seed)
    return _trig(rng, n, 3, amplitude, 1.5)


def parse_one_form(spec: str, n: int, params: dict | None = None):
    """Parse ``"y*dx + x*dy"``-style text into component expressions.

    ``dx, dy, dz`` mark the basis one-forms; other free symbols are looked up
    in ``params``.
    """
    d = sp.symbols("dx dy dz")[:n]
    names = dict(zip("xyz", COORDS))
    names.update({f"d{c}": s for c, s in zip("xyz", d)})
    params = params or {}
    expr = sp.expand(sp.sympify(spec, locals=names))
    expr = expr.subs({sp.Symbol(k): v for k, v in params.items()})
    comps = [expr.coeff(di) for di in d]
    rest = sp.simplify(expr - sum(c * di for c, di in zip(comps, d)))
    if rest != 0 or any(c.has(*d) for c in comps):
        raise ValueError(f"{spec!r} is not linear in {', '.join(map(str, d))}")
    return comps


def theta_preset(chart: Chart, spec: str = "zero", seed: int = 0, params: dict | None = None) -> OneFormField:
    """One-form by name or expression.

    ``zero``; ``random`` (smooth, generally not closed); ``closed-random``
    (differential of a smooth random potential); anything else is parsed by
    :func:`parse_one_form`, e.g. ``"c*dx"`` with ``params={"c": 0.5}``.
    """
    n = chart.n
    x = COORDS[:n]
    if spec == "zero":
        comps = [0] * n
    elif spec == "random":
        rng = np.random.default_rng(seed)
        comps = [_trig(rng, n, 3, 0.05, 1.5) for _ in range(n)]
    elif spec == "closed-random":
        u = random_potential(n, seed)
        comps = [sp.diff(u, xi) for xi in x]
    else:
        comps = parse_one_form(spec, n, params)
    return OneFormField.from_expr(chart, sp.Array(comps))


def scalar_preset(chart: Chart, expr) -> ScalarField:
    if isinstance(expr, str):
        expr = sp.sympify(expr, locals=dict(zip("xyz", COORDS)))
    return ScalarField.from_expr(chart, sp.Array(expr))


SL_VOLUME_PRESETS = ("identity", "scaled", "random-spd")


def density_preset(preset: str, n: int = 2, resolution: int = 32, seed: int = 0):
    """``(h, rho)`` pairs for the volume-normalisation demo."""
    chart = Chart.box(n, resolution)
    if preset == "identity":
        return metric_preset("flat", n, resolution), VolumeDensityField(chart, np.ones(chart.shape))
    if preset == "scaled":
        return metric_preset("scaled", n, resolution), VolumeDensityField(chart, np.ones(chart.shape))
    if preset == "random-spd":
        return metric_preset("random-spd", n, resolution, seed), VolumeDensityField(chart, np.full(chart.shape, 2.0))
    raise ValueError(f"unknown volume preset {preset!r}; choose from {SL_VOLUME_PRESETS}")
