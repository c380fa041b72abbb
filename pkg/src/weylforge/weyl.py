"""Weyl connections on a coordinate chart.

Sign conventions: a Weyl connection satisfies ``nabla g = theta (x) g`` and
metrics in a conformal class are related by ``exp(2 f) g' = g``.  The
formulas derived from these conventions (Christoffel correction, Lee-form
transformation, sign of the potential) are all re-checked numerically by the
residual functions below rather than taken on faith.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np
import scipy.integrate

from .errors import DegenerateMetric, NotClosed, NotWeyl, PathDependence
from .fields import (
    Analytic,
    Chart,
    ConnectionField,
    MetricField,
    OneFormField,
    ScalarField,
    VolumeDensityField,
    gradient,
    to_centers,
)

__all__ = [
    "levi_civita",
    "weyl_connection",
    "solve_weyl_at_node",
    "torsion_of",
    "nabla_metric",
    "compatibility_residual",
    "LeeForm",
    "lee_form_of",
    "ExteriorDerivative",
    "exterior_derivative",
    "integrate_potential",
    "conformal_change",
    "lee_transform_check",
    "exhibit_local_metric",
    "volume_normalized_metric",
    "WeylReport",
    "weyl_report",
]


def _same_chart(*fields):
    charts = {f.chart for f in fields}
    if len(charts) != 1:
        raise ValueError("fields live on different charts")
    return charts.pop()


def _symmetrize(gamma: np.ndarray) -> np.ndarray:
    # IEEE addition commutes, so the result is exactly symmetric in (i, j)
    return 0.5 * (gamma + np.swapaxes(gamma, -1, -2))


def _christoffel(g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """``Gamma^k_ij = 1/2 g^kl (d_i g_jl + d_j g_il - d_l g_ij)`` from ``dg[..., l, i, j]``."""
    ginv = np.linalg.inv(g)
    lowered = 0.5 * (
        np.einsum("...ijl->...lij", dg)
        + np.einsum("...jil->...lij", dg)
        - dg
    )
    return _symmetrize(np.einsum("...kl,...lij->...kij", ginv, lowered))


def _weyl_correction(g: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """``-1/2 (theta_i delta^k_j + theta_j delta^k_i - g_ij theta^k)``."""
    n = g.shape[-1]
    eye = np.eye(n)
    theta_up = np.einsum("...kl,...l->...k", np.linalg.inv(g), theta)
    corr = (
        np.einsum("...i,kj->...kij", theta, eye)
        + np.einsum("...j,ki->...kij", theta, eye)
        - np.einsum("...ij,...k->...kij", g, theta_up)
    )
    return _symmetrize(-0.5 * corr)


def levi_civita(g: MetricField) -> ConnectionField:
    return ConnectionField(g.chart, _christoffel(g.g, g.derivative()))


def weyl_connection(g: MetricField, theta: OneFormField) -> ConnectionField:
    """The torsion-free connection with ``nabla g = theta (x) g``."""
    chart = _same_chart(g, theta)
    gamma = _christoffel(g.g, g.derivative()) + _weyl_correction(g.g, theta.theta)
    return ConnectionField(chart, _symmetrize(gamma))


def solve_weyl_at_node(g: np.ndarray, dg: np.ndarray, theta: np.ndarray) -> np.ndarray:
    """Solve ``d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il = theta_k g_ij`` for symmetric Gamma.

    Independent of the closed-form construction: the system is assembled
    entry by entry and solved by least squares at a single node.
    """
    n = g.shape[0]
    unknowns = [(l, a, b) for l in range(n) for a in range(n) for b in range(a, n)]
    col = {u: c for c, u in enumerate(unknowns)}

    def idx(l, a, b):
        return col[(l, min(a, b), max(a, b))]

    rows, rhs = [], []
    for k in range(n):
        for i in range(n):
            for j in range(i, n):
                row = np.zeros(len(unknowns))
                for l in range(n):
                    row[idx(l, k, i)] += g[l, j]
                    row[idx(l, k, j)] += g[i, l]
                rows.append(row)
                rhs.append(dg[k, i, j] - theta[k] * g[i, j])
    sol, *_ = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)
    gamma = np.zeros((n, n, n))
    for (l, a, b), v in zip(unknowns, sol):
        gamma[l, a, b] = gamma[l, b, a] = v
    return gamma


def torsion_of(conn: ConnectionField):
    """``T^k_ij = Gamma^k_ij - Gamma^k_ji`` and its max-norm."""
    T = conn.gamma - np.swapaxes(conn.gamma, -1, -2)
    return T, float(np.max(np.abs(T)))


def nabla_metric(gamma: np.ndarray, g: np.ndarray, dg: np.ndarray) -> np.ndarray:
    """``(nabla_k g)_ij = d_k g_ij - Gamma^l_ki g_lj - Gamma^l_kj g_il``."""
    return (
        dg
        - np.einsum("...lki,...lj->...kij", gamma, g)
        - np.einsum("...lkj,...il->...kij", gamma, g)
    )


def compatibility_residual(
    conn: ConnectionField, g: MetricField, theta: Optional[OneFormField] = None
) -> float:
    """``max |nabla g - theta (x) g|``.

    With analytic metric and one-form data the residual is taken at cell
    centres, where the lowered connection coefficients are interpolated
    multilinearly and ``g``, ``dg`` and ``theta`` are exact; it then measures the discretisation error
    of the connection field itself.  Otherwise it is evaluated at the nodes
    with finite-difference derivatives of ``g``.
    """
    chart = _same_chart(conn, g) if theta is None else _same_chart(conn, g, theta)
    n = chart.n
    exact_theta = theta is None or theta.exact is not None
    if g.exact is not None and exact_theta:
        pts = chart.centers()
        gc = g.exact(pts)
        dgc = g.exact.derivative()(pts)
        # first-kind symbols Gamma_{j,ki} = g_lj Gamma^l_ki enter nabla g directly
        lowered = to_centers(np.einsum("...lj,...lki->...jki", g.g, conn.gamma), n)
        ng = dgc - np.einsum("...jki->...kij", lowered) - np.einsum("...ikj->...kij", lowered)
        th = np.zeros(pts.shape) if theta is None else theta.exact(pts)
    else:
        gc = g.g
        ng = nabla_metric(conn.gamma, gc, g.derivative())
        th = np.zeros(chart.shape + (n,)) if theta is None else theta.theta
    res = ng - np.einsum("...k,...ij->...kij", th, gc)
    return float(np.max(np.abs(res)))


@dataclass(frozen=True, eq=False)
class LeeForm:
    theta: OneFormField
    fit_residual: float


def lee_form_of(conn: ConnectionField, g: MetricField, rtol: float = 1e-2) -> LeeForm:
    """Recover ``theta`` from ``nabla g = theta (x) g``.

    ``theta_k`` is the average of ``(nabla_k g)(e_a, e_a)`` over a
    g-orthonormal frame ``e_a``, i.e. ``tr(g^-1 nabla_k g) / n``.  Raises
    NotWeyl when ``nabla g`` is not proportional to ``g`` to within ``rtol``
    relative to the size of ``nabla g``.
    """
    chart = _same_chart(conn, g)
    n = chart.n
    ng = nabla_metric(conn.gamma, g.g, g.derivative())
    ginv = g.inverse()
    theta = np.einsum("...ij,...kji->...k", ginv, ng) / n
    fit = ng - np.einsum("...k,...ij->...kij", theta, g.g)
    resid = float(np.max(np.abs(fit)))
    scale = max(float(np.max(np.abs(ng))), float(np.max(np.abs(g.g))) * 1e-12, 1e-300)
    if resid > rtol * scale and resid > 1e-12:
        raise NotWeyl(f"nabla g is not proportional to g (fit residual {resid:.3e})")
    return LeeForm(OneFormField(chart, theta), resid)


@dataclass(frozen=True, eq=False)
class ExteriorDerivative:
    dtheta: np.ndarray
    max_norm: float
    tol: float
    closed: bool


def _c1_norm(theta: OneFormField) -> float:
    return float(np.max(np.abs(theta.theta)) + np.max(np.abs(gradient(theta.theta, theta.chart))))


def exterior_derivative(theta: OneFormField, tol: Optional[float] = None) -> ExteriorDerivative:
    """``(d theta)_ij = d_i theta_j - d_j theta_i`` and a closedness verdict.

    The default tolerance ``10 h^2 |theta|_C1`` tracks the discretisation
    error of the second-order stencils.
    """
    chart = theta.chart
    dth = gradient(theta.theta, chart)  # [..., i, j] = d_i theta_j
    d = dth - np.swapaxes(dth, -1, -2)
    m = float(np.max(np.abs(d)))
    if tol is None:
        tol = max(10.0 * chart.h**2 * _c1_norm(theta), 1e-12)
    return ExteriorDerivative(d, m, tol, m <= tol)


def _path_integral(theta: np.ndarray, chart: Chart, base: tuple, order) -> np.ndarray:
    """Integrate along coordinate lines from ``base``, visiting axes in ``order``."""
    n = chart.n
    f = np.zeros(chart.shape)
    spacing = chart.spacing
    for pos, axis in enumerate(order):
        later = order[pos + 1:]
        sl = tuple(base[a] if a in later else slice(None) for a in range(n))
        comp = theta[sl + (axis,)]
        # axis position within the reduced array
        red_axis = sum(1 for a in range(axis) if a not in later)
        F = scipy.integrate.cumulative_trapezoid(comp, dx=spacing[axis], axis=red_axis, initial=0.0)
        F = F - np.take(F, [base[axis]], axis=red_axis)
        for a in sorted(later):
            F = np.expand_dims(F, axis=a)
        f = f + F
    return f


def integrate_potential(
    theta: OneFormField, basepoint: Optional[tuple] = None, closed_tol: Optional[float] = None
) -> ScalarField:
    """Scalar ``f`` with ``df = theta`` and ``f(basepoint) = 0``.

    Integrates along coordinate lines in the order x, y(, z) and cross-checks
    against the reverse order.
    """
    chart = theta.chart
    n = chart.n
    base = tuple(basepoint) if basepoint is not None else (0,) * n
    if len(base) != n or any(not 0 <= b < r for b, r in zip(base, chart.shape)):
        raise ValueError(f"basepoint {base} is not a node index of the chart")
    ed = exterior_derivative(theta, closed_tol)
    if not ed.closed:
        raise NotClosed(f"|d theta| = {ed.max_norm:.3e} exceeds {ed.tol:.3e}")
    f1 = _path_integral(theta.theta, chart, base, tuple(range(n)))
    f2 = _path_integral(theta.theta, chart, base, tuple(reversed(range(n))))
    gap = float(np.max(np.abs(f1 - f2)))
    tol = 10.0 * chart.h**2 * max(1.0, _c1_norm(theta))
    if gap > tol:
        raise PathDependence(f"path orderings disagree by {gap:.3e} > {tol:.3e}")
    return ScalarField(chart, f1)


def conformal_change(g: MetricField, f: ScalarField) -> MetricField:
    """``g' = exp(-2 f) g``, so that ``exp(2 f) g' = g``."""
    chart = _same_chart(g, f)
    scale = np.exp(-2.0 * f.values)[..., None, None]
    exact = None
    if g.exact is not None and f.exact is not None:
        import sympy as sp

        exact = Analytic(sp.exp(-2 * f.exact.expr[()]) * g.exact.expr, chart.n)
    return MetricField(chart, scale * g.g, exact)


def _df(f: ScalarField) -> np.ndarray:
    if f.exact is not None:
        return f.exact.derivative()(f.chart.nodes())
    return gradient(f.values, f.chart)


def lee_transform_check(
    g: MetricField, theta: OneFormField, f: ScalarField, tol: Optional[float] = None
) -> dict:
    """Check that the Lee form with respect to ``exp(-2 f) g`` is ``theta - 2 df``."""
    chart = _same_chart(g, theta, f)
    conn = weyl_connection(g, theta)
    gp = conformal_change(g, f)
    recovered = lee_form_of(conn, gp).theta.theta
    expected = theta.theta - 2.0 * _df(f)
    dev = float(np.max(np.abs(recovered - expected)))
    if tol is None:
        tol = 1e-6 + 10.0 * chart.h**2 * max(1.0, float(np.max(np.abs(expected))))
    return {"max_deviation": dev, "tol": tol, "ok": dev <= tol}


def exhibit_local_metric(
    g: MetricField, theta: OneFormField, closed_tol: Optional[float] = None
):
    """Metric in ``[g]`` whose Levi-Civita connection is the Weyl connection of ``(g, theta)``.

    With ``u`` solving ``du = -theta``, ``g' = exp(u) g`` satisfies
    ``nabla g' = (du + theta) (x) g' = 0``.  Returns ``(f, g', report)`` with
    ``f = -u / 2`` the conformal factor in ``exp(2 f) g' = g``.
    """
    chart = _same_chart(g, theta)
    neg = OneFormField(chart, -theta.theta)
    u = integrate_potential(neg, closed_tol=closed_tol)
    f = ScalarField(chart, -0.5 * u.values)
    gp = conformal_change(g, f)
    conn = weyl_connection(g, theta)
    # d(e^u g) = e^u (dg + du (x) g); only the numerical potential is differenced
    du = gradient(u.values, chart)
    dg = g.exact.derivative()(chart.nodes()) if g.exact is not None else g.derivative()
    dgp = np.exp(u.values)[..., None, None, None] * (dg + du[..., :, None, None] * g.g[..., None, :, :])
    parallel = float(np.max(np.abs(nabla_metric(conn.gamma, gp.g, dgp))))
    potential = float(np.max(np.abs(du + theta.theta)))
    lc_gap = float(np.max(np.abs(levi_civita(gp).gamma - conn.gamma)))
    report = {
        "nabla_gprime_residual": parallel,
        "potential_residual": potential,
        "levi_civita_gap": lc_gap,
    }
    return f, gp, report


def volume_normalized_metric(h: MetricField, rho: VolumeDensityField) -> MetricField:
    """``g = (v_h**2)**(1/n) h`` with ``v_h = rho / sqrt(det h)``; then ``det g = rho**2``."""
    chart = _same_chart(h, rho)
    n = chart.n
    det_h = np.linalg.det(h.g)
    if np.any(det_h <= 0):
        raise DegenerateMetric("det h must be positive")
    v2 = rho.rho**2 / det_h
    return MetricField(chart, v2[..., None, None] ** (1.0 / n) * h.g)


@dataclass
class WeylReport:
    torsion_residual: float
    compatibility_residual: float
    dtheta_residual: float
    potential_residual: Optional[float]
    closed: bool
    local_metric_residual: Optional[float] = None
    resolution: Optional[list] = None
    h: Optional[float] = None

    def to_dict(self) -> dict:
        return asdict(self)


def weyl_report(g: MetricField, theta: OneFormField) -> WeylReport:
    """Build the Weyl connection and run the residual suite on it."""
    conn = weyl_connection(g, theta)
    _, tors = torsion_of(conn)
    compat = compatibility_residual(conn, g, theta)
    ed = exterior_derivative(theta)
    potential = local = None
    if ed.closed:
        _, _, rep = exhibit_local_metric(g, theta)
        potential = rep["potential_residual"]
        local = rep["nabla_gprime_residual"]
    return WeylReport(
        torsion_residual=tors,
        compatibility_residual=compat,
        dtheta_residual=ed.max_norm,
        potential_residual=potential,
        closed=ed.closed,
        local_metric_residual=local,
        resolution=list(g.chart.resolution),
        h=g.chart.h,
    )
