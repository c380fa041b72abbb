import numpy as np
import pytest
import sympy as sp

from weylforge import presets, weyl
from weylforge.errors import DegenerateMetric, NotClosed, NotWeyl
from weylforge.fields import (
    COORDS,
    Chart,
    ConnectionField,
    MetricField,
    OneFormField,
    ScalarField,
    VolumeDensityField,
    load_field,
    save_field,
)


# -- charts and fields ----------------------------------------------------


def test_chart_validation():
    with pytest.raises(ValueError):
        Chart.box(2, 4)
    with pytest.raises(ValueError):
        Chart(((0, 1),), (16,))
    with pytest.raises(ValueError):
        Chart(((1, 0), (0, 1)), (16, 16))
    c = Chart.box(3, 9)
    assert c.nodes().shape == (9, 9, 9, 3) and c.centers().shape == (8, 8, 8, 3)
    assert Chart.from_dict(c.to_dict()) == c


def test_metric_validation():
    c = Chart.box(2, 8)
    with pytest.raises(DegenerateMetric):
        MetricField(c, np.zeros(c.shape + (2, 2)))
    bad = np.broadcast_to(np.array([[1.0, 0.5], [0.0, 1.0]]), c.shape + (2, 2))
    with pytest.raises(DegenerateMetric):
        MetricField(c, bad)


@pytest.mark.parametrize("field_kind", ["metric", "one_form", "density"])
def test_field_roundtrip(tmp_path, field_kind):
    g = presets.metric_preset("random-spd", 2, 12, seed=3)
    field = {
        "metric": g,
        "one_form": presets.theta_preset(g.chart, "random", seed=1),
        "density": VolumeDensityField(g.chart, 1.0 + g.g[..., 0, 0]),
    }[field_kind]
    save_field(field, tmp_path / "f.json")
    back = load_field(tmp_path / "f.json")
    attr = {"metric": "g", "one_form": "theta", "density": "rho"}[field_kind]
    assert type(back) is type(field)
    assert np.array_equal(getattr(back, attr), getattr(field, attr))


def test_parse_one_form():
    comps = presets.parse_one_form("c*y*dx + x*dy", 2, {"c": 2})
    x, y = COORDS[:2]
    assert comps == [2 * y, x]
    with pytest.raises(ValueError):
        presets.parse_one_form("dx*dy", 2)


# -- connections against independent oracles ------------------------------


def test_levi_civita_conformal_oracle():
    """For g = exp(2f) I, Gamma^k_ij = d_i f delta_kj + d_j f delta_ki - d_k f delta_ij."""
    x, y = COORDS[:2]
    f = sp.Rational(3, 10) * sp.sin(x) * sp.cos(y)
    g = presets.metric_preset("conformal", 2, 65, conformal_factor=f)
    grad = np.stack([sp.lambdify((x, y), sp.diff(f, v))(*np.moveaxis(g.chart.nodes(), -1, 0)) for v in (x, y)], -1)
    grad = np.broadcast_to(grad, g.chart.shape + (2,))
    I = np.eye(2)
    exact = (
        np.einsum("...i,kj->...kij", grad, I)
        + np.einsum("...j,ki->...kij", grad, I)
        - np.einsum("...k,ij->...kij", grad, I)
    )
    err = np.max(np.abs(weyl.levi_civita(g).gamma - exact))
    assert err < 20 * g.chart.h**2


def test_levi_civita_polar_closed_form():
    g = presets.metric_preset("polar", 2, 65)
    r = g.chart.nodes()[..., 0]
    gam = weyl.levi_civita(g).gamma
    assert np.max(np.abs(gam[..., 0, 1, 1] + r)) < 1e-10  # Gamma^r_phiphi = -r (g is quadratic in r)
    assert np.max(np.abs(gam[..., 1, 0, 1] - 1 / r)) < 1e-10
    assert np.max(np.abs(gam[..., 0, 0, 0])) < 1e-12


def test_weyl_connection_matches_node_solve():
    g = presets.metric_preset("random-spd", 2, 24, seed=5)
    theta = presets.theta_preset(g.chart, "random", seed=2)
    conn = weyl.weyl_connection(g, theta)
    dg = g.derivative()
    rng = np.random.default_rng(0)
    for _ in range(10):
        idx = tuple(rng.integers(0, 24, size=2))
        oracle = weyl.solve_weyl_at_node(g.g[idx], dg[idx], theta.theta[idx])
        assert np.allclose(conn.gamma[idx], oracle, atol=1e-10)


def test_weyl_connection_3d():
    g = presets.metric_preset("random-spd", 3, 12, seed=1)
    theta = presets.theta_preset(g.chart, "random", seed=1)
    conn = weyl.weyl_connection(g, theta)
    assert weyl.torsion_of(conn)[1] == 0.0
    lee = weyl.lee_form_of(conn, g)
    assert np.max(np.abs(lee.theta.theta - theta.theta)) < 1e-10


def test_lee_form_recovery_and_not_weyl():
    g = presets.metric_preset("polar", 2, 32)
    theta = presets.theta_preset(g.chart, "y*dx - 0.3*dy")
    lee = weyl.lee_form_of(weyl.weyl_connection(g, theta), g)
    assert np.max(np.abs(lee.theta.theta - theta.theta)) < 1e-10
    rng = np.random.default_rng(0)
    junk = ConnectionField(g.chart, rng.standard_normal(g.chart.shape + (2, 2, 2)))
    with pytest.raises(NotWeyl):
        weyl.lee_form_of(junk, g)


# -- closedness, potentials, conformal changes ----------------------------


def test_exterior_derivative_verdicts():
    c = Chart.box(2, 64)
    assert weyl.exterior_derivative(presets.theta_preset(c, "closed-random", seed=4)).closed
    assert weyl.exterior_derivative(presets.theta_preset(c, "y*dx + x*dy")).closed
    ed = weyl.exterior_derivative(presets.theta_preset(c, "y*dx - x*dy"))
    assert not ed.closed and np.isclose(ed.max_norm, 2.0)


def test_integrate_potential():
    c = Chart.box(2, 64)
    theta = presets.theta_preset(c, "y*dx + x*dy")
    f = weyl.integrate_potential(theta, basepoint=(10, 20))
    x, y = c.nodes()[..., 0], c.nodes()[..., 1]
    exact = x * y - x[10, 20] * y[10, 20]
    assert np.max(np.abs(f.values - exact)) < 1e-12
    with pytest.raises(NotClosed):
        weyl.integrate_potential(presets.theta_preset(c, "y*dx - x*dy"))
    with pytest.raises(ValueError):
        weyl.integrate_potential(theta, basepoint=(64, 0))


def test_lee_transform_under_conformal_change():
    g = presets.metric_preset("random-spd", 2, 64, seed=2)
    theta = presets.theta_preset(g.chart, "random", seed=3)
    f = presets.scalar_preset(g.chart, "0.2*sin(2*x) + 0.1*cos(3*y)")
    assert weyl.lee_transform_check(g, theta, f)["ok"]


@pytest.mark.parametrize("preset", ["flat", "polar", "conformal"])
def test_exhibit_local_metric(preset):
    g = presets.metric_preset(preset, 2, 64)
    theta = presets.theta_preset(g.chart, "closed-random", seed=1)
    f, gp, rep = weyl.exhibit_local_metric(g, theta)
    tol = 10 * g.chart.h**2
    assert rep["nabla_gprime_residual"] < tol
    assert rep["potential_residual"] < tol
    assert rep["levi_civita_gap"] < 1e-2
    assert np.allclose(np.exp(2 * f.values)[..., None, None] * gp.g, g.g)


def test_volume_normalization():
    h = presets.metric_preset("random-spd", 3, 10, seed=9)
    rho = VolumeDensityField(h.chart, 1.5 + 0.5 * np.sin(h.chart.nodes()[..., 0]))
    g = weyl.volume_normalized_metric(h, rho)
    assert np.max(np.abs(np.linalg.det(g.g) - rho.rho**2)) < 1e-10
    # conformal to h
    ratio = g.g[..., 0, 0] / h.g[..., 0, 0]
    assert np.allclose(g.g, ratio[..., None, None] * h.g)


def test_weyl_report_flags_non_closed():
    g = presets.metric_preset("flat", 2, 32)
    rep = weyl.weyl_report(g, presets.theta_preset(g.chart, "y*dx - x*dy"))
    assert not rep.closed and rep.local_metric_residual is None
    assert rep.torsion_residual == 0.0
