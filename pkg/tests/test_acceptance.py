"""Acceptance gate: one test per criterion, each at its stated tolerance and time budget."""
import math
import time

import numpy as np
import pytest

from weylforge import circle, matgroup as mg, presets, torsion as tr, weyl
from weylforge.fields import VolumeDensityField

from helpers import random_instance, random_rotation


class Timer:
    def __enter__(self):
        self.start = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.start


@pytest.mark.criterion("del-xi identity: 200 random phi, residual < 1e-12, xi skew")
def test_del_skew_inverse_identity():
    rng = np.random.default_rng(2024)
    worst = skew = 0.0
    with Timer() as t:
        for k in range(200):
            n = 2 + k % 5
            phi = tr.TorsionTensor.random(n, rng)
            xi = tr.skew_inverse(phi)
            worst = max(worst, float(np.max(np.abs(tr.delta(xi).phi - phi.phi))))
            skew = max(skew, xi.skew_defect())
    assert worst < 1e-12
    assert skew < 1e-13
    assert t.elapsed < 5.0


@pytest.mark.criterion("torsion table: coker 0 for so/co/sl/gl n<=6, ker(co_n) = n")
def test_torsion_table():
    with Timer() as t:
        for n in range(2, 7):
            for name in ("so", "co", "sl", "gl"):
                rep = tr.del_matrix(tr.SubalgebraBasis.named(name, n), rtol=1e-9)
                assert rep.coker_dim == 0, (name, n)
                if name == "co":
                    assert rep.kernel_dim == n
    assert t.elapsed < 5.0


def _commutes(D, S):
    D2 = D @ D
    return np.max(np.abs(D2 @ S - S @ D2)) <= 1e-8 * np.max(np.abs(D2))


def _lemma2_pair(rng):
    n = int(rng.integers(2, 5))
    kind = rng.choice([0, 0, 0, 1, 2, 3])
    d = rng.uniform(0.3, 3.0, size=n) * rng.choice([-1.0, 1.0], size=n)
    if kind == 0:
        S = random_rotation(n, rng)
    elif kind == 1:
        # repeated |d| and a rotation inside that block
        d[1] = -d[0] if rng.random() < 0.5 else d[0]
        S = mg.plane_rotation(n, 0, 1, float(rng.uniform(0, 2 * np.pi)))
    elif kind == 2:
        signs = rng.choice([-1.0, 1.0], size=n)
        if np.prod(signs) < 0:
            signs[0] = -signs[0]
        S = np.diag(signs)
    else:
        d = np.full(n, d[0]) * rng.choice([-1.0, 1.0], size=n)
        S = random_rotation(n, rng)
    return np.diag(d), S


@pytest.mark.criterion("classification: 50 conjugated instances exact, 100 SL_n witness verdicts")
def test_classification_and_lemma2():
    rng = np.random.default_rng(99)
    with Timer() as t:
        for _ in range(50):
            n, gens, (linear, h) = random_instance(rng)
            res = mg.classify_group(mg.MatrixGroupSpec(n, tuple(gens)))
            assert res.linear_part == linear
            assert res.h.isclose(h), (res.h, h)
        kinds = {True: 0, False: 0}
        for _ in range(100):
            D, S = _lemma2_pair(rng)
            commutes = _commutes(D, S)
            kinds[commutes] += 1
            w = mg.lemma2_witness(D, S=S)
            assert (w is None) == commutes
            if w is not None:
                B = w[1]
                assert abs(np.linalg.det(B) - 1) < 1e-9
                assert np.max(np.abs(B @ B.T - np.eye(len(B)))) > 1e-8
    assert min(kinds.values()) >= 25
    assert t.elapsed < 10.0


@pytest.mark.criterion("psi interpolation: a=2, targets 1..4 to 1e-10, endpoints")
def test_psi_interpolation():
    a = 2.0
    A = np.diag([a, 1 / a])
    with Timer() as t:
        for target in (1.0, 1.5, 2.0, 3.0, 4.0):
            th = mg.psi_interpolate(a, target)
            assert abs(mg.psi(A @ mg.rotation(th) @ A) - target) < 1e-10
        assert mg.psi_interpolate(a, a * a) == 0.0
        assert mg.psi_interpolate(a, 1.0) == math.pi / 2
        assert abs(mg.psi(A @ A) - a * a) < 1e-12
        assert abs(mg.psi(A @ mg.rotation(math.pi / 2) @ A) - 1.0) < 1e-12
    assert t.elapsed < 1.0


@pytest.mark.criterion("Weyl residuals: torsion 0, compat < 1e-5 at 128^2, ratio in [3.5, 4.5]")
def test_weyl_residuals_and_convergence():
    with Timer() as t:
        for preset in ("flat", "polar"):
            for seed in (0, 1, 2):
                res = {}
                for N in (64, 128):
                    g = presets.metric_preset(preset, 2, N)
                    theta = presets.theta_preset(g.chart, "random", seed=seed)
                    conn = weyl.weyl_connection(g, theta)
                    assert weyl.torsion_of(conn)[1] == 0.0
                    res[N] = weyl.compatibility_residual(conn, g, theta)
                assert res[128] < 1e-5, (preset, seed, res)
                assert 3.5 <= res[64] / res[128] <= 4.5, (preset, seed, res)
    assert t.elapsed < 20.0


@pytest.mark.criterion("local Levi-Civita recovery: |nabla g'| < 1e-5 at 128^2")
def test_local_levi_civita():
    with Timer() as t:
        for preset in ("flat", "polar"):
            for spec in ("closed-random", "y*dx + x*dy", "0.5*dx"):
                g = presets.metric_preset(preset, 2, 128)
                theta = presets.theta_preset(g.chart, spec, seed=3)
                _, _, rep = weyl.exhibit_local_metric(g, theta)
                assert rep["nabla_gprime_residual"] < 1e-5, (preset, spec, rep)
    assert t.elapsed < 10.0


@pytest.mark.criterion("volume normalization: det g = rho^2 to 1e-10")
def test_volume_normalization():
    with Timer() as t:
        for n, seed in ((2, 0), (2, 1), (3, 2)):
            h = presets.metric_preset("random-spd", n, 24 if n == 2 else 12, seed=seed)
            x = h.chart.nodes()
            rho = VolumeDensityField(h.chart, 1.0 + 0.5 * np.sin(3 * x[..., 0]) * np.cos(2 * x[..., 1]))
            g = weyl.volume_normalized_metric(h, rho)
            assert np.max(np.abs(np.linalg.det(g.g) - rho.rho**2)) < 1e-10
    assert t.elapsed < 2.0


@pytest.mark.criterion("circle: obstruction 2, holonomy -2 ln 2, invariant, additive")
def test_circle_example():
    with Timer() as t:
        bundle = circle.build_circle_structure(2.0, 64)
        hol_h, reducible = circle.reduction_obstruction(bundle)
        assert hol_h == 2.0 and not reducible
        w = circle.descend_weyl(circle.cover_metric(2.0), 64)
        hol = circle.lee_holonomy(w)
        assert abs(hol + 2 * math.log(2.0)) < 1e-8
        rng = np.random.default_rng(5)
        for _ in range(10):
            r = circle.conformal_class_invariance(w, circle.random_periodic(rng))
            assert r["rel_deviation"] < 1e-4
        for _ in range(10):
            l1, l2 = rng.uniform(0.2, 5.0, size=2)
            h = [circle.lee_holonomy(circle.descend_weyl(circle.cover_metric(v), 64)) for v in (l1, l2, l1 * l2)]
            assert abs(h[2] - h[0] - h[1]) < 1e-9
    assert t.elapsed < 2.0
