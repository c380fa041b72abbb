"""Shared constructors for tests: random rotations and conjugated test groups."""
import math

import numpy as np
from scipy.stats import special_ortho_group

from weylforge.matgroup import HClass


def random_rotation(n, rng):
    if n == 1:
        return np.eye(1)
    return special_ortho_group.rvs(n, random_state=rng)


def reflection(n):
    F = np.eye(n)
    F[0, 0] = -1.0
    return F


def random_instance(rng):
    """A conjugated generator set together with the (linear_part, HClass) it must produce."""
    n = int(rng.integers(2, 5))
    kind = rng.choice(["so", "cyclic", "minus_one", "negative", "continuum", "sl", "sl_cyclic", "sl_minus_one"])
    Q = random_rotation(n, rng)
    gens = [random_rotation(n, rng)]
    a = float(rng.choice([2.0, 3.0, 1.5]))
    if kind == "so":
        expected = ("SO", HClass())
    elif kind == "cyclic":
        k = int(rng.integers(1, 3))
        gens += [a**k * random_rotation(n, rng), a ** (2 * k) * np.eye(n)]
        expected = ("SO", HClass("cyclic", a ** (n * k)))
    elif kind == "minus_one":
        gens += [reflection(n) @ random_rotation(n, rng), a * np.eye(n)]
        expected = ("SO", HClass("cyclic", a**n, "minus_one"))
    elif kind == "negative":
        # a single orientation-reversing similarity: H is cyclic with negative generator
        gens += [a * reflection(n) @ random_rotation(n, rng)]
        expected = ("SO", HClass("cyclic", a ** (2 * n), "negative_generator", -(a**n)))
    elif kind == "continuum":
        gens += [2.0 * np.eye(n), 3.0 * random_rotation(n, rng)]
        expected = ("SO", HClass("continuum"))
    else:
        b = float(rng.uniform(1.5, 3.0))
        stretch = np.diag([b, 1.0 / b] + [1.0] * (n - 2))
        gens += [random_rotation(n, rng) @ stretch]
        if kind == "sl":
            expected = ("SL", HClass())
        elif kind == "sl_cyclic":
            gens += [a * np.eye(n)]
            expected = ("SL", HClass("cyclic", a**n))
        else:
            gens += [reflection(n)]
            expected = ("SL", HClass(negative="minus_one"))
    gens = [Q @ g @ Q.T for g in gens]
    return n, gens, expected


def random_unimodular(n, rng, spread=1.0):
    M = rng.normal(size=(n, n)) * spread + np.eye(n)
    d = np.linalg.det(M)
    if d < 0:
        M[0] = -M[0]
        d = -d
    return M / d ** (1.0 / n)


def log_ratio(a, b):
    return abs(math.log(a) - math.log(b))
