import numpy as np
import pytest

from weylforge.words import Word, synthesize

from helpers import random_rotation, random_unimodular


def _generators(n, rng):
    b = 1.7
    stretch = np.diag([b, 1 / b] + [1.0] * (n - 2))
    Q = random_rotation(n, rng)
    return [Q @ stretch @ random_rotation(n, rng) @ Q.T, 2.0 * np.eye(n)]


@pytest.mark.parametrize("n", [2, 3, 4])
def test_synthesized_word_evaluates_to_target(n):
    rng = np.random.default_rng(n)
    gens = _generators(n, rng)
    for _ in range(5):
        T = random_unimodular(n, rng, spread=0.6)
        w = synthesize(gens, T)
        err = np.max(np.abs(w.matrix() - T)) / max(1.0, np.max(np.abs(T)))
        assert err < 1e-6
        assert set(w.labels()) <= {"g0", "g0^-1", "g1", "g1^-1", "so"}


def test_word_factors_are_honest():
    """Each labelled factor is what its label claims, so the word proves membership."""
    rng = np.random.default_rng(3)
    gens = _generators(3, rng)
    w = synthesize(gens, random_unimodular(3, rng))
    for label, M in w.factors:
        if label == "so":
            assert np.allclose(M.T @ M, np.eye(3), atol=1e-10) and np.linalg.det(M) > 0
        elif label.endswith("^-1"):
            assert np.allclose(M @ gens[int(label[1:-3])], np.eye(3), atol=1e-10)
        else:
            assert np.allclose(M, gens[int(label[1:])], rtol=1e-12, atol=1e-12)


def test_word_algebra():
    rng = np.random.default_rng(0)
    gens = _generators(2, rng)
    g = Word.generator(gens, 0)
    r = Word.rotation(random_rotation(2, rng))
    w = g * r * g
    assert np.allclose((w * w.inverse()).matrix(), np.eye(2))
    assert np.allclose((g**3).matrix(), np.linalg.matrix_power(gens[0], 3))
    assert np.allclose((g**-2).matrix(), np.linalg.matrix_power(np.linalg.inv(gens[0]), 2))
    assert len(w) == 3


def test_rotation_factor_validation():
    with pytest.raises(ValueError):
        Word.rotation(np.diag([1.0, -1.0]))


def test_requires_determinant_one():
    gens = _generators(2, np.random.default_rng(1))
    with pytest.raises(ValueError):
        synthesize(gens, np.diag([2.0, 1.0]))
