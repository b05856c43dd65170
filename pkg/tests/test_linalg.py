import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from rnnlab import linalg


def naive_matvec(m, v):
    out = np.empty(m.shape[0])
    for i in range(m.shape[0]):
        s = 0.0
        for j in range(m.shape[1]):
            s += m[i, j] * v[j]
        out[i] = s
    return out


def test_matvec_identity():
    assert_allclose(linalg.matvec(np.eye(3), [1.0, 2.0, 3.0]), [1.0, 2.0, 3.0])


def test_matvec_diagonal():
    assert_allclose(linalg.matvec(np.diag([2.0, 3.0]), [1.0, 1.0]), [2.0, 3.0])


@pytest.mark.parametrize("seed", range(10))
def test_matvec_matches_naive_loop_bit_exactly(seed):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((4, 4))
    v = rng.standard_normal(4)
    assert np.array_equal(linalg.matvec(m, v), naive_matvec(m, v))


def test_matvec_bit_exact_rectangular():
    rng = np.random.default_rng(99)
    for _ in range(20):
        rows, cols = rng.integers(1, 40, size=2)
        m = rng.standard_normal((rows, cols)) * 10.0 ** rng.integers(-6, 7)
        v = rng.standard_normal(cols)
        assert np.array_equal(linalg.matvec(m, v), naive_matvec(m, v))


def test_matvec_dimension_mismatch():
    with pytest.raises(linalg.DimensionError):
        linalg.matvec(np.eye(3), np.ones(4))


def test_matvec_distributes_over_addition():
    rng = np.random.default_rng(0)
    for _ in range(50):
        m = rng.standard_normal((8, 8))
        u, v = rng.standard_normal(8), rng.standard_normal(8)
        lhs = linalg.matvec(m, u + v)
        rhs = linalg.matvec(m, u) + linalg.matvec(m, v)
        assert np.max(np.abs(lhs - rhs)) <= 1e-12 * max(np.max(np.abs(lhs)), 1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.floats(-3.0, 3.0))
def test_matvec_scaling_homogeneous(seed, c):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((5, 5))
    v = rng.standard_normal(5)
    assert_allclose(linalg.matvec(m, c * v), c * linalg.matvec(m, v),
                    rtol=1e-12, atol=1e-12)


# ---------------------------------------------------------------------------
# power iteration

def test_power_iteration_dominant_axis():
    res = linalg.power_iteration(np.diag([3.0, 1.0]), np.array([1.0, 1.0]))
    assert res.converged
    assert abs(res.estimate - 3.0) < 1e-8
    assert abs(abs(res.vector[0]) - 1.0) < 1e-6
    assert abs(res.vector[1]) < 1e-6


def test_power_iteration_identity_immediate():
    res = linalg.power_iteration(np.eye(2), np.array([0.3, -0.8]))
    assert res.converged
    assert res.estimate == pytest.approx(1.0, abs=1e-12)
    assert np.linalg.norm(res.vector) == pytest.approx(1.0, rel=1e-12)


def test_power_iteration_rejects_zero_start():
    with pytest.raises(ValueError):
        linalg.power_iteration(np.eye(2), np.zeros(2))


def test_power_iteration_null_space_collapse():
    m = np.array([[0.0, 0.0], [0.0, 0.0]])
    res = linalg.power_iteration(m, np.array([1.0, 0.0]))
    assert not res.converged
    assert res.estimate == 0.0


@pytest.mark.parametrize("seed", range(5))
def test_power_iteration_recovers_max_abs_diagonal(seed):
    rng = np.random.default_rng(seed)
    d = rng.uniform(-2.0, 2.0, size=6)
    res = linalg.power_iteration(np.diag(d), rng.standard_normal(6), tol=1e-12)
    assert res.converged
    assert abs(res.estimate - np.max(np.abs(d))) < 1e-8


def squaring_growth_oracle(m, squarings=8):
    """||M^(2^k)||_2^(1/2^k) by renormalized squaring; final 2-norm via numpy SVD.

    Independent of the linalg module (no power iteration anywhere).
    """
    a = np.array(m, dtype=np.float64)
    log_scale = 0.0
    for _ in range(squarings):
        a = a @ a
        s = np.sqrt((a * a).sum())
        a /= s
        log_scale = 2.0 * log_scale + np.log(s)
    return float(np.exp((np.log(np.linalg.norm(a, 2)) + log_scale) / 2 ** squarings))


@pytest.mark.parametrize("seed", range(5))
def test_power_iteration_random_symmetric_vs_squaring_oracle(seed):
    rng = np.random.default_rng(seed)
    g = rng.standard_normal((6, 6))
    m = (g + g.T) / 2.0
    res = linalg.power_iteration(m, rng.standard_normal(6), tol=1e-13)
    assert abs(res.estimate - squaring_growth_oracle(m)) < 1e-8


# ---------------------------------------------------------------------------
# spectral norm / radius

def test_spectral_norm_diagonal():
    assert linalg.spectral_norm(np.diag([1.0, 2.0])) == pytest.approx(2.0, abs=1e-10)


def test_spectral_norm_zero_matrix():
    assert linalg.spectral_norm(np.zeros((3, 3))) == 0.0


def test_spectral_norm_random_vs_sampled_lower_bound_and_gram_growth():
    rng = np.random.default_rng(3)
    m = rng.standard_normal((5, 5))
    norm = linalg.spectral_norm(m)
    v = rng.standard_normal((100_000, 5))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    sampled_max = float(np.max(np.linalg.norm(v @ m.T, axis=1)))
    assert norm >= sampled_max - 1e-8
    gram = squaring_growth_oracle(m.T @ m)
    assert abs(norm - np.sqrt(gram)) < 1e-8


def test_spectral_norm_dominates_every_unit_image():
    rng = np.random.default_rng(11)
    m = rng.standard_normal((7, 7))
    norm = linalg.spectral_norm(m)
    v = rng.standard_normal((1000, 7))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    assert np.all(np.linalg.norm(v @ m.T, axis=1) <= norm + 1e-9)


def test_spectral_radius_negative_dominant():
    assert linalg.spectral_radius(np.diag([0.5, -2.0])) == pytest.approx(2.0, abs=1e-8)


def test_spectral_radius_rotation_uses_growth_fallback():
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert linalg.spectral_radius(rot) == pytest.approx(1.0, abs=1e-8)
    assert squaring_growth_oracle(rot) == pytest.approx(1.0, abs=1e-12)


def test_spectral_radius_repeated_dominant():
    assert linalg.spectral_radius(np.diag([0.9, 0.9, 0.3])) == pytest.approx(0.9, abs=1e-8)


@pytest.mark.parametrize("seed", range(8))
def test_spectral_radius_below_spectral_norm(seed):
    m = np.random.default_rng(seed).standard_normal((6, 6))
    assert linalg.spectral_radius(m) <= linalg.spectral_norm(m) + 1e-8
