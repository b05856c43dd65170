import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy.special import expit

from rnnlab import analysis, grad, linalg, model


# ---------------------------------------------------------------------------
# growth/decay condition report

def test_conditions_contractive_diagonal():
    n = 4
    params = model.RnnParams(w_rec=0.5 * np.eye(n), w_in=np.zeros((1, n)),
                             b=np.zeros(n), w_out=np.zeros((n, 1)),
                             b_out=np.zeros(1), activation=model.TANH)
    rep = analysis.check_conditions(params)
    assert rep.vanishing_sufficient
    assert rep.contraction == pytest.approx(0.5, abs=1e-9)
    assert not rep.exploding_necessary
    assert rep.slope_bound == 1.0


def test_conditions_single_unit_sigmoid_weight_five():
    params = analysis.single_unit_params(5.0, -2.5)
    rep = analysis.check_conditions(params)
    assert rep.slope_bound == 0.25
    assert rep.spectral_radius == pytest.approx(5.0, abs=1e-9)
    assert rep.exploding_necessary          # 5 > 1/0.25
    assert not rep.vanishing_sufficient     # 5 * 0.25 > 1
    assert rep.contraction is None


def test_conditions_fresh_init_is_radius_stable_but_not_norm_contractive():
    # a 50-unit init with weight std 0.1 has spectral radius ~0.7 yet spectral
    # norm ~1.4, so the proved (norm-based) contraction flag must be False
    params = model.init_params(50, 6, 4, model.TANH, 0)
    rep = analysis.check_conditions(params)
    assert rep.spectral_radius < 1.0
    assert rep.spectral_norm > 1.0
    assert not rep.vanishing_sufficient


def test_conditions_joint_bound_with_transport():
    rng = np.random.default_rng(0)
    params = model.init_params(8, 2, 1, model.TANH, 1)
    w = params.w_rec * (0.9 / linalg.spectral_norm(params.w_rec))
    params = params.with_blocks((w, params.w_in, params.b, params.w_out, params.b_out))
    traj = model.forward(params, np.zeros(8), rng.normal(size=(40, 2)))
    row = rng.normal(size=8)
    norms = grad.component_norms(params, traj, 40, row)
    rep = analysis.check_conditions(params)
    assert rep.vanishing_sufficient
    eta = rep.contraction
    for k in range(41):
        assert norms[k] <= eta ** (40 - k) * np.linalg.norm(row) * (1 + 1e-9)


# ---------------------------------------------------------------------------
# dominant-direction expansion

def test_exploding_direction_diagonal_example():
    res = analysis.exploding_direction(np.diag([1.3, 0.9]), np.array([1.0, 1.0]), 40)
    assert res.rel_error < 0.01
    assert res.rel_error == pytest.approx((0.9 / 1.3) ** 40, rel=0.5)
    assert res.dominant_eigenvalue == pytest.approx(1.3, abs=1e-9)
    assert_allclose(res.exact, [1.3 ** 40, 0.9 ** 40], rtol=1e-10)


def test_exploding_direction_orthogonal_error_follows_second_mode():
    res = analysis.exploding_direction(np.diag([1.3, 0.9]), np.array([0.0, 1.0]), 25)
    assert res.dominant_eigenvalue == pytest.approx(0.9, abs=1e-9)
    assert res.rel_error < 1e-10


def test_exploding_direction_lag_zero_reports_truncation_mass():
    res = analysis.exploding_direction(np.diag([1.3, 0.9]), np.array([1.0, 1.0]), 0)
    assert_allclose(res.exact, [1.0, 1.0])
    assert res.rel_error == pytest.approx(1.0 / np.sqrt(2.0), rel=1e-9)


def test_exploding_direction_general_matrix_against_transport():
    rng = np.random.default_rng(2)
    q, _ = np.linalg.qr(rng.standard_normal((5, 5)))
    lams = np.array([1.4, -1.1, 0.8, 0.5, -0.2])
    w = q @ np.diag(lams) @ q.T
    e = rng.normal(size=5)
    res = analysis.exploding_direction(w, e, 50)
    assert res.rel_error < 0.01
    # exact transport equals the brute-force row product
    r = e.copy()
    for _ in range(50):
        r = r @ w.T
    assert_allclose(res.exact, r, rtol=1e-9)


def test_exploding_direction_rel_error_shrinks_with_lag():
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.standard_normal((4, 4)))
    w = q @ np.diag([1.3, 1.0, 0.6, 0.3]) @ q.T
    e = rng.normal(size=4)
    errors = [analysis.exploding_direction(w, e, l).rel_error for l in (10, 20, 30, 40)]
    assert all(a >= b - 1e-15 for a, b in zip(errors, errors[1:]))


def test_exploding_direction_unsupported_cases():
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    with pytest.raises(analysis.UnsupportedMatrixError):
        analysis.exploding_direction(rot, np.ones(2), 5)
    jordan = np.array([[1.0, 1.0], [0.0, 1.0]])
    with pytest.raises(analysis.UnsupportedMatrixError):
        analysis.exploding_direction(jordan, np.ones(2), 5)
    with pytest.raises(analysis.UnsupportedMatrixError):
        analysis.exploding_direction(np.eye(9), np.ones(9), 5)


# ---------------------------------------------------------------------------
# bifurcation sweep of the one-unit sigmoid map

def iterate_map(w, b, x0, iters=200_000, tol=1e-12):
    x = x0
    for _ in range(iters):
        x_new = w * expit(x) + b
        if abs(x_new - x) < tol:
            return x_new
        x = x_new
    return x


def tangency_biases(w):
    """Closed-form count-change biases: slope w s (1 - s) = 1 at a fixed point."""
    s = np.roots([w, -w, 1.0])
    out = []
    for si in sorted(s):
        x = float(np.log(si / (1 - si)))
        out.append(x - w * si)
    return sorted(out)


def test_two_attractors_at_center_bias():
    res = analysis.find_attractors(5.0, -2.5)
    hi = iterate_map(5.0, -2.5, 5.0)
    lo = iterate_map(5.0, -2.5, -5.0)
    assert len(res.points) == 2
    assert_allclose(res.points, sorted([lo, hi]), atol=1e-6)
    assert res.points[0] == pytest.approx(-res.points[1], abs=1e-6)
    # unstable fixed point at zero separates the basins
    assert 5.0 * expit(0.0) - 2.5 == 0.0
    assert 5.0 * 0.25 > 1.0


def test_single_attractor_at_zero_bias():
    res = analysis.find_attractors(5.0, 0.0)
    want = iterate_map(5.0, 0.0, 0.0)
    assert len(res.points) == 1
    assert res.points[0] == pytest.approx(want, abs=1e-6)
    assert want == pytest.approx(4.9654, abs=1e-3)


def test_sweep_reproduces_one_two_one_pattern():
    sweep = analysis.bifurcation_sweep(5.0, np.linspace(-5.0, 0.0, 41))
    counts = [len(r.points) for r in sweep.rows]
    # counts go 1 -> 2 -> 1 with exactly two transitions
    changes = [(a, b) for a, b in zip(counts[:-1], counts[1:]) if a != b]
    assert changes == [(1, 2), (2, 1)]
    assert len(sweep.boundaries) == 2
    b1, b2 = sweep.boundaries
    want1, want2 = tangency_biases(5.0)
    assert b1 == pytest.approx(want1, abs=1e-3)
    assert b2 == pytest.approx(want2, abs=1e-3)


def test_contractive_map_always_single_attractor():
    for b in (-3.0, -1.0, 0.0, 1.0):
        res = analysis.find_attractors(0.9, b)
        assert len(res.points) == 1
        assert res.n_cycle == 0 and res.n_unresolved == 0


# ---------------------------------------------------------------------------
# one-unit loss surface

def test_surface_zero_loss_at_forced_fixed_point():
    b_star = float(np.log(0.7 / 0.3))
    e, dw, db = analysis.single_unit_loss_grad(0.0, b_star)
    assert e < 1e-20


def test_surface_gradients_match_finite_differences():
    eps = 1e-7
    for w, b in ((2.0, -1.0), (5.0, -2.5), (0.3, 0.4)):
        e, dw, db = analysis.single_unit_loss_grad(w, b)
        fd_w = (analysis.single_unit_loss_grad(w + eps, b)[0]
                - analysis.single_unit_loss_grad(w - eps, b)[0]) / (2 * eps)
        fd_b = (analysis.single_unit_loss_grad(w, b + eps)[0]
                - analysis.single_unit_loss_grad(w, b - eps)[0]) / (2 * eps)
        scale = max(abs(fd_w), abs(fd_b), 1e-12)
        assert abs(dw - fd_w) / scale < 1e-6
        assert abs(db - fd_b) / scale < 1e-6


def test_surface_scan_shows_gradient_wall():
    scan = analysis.error_surface_scan(np.linspace(-1.0, 6.0, 36),
                                       np.linspace(-4.0, 1.0, 26))
    assert not np.any(scan.saturated)
    assert np.all(scan.loss[np.isfinite(scan.loss)] >= 0.0)
    best, median, ratio, (w_at, b_at) = analysis.wall_statistic(
        np.linspace(4.0, 6.0, 41), np.linspace(-4.0, 1.0, 26))
    assert ratio > 1e3
    assert 4.0 <= w_at <= 6.0


def test_linear_second_derivative_closed_form():
    # d^2 x_t / dw^2 = t (t-1) x0 w^(t-2) for the input-free linear unit
    w, x0, t = 1.3, 0.5, 7
    eps = 1e-4

    def x_t(wv):
        params = analysis.linear_single_unit(wv)
        return model.forward(params, np.array([x0]), np.zeros((t, 0))).states[t, 0]

    fd2 = (x_t(w + eps) - 2 * x_t(w) + x_t(w - eps)) / eps ** 2
    want = t * (t - 1) * x0 * w ** (t - 2)
    assert fd2 == pytest.approx(want, rel=1e-5)
    # and the first derivative matches t x0 w^(t-1)
    fd1 = (x_t(w + eps) - x_t(w - eps)) / (2 * eps)
    assert fd1 == pytest.approx(t * x0 * w ** (t - 1), rel=1e-6)


# ---------------------------------------------------------------------------
# divergence probe

def test_probe_identical_starts_zero_trace():
    params = model.init_params(6, 2, 1, model.TANH, 4)
    u = np.random.default_rng(5).normal(size=(30, 2))
    probe = analysis.divergence_probe(params, u, np.ones(6), np.ones(6), 30)
    assert not np.any(probe.driven)
    assert not np.any(probe.autonomous)


def test_probe_contracting_net_bounded_by_decay():
    params = model.init_params(6, 2, 1, model.TANH, 6)
    w = params.w_rec * (0.8 / linalg.spectral_norm(params.w_rec))
    params = params.with_blocks((w, params.w_in, params.b, params.w_out, params.b_out))
    x0a = 0.01 * np.ones(6)
    x0b = -0.01 * np.ones(6)
    gap = np.linalg.norm(x0a - x0b)
    probe = analysis.divergence_probe(params, np.zeros((60, 2)), x0a, x0b, 60)
    for t in range(61):
        assert probe.autonomous[t] <= gap * 0.8 ** t * (1 + 1e-9)


def test_probe_straddling_basins_reaches_attractor_gap():
    params = analysis.single_unit_params(5.0, -2.5)
    hi = iterate_map(5.0, -2.5, 5.0)
    probe = analysis.divergence_probe(params, np.zeros((500, 0)),
                                      np.array([0.01]), np.array([-0.01]), 500)
    assert probe.driven[500] == pytest.approx(2 * hi, abs=1e-6)
    assert probe.driven[0] == pytest.approx(0.02)


def test_probe_shared_basin_contracts_to_zero():
    params = analysis.single_unit_params(5.0, -2.5)
    probe = analysis.divergence_probe(params, np.zeros((500, 0)),
                                      np.array([0.5]), np.array([1.5]), 500)
    assert probe.driven[500] < 1e-6
