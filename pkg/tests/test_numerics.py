import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from oneshot.errors import (
    DegenerateInputError,
    DimensionMismatchError,
    NoSignChangeError,
    StepSizeTooLargeError,
)
from oneshot.numerics import (
    RngStream,
    SolverConfig,
    auto_step,
    dot,
    gd_least_squares,
    l2_norm,
    normalize,
    solve_least_squares,
    solve_scalar_root,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)


def vec(n):
    return arrays(np.float64, n, elements=finite)


def test_dot_examples(rng):
    assert dot([1, 2], [3, 4]) == 11
    assert dot([1.5, -2.0, 7.0], [0, 0, 0]) == 0
    u, v = rng.standard_normal(7), rng.standard_normal(7)
    acc = 0.0
    for a, b in zip(u, v):
        acc += a * b
    assert dot(u, v) == pytest.approx(acc, abs=1e-12)


def test_dot_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        dot([1, 2], [1, 2, 3])


def test_vectors_reject_nonfinite():
    with pytest.raises(DegenerateInputError):
        l2_norm([1.0, math.nan])
    with pytest.raises(DimensionMismatchError):
        l2_norm([])


@given(st.integers(1, 12).flatmap(lambda n: st.tuples(vec(n), vec(n), vec(n), finite, finite)))
def test_dot_symmetric_and_bilinear(args):
    u, v, w, a, b = args
    assert dot(u, v) == dot(v, u)
    lhs = dot(a * u + b * w, v)
    rhs = a * dot(u, v) + b * dot(w, v)
    scale = (abs(a) * np.abs(u) + abs(b) * np.abs(w)) @ np.abs(v)
    assert abs(lhs - rhs) <= 1e-10 * max(scale, 1.0)


def test_norm_examples():
    assert l2_norm([3, 4]) == 5
    assert l2_norm([0, 0, 0]) == 0
    for i in range(4):
        e = np.zeros(4)
        e[i] = 1
        assert l2_norm(e) == 1


def test_normalize_examples():
    np.testing.assert_allclose(normalize([3, 4]), [0.6, 0.8], rtol=0, atol=1e-15)
    with pytest.raises(DegenerateInputError):
        normalize([0, 0])


@given(st.integers(1, 20).flatmap(vec))
def test_normalize_unit_norm(v):
    if not np.any(np.abs(v) > 1e-100):
        return
    assert abs(l2_norm(normalize(v)) - 1.0) <= 1e-12


def test_rng_stream_reproducible():
    a = RngStream(42, 7).generator().standard_normal(10_000)
    b = RngStream(42, 7).generator().standard_normal(10_000)
    assert np.array_equal(a, b)
    c = RngStream(42, 8).generator().standard_normal(10_000)
    assert not np.array_equal(a, c)


def test_rng_stream_pinned_draws():
    # literal values pin the generator and seeding scheme across platforms
    draws = RngStream(0, 0).generator().integers(0, 2**32, size=3)
    assert draws.tolist() == [3445585646, 4049885951, 23549334]
    assert RngStream(5, 101).generator().standard_normal() == -1.62789871991649


def test_rng_stream_rejects_bad_seed():
    with pytest.raises(ValueError):
        RngStream(-1)
    with pytest.raises(ValueError):
        RngStream(0, 2**64)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(step_size=0)
    with pytest.raises(ValueError):
        SolverConfig(tol=-1)
    with pytest.raises(ValueError):
        SolverConfig(max_iter=0)


def test_least_squares_examples():
    beta, res = solve_least_squares([[1, 0], [0, 1]], [2, 3])
    np.testing.assert_allclose(beta, [2, 3], atol=1e-14)
    assert res == pytest.approx(0, abs=1e-14)
    beta, res = solve_least_squares([[1, 0]], [0, 1])
    np.testing.assert_allclose(beta, [0], atol=1e-14)
    assert res == pytest.approx(1.0)


def test_least_squares_normal_equation_oracle(rng):
    B = rng.standard_normal((5, 8))
    t = rng.standard_normal(8)
    beta_ne = np.linalg.solve(B @ B.T, B @ t)
    res_ne = np.linalg.norm(B.T @ beta_ne - t)
    beta, res = solve_least_squares(B, t)
    assert res == pytest.approx(res_ne, abs=1e-8)
    np.testing.assert_allclose(beta, beta_ne, atol=1e-8)


def test_least_squares_minimum_norm_on_rank_deficient():
    B = np.array([[1.0, 0.0], [2.0, 0.0]])
    beta, res = solve_least_squares(B, [5.0, 0.0])
    assert res == pytest.approx(0, abs=1e-12)
    # minimum-norm solution of beta0 + 2 beta1 = 5 is (1, 2)
    np.testing.assert_allclose(beta, [1.0, 2.0], atol=1e-12)


def test_least_squares_errors():
    with pytest.raises(DegenerateInputError):
        solve_least_squares(np.empty((0, 2)), [1, 2])
    with pytest.raises(DimensionMismatchError):
        solve_least_squares([[1, 2, 3]], [1, 2])


def test_least_squares_optimality_spot_check(rng):
    for _ in range(20):
        n, N = rng.integers(1, 9), rng.integers(1, 9)
        B = rng.standard_normal((N, n))
        t = rng.standard_normal(n)
        _, res = solve_least_squares(B, t)
        cands = rng.standard_normal((100, N)) * 3
        others = np.linalg.norm(cands @ B - t, axis=1)
        assert np.all(res <= others + 1e-12)


def test_gd_least_squares_basis():
    out = gd_least_squares([[1, 0], [0, 1]], [2, 3], SolverConfig(0.1, 1e-12), RngStream(1).generator())
    assert out.converged
    np.testing.assert_allclose(out.beta, [2, 3], atol=1e-6)


def test_gd_least_squares_target_in_basis(rng):
    B = rng.standard_normal((4, 6))
    cfg = SolverConfig(None, 1e-12, 200_000)
    out = gd_least_squares(B, B[0], cfg, RngStream(2).generator())
    assert out.loss < 1e-12
    np.testing.assert_allclose(out.beta @ B, B[0], atol=1e-5)


def test_gd_least_squares_infeasible_target_hits_cap():
    B = np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]])
    t = np.array([1.0, 2.0, 3.0])
    out = gd_least_squares(B, t, SolverConfig(0.1, 1e-12, 500), RngStream(3).generator())
    _, res = solve_least_squares(B, t)
    assert not out.converged and out.iterations == 500
    assert out.loss == pytest.approx(res**2, abs=1e-6)


def test_gd_least_squares_deterministic(rng):
    B = rng.standard_normal((3, 5))
    t = rng.standard_normal(5)
    a = gd_least_squares(B, t, SolverConfig(), RngStream(9).generator())
    b = gd_least_squares(B, t, SolverConfig(), RngStream(9).generator())
    assert np.array_equal(a.beta, b.beta)


def test_gd_least_squares_detects_divergence():
    B = np.array([[10.0, 0.0], [0.0, 10.0]])
    with pytest.raises(StepSizeTooLargeError):
        gd_least_squares(B, [1.0, 1.0], SolverConfig(0.5, 1e-12), RngStream(0).generator())


def test_gd_least_squares_auto_step_is_stable(rng):
    B = rng.standard_normal((48, 24)) * 5
    t = B.T @ rng.standard_normal(48)
    out = gd_least_squares(B, t, SolverConfig(None, 1e-12), RngStream(0).generator())
    assert out.converged


def test_auto_step_single_vector_solves_in_one_update():
    B = np.array([[3.0, 4.0]])
    assert auto_step(B) == pytest.approx(1 / 50)
    out = gd_least_squares(B, [6.0, 8.0], SolverConfig(None, 1e-20), RngStream(0).generator())
    assert out.iterations == 1
    np.testing.assert_allclose(out.beta, [2.0], rtol=1e-15)


def test_auto_step_ignores_null_directions():
    B = np.array([[1.0, 0.0], [2.0, 0.0]])  # rank one
    assert auto_step(B) == pytest.approx(1 / 10)


def test_root_examples():
    assert solve_scalar_root(lambda x: x - 2, (0, 5)) == pytest.approx(2, abs=1e-12)
    assert solve_scalar_root(lambda x: x * x - 2, (0, 2)) == pytest.approx(math.sqrt(2), abs=1e-10)
    r = solve_scalar_root(lambda x: 0.1 * x - 1 - math.exp(0), (0, 100))
    assert r == pytest.approx(20, rel=1e-12)


def test_root_no_sign_change():
    with pytest.raises(NoSignChangeError):
        solve_scalar_root(lambda x: x * x + 1, (-1, 1))


def test_root_endpoints_and_reversed_bracket():
    assert solve_scalar_root(lambda x: x, (0.0, 1.0)) == 0.0
    assert solve_scalar_root(lambda x: x - 3, (5, 0)) == pytest.approx(3)


@given(st.floats(-50, 50), st.floats(0.01, 20))
def test_root_meets_tolerance(c, width):
    h = lambda x: math.tanh(x - c)  # noqa: E731
    r = solve_scalar_root(h, (c - width, c + 2 * width))
    assert abs(h(r)) <= 1e-12 or abs(r - c) <= 1e-12 * max(1, abs(c))
