import math

import numpy as np
import pytest

from riemann_newton.errors import SingularOperatorError
from riemann_newton.manifolds import SPD, Euclidean, Sphere
from riemann_newton.newton import (
    NewtonConfig,
    Termination,
    inverse_bound_scan,
    inverse_norm,
    newton_solve,
    newton_step,
)
from riemann_newton.problems import builtin_problems, lookup
from riemann_newton.vectorfield import VectorField

SQRT2 = lookup("euclid-sqrt2")


def scalar_newton(x, n):
    out = [x]
    for _ in range(n):
        x = x - (x * x - 2.0) / (2.0 * x)
        out.append(x)
    return out


def test_single_step_sqrt2():
    assert newton_step(SQRT2.field, np.array([1.0])).next == pytest.approx([1.5])


def test_sqrt2_iterates_match_scalar_oracle():
    trace = newton_solve(SQRT2.field, np.array([1.0]), known_solution=SQRT2.known_solution)
    assert trace.termination is Termination.RESIDUAL
    assert trace.iterations <= 6
    got = [r.point[0] for r in trace.records]
    assert got[:4] == pytest.approx([1.0, 1.5, 17 / 12, 577 / 408], abs=1e-15)
    assert np.allclose(got, scalar_newton(1.0, len(got) - 1), atol=1e-12)
    assert trace.records[-1].residual_norm <= 1e-12


def test_exact_solution_stops_at_zero():
    spec = lookup("rayleigh-s2")
    trace = newton_solve(spec.field, spec.known_solution, known_solution=spec.known_solution)
    assert trace.termination is Termination.RESIDUAL
    assert trace.iterations == 0


def test_rayleigh_step_contracts_quadratically():
    spec = lookup("rayleigh-s2")
    m, p_star = spec.manifold, spec.known_solution
    p = np.array([0.1, 0.1, 1.0]) / math.sqrt(1.02)
    nxt = newton_step(spec.field, p).next
    d0, d1 = m.distance(p, p_star), m.distance(nxt, p_star)
    assert d1 < d0
    assert d1 < 5.0 * d0**2


def test_commuting_spd_midpoint():
    m = SPD(2)
    a, b = np.eye(2), math.e**2 * np.eye(2)
    X = VectorField(m, lambda p: m.log(p, a) + m.log(p, b), lambda p, v: m.dlog(p, a, v) + m.dlog(p, b, v))
    trace = newton_solve(X, np.eye(2))
    assert trace.converged
    assert np.allclose(trace.final_point, math.e * np.eye(2), atol=1e-12)


def test_known_solution_distances_vs_proxy():
    spec = lookup("karcher-spd2")
    start = spec.starts[0].point
    exact = newton_solve(spec.field, start, known_solution=spec.known_solution)
    proxy = newton_solve(spec.field, start)
    assert proxy.proxy_distances and not exact.proxy_distances
    assert proxy.distances[-1] == 0.0
    assert np.allclose(exact.distances[:-1], proxy.distances[:-1], rtol=1e-6)


def test_max_iter_is_normal_termination():
    spec = lookup("rayleigh-s9")
    trace = newton_solve(spec.field, spec.starts[0].point, NewtonConfig(max_iterations=1), spec.known_solution)
    assert trace.termination is Termination.MAX_ITER
    assert trace.iterations == 1
    assert not trace.converged


def test_singular_derivative_flags():
    X = VectorField(Euclidean(1), lambda x: x**3 - 1.0, lambda x, v: 3 * x**2 * v)
    trace = newton_solve(X, np.array([0.0]))
    assert trace.termination is Termination.SINGULAR
    assert "condition" in trace.message
    with pytest.raises(SingularOperatorError):
        newton_step(X, np.array([0.0]))


def test_repeated_clipping_fails():
    # tiny derivative: every Newton step overshoots the injectivity radius
    m = Sphere(3)
    north = np.array([0.0, 0.0, 1.0])
    X = VectorField(m, lambda p: 1e-3 * m.frame(p)[0], lambda p, v: 1e-6 * v)
    trace = newton_solve(X, north)
    assert trace.termination is Termination.INJECTIVITY_CLIP_FAIL
    assert all(r.step_norm <= 0.99 * math.pi + 1e-12 for r in trace.records if not math.isnan(r.step_norm))


def test_step_tolerance_termination():
    X = VectorField(Euclidean(1), lambda x: x - 1.0, lambda x, v: v)
    cfg = NewtonConfig(residual_tol=1e-300, step_tol=1e-3)
    trace = newton_solve(X, np.array([1.0 + 1e-4]), cfg)
    assert trace.termination is Termination.STEP
    assert trace.records[-1].point == pytest.approx([1.0])


def test_config_validation():
    with pytest.raises(ValueError):
        NewtonConfig(max_iterations=0)
    with pytest.raises(ValueError):
        NewtonConfig(residual_tol=-1.0)


def test_trace_rows_quotients():
    trace = newton_solve(SQRT2.field, np.array([1.0]), known_solution=SQRT2.known_solution)
    rows = trace.rows()
    d = trace.distances
    assert rows[0]["ratio_q"] == pytest.approx(d[1] / d[0])
    assert rows[1]["quad_quotient"] == pytest.approx(d[2] / d[1] ** 2)
    assert math.isnan(rows[-1]["ratio_q"])
    assert list(rows[0]) == [
        "k",
        "residual_norm",
        "step_norm",
        "dist_to_solution",
        "ratio_q",
        "quad_quotient",
        "inverse_norm_estimate",
    ]


def test_inverse_norm_of_diagonal():
    X = VectorField(Euclidean(2), lambda x: x, lambda x, v: np.array([2.0, 0.25]) * v)
    assert inverse_norm(X.covariant_derivative(np.zeros(2))) == pytest.approx(4.0)


def test_inverse_scan_with_no_samples_is_trivially_certified():
    spec = lookup("rayleigh-s2")
    rep = inverse_bound_scan(spec.field, spec.known_solution, 0.1, samples=0)
    assert rep.bound_factor == 1.0
    assert rep.certified_radius == 0.1


def test_inverse_scan_rayleigh_regression():
    spec = lookup("rayleigh-s2")
    rep = inverse_bound_scan(spec.field, spec.known_solution, 0.1, samples=200, seed=0)
    assert rep.certified
    assert rep.certified_radius >= 0.1
    # eigenvalues of the derivative at e3 are 2(1-3) and 2(2-3)
    assert rep.solution_inverse_norm == pytest.approx(0.5)


def test_inverse_scan_without_certificate():
    # derivative 1 at the root but tiny just off it: no ball keeps the bound
    X = VectorField(Euclidean(1), lambda x: x, lambda x, v: (1.0 if x[0] == 0 else 1e-3) * v)
    rep = inverse_bound_scan(X, np.zeros(1), 0.5, samples=5, max_halvings=3)
    assert rep.certified_radius is None
    assert rep.halvings == 3


def test_inverse_scan_rejects_non_solution():
    with pytest.raises(ValueError):
        inverse_bound_scan(SQRT2.field, np.array([1.0]), 0.1, 10)


@pytest.mark.parametrize("spec", builtin_problems(), ids=lambda s: s.name)
def test_default_starts_converge(spec):
    for start in spec.starts:
        trace = newton_solve(spec.field, start.point, known_solution=spec.known_solution)
        assert trace.converged
        assert spec.manifold.distance(trace.final_point, spec.known_solution) < 1e-8
