"""Single-chart manifolds driven by user-supplied Christoffel symbols.

Geodesics solve ``x'' + Gamma(x)[x', x'] = 0`` and parallel transport solves
the linear system ``Y' + Gamma(x)[x', Y] = 0`` along them, both integrated
with an adaptive Dormand-Prince 5(4) scheme.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.integrate import RK45

from .core import MEMBERSHIP_TOL, CurvatureSign, Manifold, solve_checked
from .errors import ChartExitError, InjectivityError, NonConvergenceError, SingularOperatorError

_EPS_CBRT = np.finfo(float).eps ** (1.0 / 3.0)


@dataclass(frozen=True)
class ChartSpec:
    """Coordinates, metric and connection of a one-chart manifold.

    ``christoffel_fn(x)[k, i, j]`` is Gamma^k_{ij}.
    """

    dim: int
    christoffel_fn: Callable[[np.ndarray], np.ndarray]
    metric_fn: Callable[[np.ndarray], np.ndarray]
    domain: Callable[[np.ndarray], bool] = lambda x: True
    name: str = "chart"

    def check(self, points, tol=1e-8):
        """Validate symmetry of Gamma and positive-definiteness of g at ``points``."""
        for x in points:
            gam = np.asarray(self.christoffel_fn(x))
            if gam.shape != (self.dim,) * 3:
                raise ValueError(f"Christoffel array has shape {gam.shape}")
            if np.max(np.abs(gam - gam.transpose(0, 2, 1))) > tol:
                raise ValueError("Christoffel symbols are not symmetric in the lower indices")
            g = np.asarray(self.metric_fn(x))
            if np.max(np.abs(g - g.T)) > tol * max(1.0, np.max(np.abs(g))):
                raise ValueError("metric is not symmetric")
            if np.linalg.eigvalsh(g).min() <= 0.0:
                raise ValueError("metric is not positive definite")


@dataclass(frozen=True)
class OdeSettings:
    rtol: float = 1e-10
    atol: float = 1e-12
    max_steps: int = 100_000
    method: str = "RK45"

    def __post_init__(self):
        if self.rtol <= 0 or self.atol <= 0:
            raise ValueError("ODE tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")


def christoffel_from_metric(metric_fn, dim, h=None):
    """Christoffel symbols of the Levi-Civita connection by central differences.

    Step per coordinate is ``h * max(1, |x_i|)`` with ``h`` defaulting to the
    cube root of machine epsilon.
    """
    h = _EPS_CBRT if h is None else h

    def christoffel(x):
        x = np.asarray(x, dtype=float)
        dg = np.empty((dim, dim, dim))  # dg[l] = d g / d x^l
        for l in range(dim):
            step = h * max(1.0, abs(x[l]))
            e = np.zeros(dim)
            e[l] = step
            dg[l] = (np.asarray(metric_fn(x + e)) - np.asarray(metric_fn(x - e))) / (2.0 * step)
        ginv = np.linalg.inv(metric_fn(x))
        # first kind: first[i, j, l] = 1/2 (d_i g_lj + d_j g_li - d_l g_ij)
        first = 0.5 * (
            np.einsum("ilj->ijl", dg) + np.einsum("jli->ijl", dg) - np.einsum("lij->ijl", dg)
        )
        gam = np.einsum("kl,ijl->kij", ginv, first)
        return 0.5 * (gam + gam.transpose(0, 2, 1))

    return christoffel


def _integrate(spec, rhs, y0, t_end, settings, n_pos):
    if t_end == 0.0:
        return np.array(y0, dtype=float)
    solver = RK45(rhs, 0.0, np.array(y0, dtype=float), t_end, rtol=settings.rtol, atol=settings.atol)
    steps = 0
    while solver.status == "running":
        solver.step()
        steps += 1
        if not spec.domain(solver.y[:n_pos]):
            raise ChartExitError(f"curve left the {spec.name} domain at t={solver.t:.6g}")
        if steps >= settings.max_steps and solver.status == "running":
            raise NonConvergenceError(f"ODE integration exceeded {settings.max_steps} steps")
    if solver.status == "failed":
        raise NonConvergenceError("ODE integration failed (step size underflow)")
    return solver.y


def geodesic_integrate(spec, p, v, t_end=1.0, settings=OdeSettings()):
    """Integrate the geodesic through ``p`` with velocity ``v`` up to ``t_end``.

    Returns
    -------
    point, velocity : ndarray
        Chart coordinates of gamma(t_end) and gamma'(t_end).
    """
    n = spec.dim
    p = np.asarray(p, dtype=float)
    if not spec.domain(p):
        raise ChartExitError("start point is outside the chart domain")

    def rhs(t, y):
        x, xd = y[:n], y[n:]
        return np.concatenate([xd, -np.einsum("kij,i,j->k", spec.christoffel_fn(x), xd, xd)])

    y = _integrate(spec, rhs, np.concatenate([p, v]), t_end, settings, n)
    return y[:n].copy(), y[n:].copy()


def transport_integrate(spec, p, v, u, t_end=1.0, settings=OdeSettings()):
    """Parallel-transport ``u`` along the geodesic ``t -> gamma(p, v; t)``.

    Returns the transported vector at ``gamma(t_end)`` in chart coordinates.
    """
    n = spec.dim
    p = np.asarray(p, dtype=float)
    if not spec.domain(p):
        raise ChartExitError("start point is outside the chart domain")

    def rhs(t, y):
        x, xd, w = y[:n], y[n : 2 * n], y[2 * n :]
        gam = spec.christoffel_fn(x)
        return np.concatenate(
            [xd, -np.einsum("kij,i,j->k", gam, xd, xd), -np.einsum("kij,i,j->k", gam, xd, w)]
        )

    y = _integrate(spec, rhs, np.concatenate([p, v, u]), t_end, settings, n)
    return y[2 * n :].copy()


def chart_log(spec, p, q, settings=OdeSettings(), tol=1e-8, max_iter=50):
    """Velocity ``v`` with ``geodesic_integrate(p, v, 1) == q``, by damped shooting.

    The shooting Jacobian is formed by forward differences of the endpoint map;
    the damping factor halves whenever a step fails to reduce the residual.
    """
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    n = spec.dim
    v = q - p
    if not np.any(v):
        return np.zeros(n)

    def residual(vel):
        try:
            return geodesic_integrate(spec, p, vel, 1.0, settings)[0] - q
        except ChartExitError:
            return None

    r = residual(v)
    for _ in range(20):
        if r is not None:
            break
        # shorten the flat guess until its geodesic stays in the chart
        v = 0.5 * v
        r = residual(v)
    if r is None:
        raise NonConvergenceError("no initial shooting guess stays inside the chart")
    rn = np.linalg.norm(r)
    for _ in range(max_iter):
        if rn <= tol:
            return v
        h = 1e-7 * max(1.0, np.linalg.norm(v))
        jac = np.empty((n, n))
        for j in range(n):
            e = np.zeros(n)
            e[j] = h
            rj = residual(v + e)
            if rj is None:
                raise NonConvergenceError("shooting probe left the chart")
            jac[:, j] = (rj - r) / h
        try:
            dv = solve_checked(jac, -r)
        except SingularOperatorError as exc:
            raise NonConvergenceError("singular shooting Jacobian (conjugate point?)") from exc
        damping = 1.0
        while True:
            cand = v + damping * dv
            rc = residual(cand)
            if rc is not None and np.linalg.norm(rc) < rn:
                v, r, rn = cand, rc, np.linalg.norm(rc)
                break
            damping *= 0.5
            if damping < 1e-6:
                raise NonConvergenceError("shooting line search stalled")
    if rn <= tol:
        return v
    raise NonConvergenceError(f"shooting did not converge in {max_iter} iterations (residual {rn:.3e})")


class ChartManifold(Manifold):
    """A :class:`Manifold` whose geometry comes from numerical integration.

    ``injectivity_radius`` is a user-supplied lower bound for the region
    where shooting is trusted (the chart itself gives no global information).
    """

    def __init__(self, spec, settings=OdeSettings(), injectivity_radius=math.inf,
                 curvature_sign=CurvatureSign.MIXED, shooting_tol=1e-8):
        self.spec = spec
        self.settings = settings
        self._inj = injectivity_radius
        self.curvature_sign = curvature_sign
        self.shooting_tol = shooting_tol
        self.dim = spec.dim
        self.point_shape = (spec.dim,)
        self.name = spec.name

    def _inner(self, p, u, v):
        return float(u @ self.spec.metric_fn(p) @ v)

    def exp(self, p, v):
        if not np.any(v):
            return np.array(p, dtype=float)
        return geodesic_integrate(self.spec, p, v, 1.0, self.settings)[0]

    def log(self, p, q):
        v = chart_log(self.spec, p, q, self.settings, tol=self.shooting_tol)
        if self.norm(p, v) >= self.injectivity_radius(p):
            raise InjectivityError("target point lies outside the trusted injectivity radius")
        return v

    def transport(self, p, q, v):
        w = self.log(p, q)
        if not np.any(w):
            return np.array(v, dtype=float)
        return transport_integrate(self.spec, p, w, v, 1.0, self.settings)

    def distance(self, p, q):
        return self.norm(p, self.log(p, q))

    def injectivity_radius(self, p):
        return self._inj

    def _frame_candidates(self, p):
        return list(np.eye(self.dim))

    def is_point(self, p, tol=MEMBERSHIP_TOL):
        return np.shape(p) == self.point_shape and bool(np.all(np.isfinite(p))) and bool(self.spec.domain(p))

    def is_tangent(self, p, v, tol=MEMBERSHIP_TOL):
        return bool(np.all(np.isfinite(v)))

    def random_point(self, rng):
        for _ in range(1000):
            x = rng.standard_normal(self.dim)
            if self.spec.domain(x):
                return x
        raise RuntimeError("could not sample a point inside the chart domain")


# -- stereographic chart of the unit sphere S^2 ------------------------------
# Projection from the south pole: chart origin <-> north pole (0, 0, 1).


def stereo_to_sphere(x):
    x = np.asarray(x, dtype=float)
    s = x @ x
    return np.concatenate([2.0 * x, [1.0 - s]]) / (1.0 + s)


def sphere_to_stereo(p):
    p = np.asarray(p, dtype=float)
    return p[:-1] / (1.0 + p[-1])


def stereo_pushforward(x, v):
    """Differential of :func:`stereo_to_sphere` at ``x`` applied to ``v``."""
    x = np.asarray(x, dtype=float)
    s = x @ x
    xv = x @ v
    d = 1.0 + s
    top = 2.0 * v / d - 4.0 * xv * x / d**2
    last = (-2.0 * xv * d - (1.0 - s) * 2.0 * xv) / d**2
    return np.concatenate([top, [last]])


def stereo_pullback(x, w):
    """Chart components of an ambient tangent vector ``w`` at ``stereo_to_sphere(x)``."""
    jac = np.stack([stereo_pushforward(x, e) for e in np.eye(len(x))], axis=1)
    return np.linalg.lstsq(jac, w, rcond=None)[0]


def stereographic_sphere_chart(n=2, max_radius=4.0):
    """Chart of S^n minus the south pole with conformal metric 4/(1+|x|^2)^2 I."""

    def metric(x):
        return (4.0 / (1.0 + x @ x) ** 2) * np.eye(n)

    def christoffel(x):
        # g = exp(2 phi) I, phi = log 2 - log(1 + |x|^2)
        dphi = -2.0 * x / (1.0 + x @ x)
        eye = np.eye(n)
        return (
            np.einsum("ki,j->kij", eye, dphi)
            + np.einsum("kj,i->kij", eye, dphi)
            - np.einsum("ij,k->kij", eye, dphi)
        )

    return ChartSpec(
        dim=n,
        christoffel_fn=christoffel,
        metric_fn=metric,
        domain=lambda x: bool(np.dot(x, x) < max_radius**2),
        name=f"stereo-S^{n}",
    )
