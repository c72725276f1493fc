"""Newton's method for singularities of vector fields on Riemannian manifolds.

One iteration solves ``nabla X(p) v = -X(p)`` in the orthonormal frame at
``p`` and moves along the geodesic, ``p+ = exp_p(v)``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .core import PIVOT_TOL, solve_checked
from .errors import SingularOperatorError


@dataclass(frozen=True)
class NewtonConfig:
    max_iterations: int = 100
    residual_tol: float = 1e-12
    step_tol: float = 1e-14
    pivot_tol: float = PIVOT_TOL
    clip_to_injectivity: bool = True
    clip_fraction: float = 0.99

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be >= 1")
        if min(self.residual_tol, self.step_tol, self.pivot_tol) <= 0:
            raise ValueError("tolerances must be positive")


class Termination(enum.Enum):
    RESIDUAL = "residual"
    STEP = "step"
    MAX_ITER = "max_iter"
    SINGULAR = "singular"
    INJECTIVITY_CLIP_FAIL = "injectivity_clip_fail"


@dataclass
class IterationRecord:
    k: int
    point: np.ndarray
    residual_norm: float
    step_norm: float = math.nan
    dist_to_solution: float = math.nan
    inverse_norm: float = math.nan
    clipped: bool = False


@dataclass
class ConvergenceTrace:
    records: List[IterationRecord]
    termination: Termination
    known_solution: Optional[np.ndarray] = None
    proxy_distances: bool = False
    message: str = ""

    @property
    def final_point(self):
        return self.records[-1].point

    @property
    def iterations(self):
        """Number of Newton steps actually taken."""
        return len(self.records) - 1

    @property
    def distances(self):
        return np.array([r.dist_to_solution for r in self.records])

    @property
    def converged(self):
        return self.termination in (Termination.RESIDUAL, Termination.STEP)

    def rows(self):
        """Table rows with the per-iteration rate quotients.

        ``ratio_q`` and ``quad_quotient`` on row ``k`` are
        ``d_{k+1} / d_k`` and ``d_{k+1} / d_k**2``.
        """
        d = self.distances
        out = []
        for i, r in enumerate(self.records):
            nxt = d[i + 1] if i + 1 < len(d) else math.nan
            with np.errstate(divide="ignore", invalid="ignore"):
                q = nxt / d[i] if d[i] > 0 else math.nan
                qq = nxt / d[i] ** 2 if d[i] > 0 else math.nan
            out.append(
                {
                    "k": r.k,
                    "residual_norm": r.residual_norm,
                    "step_norm": r.step_norm,
                    "dist_to_solution": r.dist_to_solution,
                    "ratio_q": float(q),
                    "quad_quotient": float(qq),
                    "inverse_norm_estimate": r.inverse_norm,
                }
            )
        return out


@dataclass(frozen=True)
class NewtonStep:
    next: np.ndarray
    step: np.ndarray
    residual_norm: float
    step_norm: float
    inverse_norm: float
    clipped: bool


def inverse_norm(op):
    """``||A^-1||`` as the reciprocal of the smallest singular value."""
    smin = np.linalg.svd(op.matrix, compute_uv=False).min()
    return math.inf if smin == 0.0 else 1.0 / smin


def newton_step(X, p, cfg=NewtonConfig(), value=None):
    """Apply the Newton iterate mapping once.

    Raises
    ------
    SingularOperatorError
        If ``nabla X(p)`` has a pivot below ``cfg.pivot_tol`` (relative).
    """
    m = X.manifold
    x = X(p) if value is None else value
    jac = X.covariant_derivative(p)
    rhs = m.to_coords(p, x, jac.frame)
    coeffs = solve_checked(jac.matrix, -rhs, cfg.pivot_tol)
    inv = inverse_norm(jac)
    if not np.any(coeffs):
        zero = m.zero_vector(p)
        return NewtonStep(np.array(p, dtype=float), zero, m.norm(p, x), 0.0, inv, False)
    v = m.from_coords(p, coeffs, jac.frame)
    vn = m.norm(p, v)
    clipped = False
    radius = m.injectivity_radius(p)
    if cfg.clip_to_injectivity and vn >= radius:
        v = v * (cfg.clip_fraction * radius / vn)
        vn = cfg.clip_fraction * radius
        clipped = True
    return NewtonStep(m.exp(p, v), v, m.norm(p, x), vn, inv, clipped)


def newton_solve(X, p0, cfg=NewtonConfig(), known_solution=None):
    """Run Newton's iteration from ``p0`` until a stopping rule fires.

    Without ``known_solution`` the recorded distances are measured to the
    final iterate, a proxy that is only meaningful once convergence is
    established.
    """
    m = X.manifold
    p = np.array(p0, dtype=float)
    m.check_point(p)
    records = []
    termination = Termination.MAX_ITER
    message = ""
    prev_clipped = False
    k = 0
    while True:
        x = X(p)
        rec = IterationRecord(k=k, point=p, residual_norm=m.norm(p, x))
        records.append(rec)
        if rec.residual_norm <= cfg.residual_tol:
            termination = Termination.RESIDUAL
            _fill_inverse_norm(X, rec)
            break
        if k >= cfg.max_iterations:
            termination = Termination.MAX_ITER
            _fill_inverse_norm(X, rec)
            break
        try:
            step = newton_step(X, p, cfg, value=x)
        except SingularOperatorError as exc:
            termination = Termination.SINGULAR
            message = f"{exc} (condition ~ {exc.condition:.3e})"
            break
        rec.step_norm = step.step_norm
        rec.inverse_norm = step.inverse_norm
        rec.clipped = step.clipped
        if step.clipped and prev_clipped:
            termination = Termination.INJECTIVITY_CLIP_FAIL
            message = "step clipped to the injectivity radius on two consecutive iterations"
            break
        prev_clipped = step.clipped
        p = step.next
        k += 1
        if step.step_norm <= cfg.step_tol:
            x = X(p)
            final = IterationRecord(k=k, point=p, residual_norm=m.norm(p, x))
            _fill_inverse_norm(X, final)
            records.append(final)
            termination = Termination.STEP
            break

    proxy = known_solution is None
    target = records[-1].point if proxy else np.asarray(known_solution, dtype=float)
    for r in records:
        r.dist_to_solution = m.distance(r.point, target)
    return ConvergenceTrace(records, termination, None if proxy else target, proxy, message)


def _fill_inverse_norm(X, rec):
    try:
        rec.inverse_norm = inverse_norm(X.covariant_derivative(rec.point))
    except SingularOperatorError:
        rec.inverse_norm = math.inf


@dataclass
class InverseBoundReport:
    solution_inverse_norm: float
    radius_tested: float
    sample_distances: np.ndarray
    sample_inverse_norms: np.ndarray
    bound_factor: float
    certified_radius: Optional[float]
    halvings: int
    history: list = field(default_factory=list)

    @property
    def certified(self):
        return self.certified_radius is not None


def sample_ball(manifold, center, radius, rng):
    """Point ``exp(center, u)`` with ``u`` uniform in the tangent ball of ``radius``."""
    d = manifold.dim
    direction = rng.standard_normal(d)
    direction /= np.linalg.norm(direction)
    c = radius * rng.uniform() ** (1.0 / d) * direction
    return manifold.exp(center, manifold.from_coords(center, c))


def inverse_bound_scan(X, solution, radius, samples, seed=0, max_halvings=20, residual_tol=1e-10):
    """Look for a ball around ``solution`` where ``||nabla X^-1||`` at most doubles.

    Points are drawn uniformly (in normal coordinates) from the geodesic ball
    of the current radius; the solution itself is always included, so the
    reported factor is at least 1. The radius is halved until the factor-two
    bound holds, at most ``max_halvings`` times.
    """
    m = X.manifold
    if m.norm(solution, X(solution)) > residual_tol:
        raise ValueError("declared solution is not a singularity of the field")
    if radius <= 0 or radius >= m.injectivity_radius(solution):
        raise ValueError("radius must lie in (0, injectivity radius)")
    base = inverse_norm(X.covariant_derivative(solution))
    if not math.isfinite(base):
        raise SingularOperatorError("covariant derivative is singular at the declared solution")
    rng = np.random.default_rng(seed)
    r = radius
    history = []
    for halvings in range(max_halvings + 1):
        dists, norms = [0.0], [base]
        for _ in range(samples):
            q = sample_ball(m, solution, r, rng)
            try:
                n = inverse_norm(X.covariant_derivative(q))
            except SingularOperatorError:
                n = math.inf
            dists.append(m.distance(solution, q))
            norms.append(n)
        factor = max(norms) / base
        history.append((r, factor))
        if factor <= 2.0:
            return InverseBoundReport(base, r, np.array(dists), np.array(norms), factor, r, halvings, history)
        if halvings < max_halvings:
            r /= 2.0
    return InverseBoundReport(base, r, np.array(dists), np.array(norms), factor, None, max_halvings, history)
