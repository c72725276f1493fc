"""Empirical convergence-rate certification and geodesic-spread estimates.

Rates are read off the error sequence ``d_k = d(p_k, p_*)``:

* ratio ``q_k = d_{k+1} / d_k`` (superlinear when it tends to 0),
* quadratic quotient ``Q_k = d_{k+1} / d_k**2`` (quadratic when bounded).

The limits are asymptotic, so the verdicts depend on the measurement
thresholds in :class:`RateThresholds`.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .manifolds import Euclidean
from .vectorfield import VectorField

LINEAR = "linear"
SUPERLINEAR = "superlinear"
QUADRATIC = "quadratic"
INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class RateThresholds:
    distance_floor: float = 1e-13
    min_usable: int = 3
    decay_factor: float = 10.0
    final_ratio: float = 0.05
    quadratic_band: float = 10.0
    linear_tolerance: float = 0.1


@dataclass
class RateReport:
    classification: str
    ratios: list
    quad_quotients: list
    usable_iterations: int
    floor_index: int
    superlinear: bool = False
    quadratic: bool = False
    linear_rate: float = None
    quad_growth: float = math.nan
    reason: str = ""

    def to_dict(self):
        return asdict(self)


def classify_distances(distances, thresholds=RateThresholds()):
    """Classify an error sequence as linear, superlinear, quadratic or inconclusive.

    Distances from the first one below ``thresholds.distance_floor`` onward are
    discarded. With the remaining ``d_0..d_m``:

    * superlinear: ``q_last <= q_first / decay_factor`` and ``q_last < final_ratio``;
    * quadratic: superlinear, and no quadratic quotient exceeds an earlier one
      by more than ``quadratic_band`` (the quotients stay bounded);
    * linear: the trailing half of the ratios sits within ``linear_tolerance``
      (relative) of its median ``c`` with ``final_ratio < c < 1``.
    """
    t = thresholds
    d = np.asarray(distances, dtype=float)
    below = np.nonzero(~(d >= t.distance_floor))[0]
    floor_index = int(below[0]) if below.size else len(d)
    usable = d[:floor_index]
    n = len(usable)
    ratios = (usable[1:] / usable[:-1]).tolist()
    quads = (usable[1:] / usable[:-1] ** 2).tolist()
    report = RateReport(INCONCLUSIVE, ratios, quads, n, floor_index)
    if n < t.min_usable:
        report.reason = f"only {n} usable iterations above the distance floor (need {t.min_usable})"
        return report

    q = np.array(ratios)
    qq = np.array(quads)
    report.quad_growth = float(qq[-1] / qq[0])
    report.superlinear = bool(q[-1] <= q[0] / t.decay_factor and q[-1] < t.final_ratio)
    if report.superlinear:
        growth = max(qq[j] / qq[i] for i in range(len(qq)) for j in range(i, len(qq)))
        report.quadratic = bool(growth <= t.quadratic_band)
        report.classification = QUADRATIC if report.quadratic else SUPERLINEAR
        report.reason = f"ratio fell from {q[0]:.3g} to {q[-1]:.3g}; max quotient growth {growth:.3g}"
        return report

    tail = q[len(q) // 2 :]
    c = float(np.median(tail))
    if t.final_ratio < c < 1.0 and np.all(np.abs(tail - c) <= t.linear_tolerance * c):
        report.classification = LINEAR
        report.linear_rate = c
        report.reason = f"ratios settle at {c:.3g}"
    else:
        report.reason = f"ratios {q[0]:.3g} -> {q[-1]:.3g} fit no rate pattern"
    return report


def classify_rate(trace, thresholds=RateThresholds()):
    """Classify a :class:`~riemann_newton.newton.ConvergenceTrace`."""
    return classify_distances(trace.distances, thresholds)


# -- geodesic spread ---------------------------------------------------------

# sample coordinates live on a dyadic grid so that flat translations are exact
_GRID = 2.0**-26


def _ball_coords(rng, dim, radius):
    direction = rng.standard_normal(dim)
    direction /= np.linalg.norm(direction)
    c = radius * rng.uniform() ** (1.0 / dim) * direction
    return np.round(c / _GRID) * _GRID


@dataclass
class SpreadEstimate:
    base: np.ndarray
    radius: float
    samples: int
    seed: int
    estimate: float
    pairs_evaluated: int
    extra: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "base": np.asarray(self.base).tolist(),
            "radius": self.radius,
            "samples": self.samples,
            "seed": self.seed,
            "estimate": self.estimate,
            "pairs_evaluated": self.pairs_evaluated,
        }


def estimate_spread(manifold, p, radius, samples, seed=0):
    """Sampled lower estimate of the geodesic spread constant ``K_p``.

    Each sample draws ``q`` uniformly (in normal coordinates) from the ball
    of ``radius`` about ``p`` and a pair ``u, v`` in T_qM with ``||u||, ||v||,
    ||u - v|| <= radius``; the ratio ``d(exp_q u, exp_q v) / ||u - v||`` is
    recorded, together with the radial pair ``(0, v)`` which realises ratio 1.
    The estimate is the largest recorded ratio. It is a sampled supremum, not
    an upper bound.

    Sample coordinates are rounded to a dyadic grid, so on a flat manifold
    whose base point lies on that grid every ratio is exactly 1.
    """
    if not 0.0 < radius <= manifold.injectivity_radius(p):
        raise ValueError("radius must lie in (0, injectivity radius]")
    if samples < 1:
        raise ValueError("samples must be >= 1")
    m = manifold
    rng = np.random.default_rng(seed)
    best = 0.0
    pairs = 0
    for _ in range(samples):
        q = m.exp(p, m.from_coords(p, _ball_coords(rng, m.dim, radius)))
        frame = m.frame(q)
        cv = _ball_coords(rng, m.dim, radius)
        for _ in range(100):
            cu = _ball_coords(rng, m.dim, radius)
            if np.linalg.norm(cu - cv) <= radius:
                break
        v = m.from_coords(q, cv, frame)
        u = m.from_coords(q, cu, frame)
        gv = m.exp(q, v)
        nv = m.norm(q, v)
        if nv > 0.0:
            best = max(best, m.distance(q, gv) / nv)
            pairs += 1
        duv = m.norm(q, u - v)
        if duv > 1e-8 * radius:
            best = max(best, m.distance(m.exp(q, u), gv) / duv)
            pairs += 1
    return SpreadEstimate(np.asarray(p), radius, samples, seed, best, pairs)


# -- Hoelder test fields -----------------------------------------------------


def holder_field(manifold, solution, alpha, direction=None, name=None):
    """Field with a continuous but (for ``alpha < 1``) non-Lipschitz derivative.

    ``X(p) = -log_p(p_*) + rho**(1 + alpha) * P_{p_* p} w``, with
    ``rho = d(p, p_*)`` and ``w`` a unit vector at ``p_*`` (the first frame
    vector unless given). ``X(p_*) = 0`` and ``nabla X(p_*)`` is the identity.
    Only the Euclidean version carries an analytic derivative.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    m = manifold
    solution = np.asarray(solution, dtype=float)
    if direction is None:
        w0 = m.frame(solution)[0]
    else:
        w0 = np.asarray(direction, dtype=float)
        w0 = w0 / m.norm(solution, w0)
    power = 1.0 + alpha

    def fn(p):
        to_sol = m.log(p, solution)
        rho = m.norm(p, to_sol)
        if rho == 0.0:
            return m.zero_vector(p)
        return -to_sol + rho**power * m.transport(solution, p, w0)

    derivative = None
    if isinstance(m, Euclidean):

        def derivative(p, v):
            e = np.asarray(p, dtype=float) - solution
            rho = float(np.linalg.norm(e))
            out = np.array(v, dtype=float)
            if rho > 0.0:
                out = out + power * rho ** (alpha - 1.0) * float(np.dot(e, v)) * w0
            return out

    inj = m.injectivity_radius(solution)
    domain = None
    if math.isfinite(inj):
        domain = lambda p: m.distance(p, solution) < inj - 1e-6  # noqa: E731

    return VectorField(m, fn, derivative, domain, name=name or f"holder-a{alpha:g}")
