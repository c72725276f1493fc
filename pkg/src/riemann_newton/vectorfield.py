"""Vector fields and their covariant derivatives."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .core import Manifold, TangentOperator
from .errors import ChartExitError, DomainError, UndefinedResidualError

DEFAULT_FD_STEP = np.finfo(float).eps ** (1.0 / 3.0)


@dataclass(frozen=True)
class VectorField:
    """A differentiable vector field ``X`` on (an open subset of) a manifold.

    Parameters
    ----------
    manifold : Manifold
    fn : callable
        ``fn(p)`` returns ``X(p)`` as a tangent vector at ``p``.
    derivative : callable, optional
        ``derivative(p, v)`` returns the covariant derivative ``nabla X(p) v``.
        When omitted, :meth:`covariant_derivative` falls back to transported
        central differences.
    domain : callable, optional
        Predicate for the open set on which ``X`` is defined.
    fd_step : float
        Default step for the finite-difference provider.
    """

    manifold: Manifold
    fn: Callable
    derivative: Optional[Callable] = None
    domain: Optional[Callable] = None
    fd_step: float = DEFAULT_FD_STEP
    name: str = "field"

    @property
    def has_analytic_derivative(self):
        return self.derivative is not None

    def in_domain(self, p):
        return self.domain is None or bool(self.domain(p))

    def __call__(self, p):
        if not self.in_domain(p):
            raise DomainError(f"{self.name}: point outside the field's domain")
        return np.asarray(self.fn(p), dtype=float)

    def covariant_derivative(self, p):
        if self.derivative is None:
            return fd_covariant_derivative(self, p, self.fd_step)
        return analytic_covariant_derivative(self, p)


def evaluate(X: VectorField, p):
    return X(p)


def analytic_covariant_derivative(X: VectorField, p):
    if not X.in_domain(p):
        raise DomainError(f"{X.name}: point outside the field's domain")
    m = X.manifold
    frame = m.frame(p)
    cols = [m.to_coords(p, X.derivative(p, e), frame) for e in frame]
    return TangentOperator(p, np.column_stack(cols), frame, m)


def covariant_derivative(X: VectorField, p):
    """``nabla X(p)`` in the orthonormal frame at ``p``."""
    return X.covariant_derivative(p)


def _pulled_back(X, p, v, h):
    m = X.manifold
    q = m.exp(p, h * v)
    if not X.in_domain(q):
        raise DomainError("finite-difference probe left the domain")
    return m.transport_inverse(p, q, X(q))


def fd_covariant_derivative(X: VectorField, p, h=None):
    """Central-difference covariant derivative.

    Column ``j`` is ``[P^-1 X(exp_p(h e_j)) - P^-1 X(exp_p(-h e_j))] / (2h)``
    where ``P^-1`` transports back to ``p`` along the probing geodesic. A probe
    that leaves the domain triggers one retry with ``h / 10``.
    """
    if not X.in_domain(p):
        raise DomainError(f"{X.name}: point outside the field's domain")
    h = X.fd_step if h is None else h
    m = X.manifold
    frame = m.frame(p)
    for attempt in range(2):
        try:
            cols = []
            for e in frame:
                diff = (_pulled_back(X, p, e, h) - _pulled_back(X, p, e, -h)) / (2.0 * h)
                cols.append(m.to_coords(p, diff, frame))
            return TangentOperator(p, np.column_stack(cols), frame, m)
        except (DomainError, ChartExitError):
            if attempt:
                raise DomainError(f"{X.name}: finite-difference probes leave the domain even with h={h:g}")
            h /= 10.0


@dataclass(frozen=True)
class ExpansionResidual:
    base: np.ndarray
    probe: np.ndarray
    residual: np.ndarray
    distance: float
    norm: float


def expansion_residual(X: VectorField, base, probe, derivative=None):
    """Remainder of the first-order expansion of ``X`` around ``base``.

    ``r(p) = [X(p) - P X(base) - P nabla X(base) log_base(p)] / d(p, base)``
    with ``P`` the transport from ``base`` to ``p``.
    """
    m = X.manifold
    d = m.distance(base, probe)
    if d == 0.0:
        raise UndefinedResidualError("residual is undefined at the base point itself")
    if d >= m.injectivity_radius(base):
        raise UndefinedResidualError("probe lies outside the injectivity ball of the base point")
    op = X.covariant_derivative(base) if derivative is None else derivative
    lin = X(base) + op.apply(m.log(base, probe))
    r = (X(probe) - m.transport(base, probe, lin)) / d
    return ExpansionResidual(base, probe, r, d, m.norm(probe, r))
