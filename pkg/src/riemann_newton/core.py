"""Manifold interface and tangent-space linear algebra.

Points and tangent vectors are plain numpy arrays in the manifold's canonical
(ambient or chart) representation. Linear maps on a tangent space are stored
as :class:`TangentOperator` matrices expressed in a deterministic orthonormal
frame, so the operator norm is the matrix 2-norm and Newton systems are small
dense solves.
"""

from __future__ import annotations

import abc
import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .errors import BasePointError, NotOnManifoldError, SingularOperatorError

MEMBERSHIP_TOL = 1e-10
PIVOT_TOL = 1e-12


class CurvatureSign(enum.Enum):
    NONNEGATIVE = "nonnegative"
    NONPOSITIVE = "nonpositive"
    MIXED = "mixed"
    FLAT = "flat"


@dataclass(frozen=True)
class ManifoldDescriptor:
    intrinsic_dim: int
    ambient_dim: int
    injectivity_radius_fn: Callable[[np.ndarray], float]
    curvature_sign: CurvatureSign

    def __post_init__(self):
        if not 1 <= self.intrinsic_dim <= self.ambient_dim:
            raise ValueError("need 1 <= intrinsic_dim <= ambient_dim")


def gram_schmidt(candidates, inner, tol=1e-8):
    """Orthonormalize ``candidates`` under ``inner``, dropping dependent ones.

    Two passes of modified Gram-Schmidt are applied to every candidate, which
    keeps the result orthonormal to working precision even for mildly
    ill-conditioned metrics.
    """
    basis = []
    for c in candidates:
        w = np.array(c, dtype=float)
        scale = math.sqrt(max(inner(w, w), 0.0))
        for _ in range(2):
            for e in basis:
                w = w - inner(e, w) * e
        nrm = math.sqrt(max(inner(w, w), 0.0))
        if nrm <= tol * max(scale, 1e-300):
            continue
        basis.append(w / nrm)
    return basis


class Manifold(abc.ABC):
    """A finite-dimensional, geodesically complete Riemannian manifold.

    Subclasses implement the closed-form (or numerical) geometry. Instances
    hold no mutable state, so one manifold can be shared across threads.
    """

    #: shape of a point / tangent vector array
    point_shape: tuple
    #: intrinsic dimension
    dim: int
    curvature_sign: CurvatureSign = CurvatureSign.MIXED
    name: str = "manifold"

    # -- primitives every kernel provides --------------------------------

    @abc.abstractmethod
    def _inner(self, p, u, v) -> float:
        """Riemannian inner product without tangency validation."""

    @abc.abstractmethod
    def exp(self, p, v):
        ...

    @abc.abstractmethod
    def log(self, p, q):
        ...

    @abc.abstractmethod
    def transport(self, p, q, v):
        """Parallel transport of ``v`` along the minimal geodesic p -> q."""

    @abc.abstractmethod
    def distance(self, p, q) -> float:
        ...

    @abc.abstractmethod
    def injectivity_radius(self, p) -> float:
        ...

    @abc.abstractmethod
    def _frame_candidates(self, p):
        """Ordered tangent vectors spanning T_pM (possibly with extras)."""

    @abc.abstractmethod
    def is_point(self, p, tol=MEMBERSHIP_TOL) -> bool:
        ...

    @abc.abstractmethod
    def is_tangent(self, p, v, tol=MEMBERSHIP_TOL) -> bool:
        ...

    @abc.abstractmethod
    def random_point(self, rng):
        ...

    def project(self, p):
        """Pull a slightly drifted point back onto the manifold."""
        return np.asarray(p, dtype=float)

    def project_tangent(self, p, v):
        return np.asarray(v, dtype=float)

    # -- derived operations ----------------------------------------------

    @property
    def ambient_dim(self) -> int:
        return int(np.prod(self.point_shape))

    @property
    def descriptor(self) -> ManifoldDescriptor:
        return ManifoldDescriptor(
            intrinsic_dim=self.dim,
            ambient_dim=self.ambient_dim,
            injectivity_radius_fn=self.injectivity_radius,
            curvature_sign=self.curvature_sign,
        )

    def check_point(self, p):
        if not self.is_point(p):
            raise NotOnManifoldError(f"point is not on {self.name}")

    def check_tangent(self, p, v):
        if np.shape(v) != self.point_shape or not self.is_tangent(p, v):
            raise BasePointError(f"vector is not tangent to {self.name} at the given base point")

    def inner(self, p, u, v) -> float:
        """Metric inner product of two tangent vectors at ``p``.

        Raises :class:`BasePointError` when either vector is not in T_pM,
        which is how a mismatched base point shows up with array storage.
        """
        self.check_tangent(p, u)
        self.check_tangent(p, v)
        return self._inner(p, u, v)

    def norm(self, p, v) -> float:
        return math.sqrt(max(self._inner(p, v, v), 0.0))

    def zero_vector(self, p):
        return np.zeros(self.point_shape)

    def transport_inverse(self, p, q, w):
        """Inverse of :meth:`transport`; maps T_qM back to T_pM."""
        return self.transport(q, p, w)

    def frame(self, p):
        """Deterministic orthonormal basis of T_pM, shape ``(dim, *point_shape)``."""
        basis = gram_schmidt(self._frame_candidates(p), lambda a, b: self._inner(p, a, b))
        if len(basis) != self.dim:
            raise ArithmeticError(f"frame construction produced {len(basis)} of {self.dim} vectors")
        return np.stack(basis)

    def to_coords(self, p, v, frame=None):
        frame = self.frame(p) if frame is None else frame
        return np.array([self._inner(p, e, v) for e in frame])

    def from_coords(self, p, c, frame=None):
        frame = self.frame(p) if frame is None else frame
        return np.tensordot(np.asarray(c, dtype=float), frame, axes=1)

    def random_tangent(self, p, rng, scale=1.0):
        """Tangent vector with standard normal frame coordinates times ``scale``."""
        return self.from_coords(p, scale * rng.standard_normal(self.dim))

    def random_unit_tangent(self, p, rng):
        v = self.random_tangent(p, rng)
        return v / self.norm(p, v)

    def identity(self, p):
        frame = self.frame(p)
        return TangentOperator(p, np.eye(self.dim), frame, self)


@dataclass(frozen=True)
class TangentOperator:
    """A linear map T_pM -> T_pM stored as a matrix in an orthonormal frame."""

    base: np.ndarray
    matrix: np.ndarray
    frame: np.ndarray
    manifold: Manifold = field(repr=False, compare=False)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] != self.manifold.dim:
            raise ValueError(f"operator matrix must be {self.manifold.dim}x{self.manifold.dim}, got {m.shape}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self):
        return self.matrix.shape[0]

    def apply(self, v):
        c = self.manifold.to_coords(self.base, v, self.frame)
        return self.manifold.from_coords(self.base, self.matrix @ c, self.frame)

    def __matmul__(self, other):
        if isinstance(other, TangentOperator):
            return self.with_matrix(self.matrix @ other.matrix)
        return self.apply(other)

    def with_matrix(self, matrix):
        return TangentOperator(self.base, matrix, self.frame, self.manifold)

    def norm(self):
        return operator_norm(self)


def operator_norm(A: TangentOperator) -> float:
    """sup of ||A v|| over unit v; the spectral norm since the frame is orthonormal."""
    if A.matrix.size == 0:
        return 0.0
    return float(np.linalg.norm(A.matrix, 2))


def lu_checked(matrix, pivot_tol=PIVOT_TOL):
    """LU-factor ``matrix`` with partial pivoting, rejecting tiny pivots.

    A pivot is tiny when it falls below ``pivot_tol`` relative to the largest
    entry of ``matrix``.
    """
    matrix = np.asarray(matrix, dtype=float)
    scale = np.max(np.abs(matrix)) if matrix.size else 0.0
    if scale == 0.0 or not np.all(np.isfinite(matrix)):
        raise SingularOperatorError("operator is zero or non-finite", math.inf)
    with warnings.catch_warnings():
        # exact zero pivots are reported below as SingularOperatorError
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        lu, piv = scipy.linalg.lu_factor(matrix, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < pivot_tol * scale:
        raise SingularOperatorError(
            f"relative pivot {pivots.min() / scale:.3e} below {pivot_tol:g}",
            float(np.linalg.cond(matrix)),
        )
    return lu, piv


def solve_checked(matrix, rhs, pivot_tol=PIVOT_TOL):
    lu, piv = lu_checked(matrix, pivot_tol)
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


def banach_invert(B: TangentOperator, pivot_tol=PIVOT_TOL):
    """Invert ``B``, certifying the Banach perturbation bound when it applies.

    Returns
    -------
    inverse : TangentOperator
    bound : float or None
        ``1 / (1 - ||B - I||)`` when ``||B - I|| < 1`` (then ``||B^-1|| <= bound``
        holds), otherwise ``None``.

    Raises
    ------
    SingularOperatorError
        If LU factorization meets a pivot below ``pivot_tol`` (relative).
    """
    eye = np.eye(B.dim)
    defect = float(np.linalg.norm(B.matrix - eye, 2)) if B.dim else 0.0
    lu, piv = lu_checked(B.matrix, pivot_tol)
    inv = scipy.linalg.lu_solve((lu, piv), eye, check_finite=False)
    bound = 1.0 / (1.0 - defect) if defect < 1.0 else None
    return B.with_matrix(inv), bound
