"""Closed-form manifold kernels: Euclidean space, sphere, SPD matrices, hyperboloid."""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg

from .core import MEMBERSHIP_TOL, CurvatureSign, Manifold, gram_schmidt
from .errors import InjectivityError, ManifoldError

MAX_AMBIENT = 1024


def _tol(tol, *scales):
    return tol * max(1.0, *scales)


class Euclidean(Manifold):
    """Flat R^n; Newton on it is the textbook iteration."""

    curvature_sign = CurvatureSign.FLAT

    def __init__(self, n):
        if n < 1:
            raise ValueError("Euclidean dimension must be >= 1")
        self.n = n
        self.dim = n
        self.point_shape = (n,)
        self.name = f"R^{n}"

    def _inner(self, p, u, v):
        return float(np.dot(u, v))

    def exp(self, p, v):
        return np.asarray(p, dtype=float) + v

    def log(self, p, q):
        return np.asarray(q, dtype=float) - p

    def transport(self, p, q, v):
        return np.array(v, dtype=float)

    def distance(self, p, q):
        # same routine as norm() so that flat ratios come out exactly 1
        return self.norm(p, np.asarray(q, dtype=float) - p)

    def injectivity_radius(self, p):
        return math.inf

    def frame(self, p):
        return np.eye(self.n)

    def _frame_candidates(self, p):
        return list(np.eye(self.n))

    def is_point(self, p, tol=MEMBERSHIP_TOL):
        return np.shape(p) == self.point_shape and bool(np.all(np.isfinite(p)))

    def is_tangent(self, p, v, tol=MEMBERSHIP_TOL):
        return bool(np.all(np.isfinite(v)))

    def random_point(self, rng):
        return rng.standard_normal(self.n)

    def dlog(self, p, q, v):
        """Covariant derivative of ``p -> log_p(q)`` applied to ``v``."""
        return -np.asarray(v, dtype=float)


class Sphere(Manifold):
    """Unit sphere S^{n-1} in R^n with the round metric."""

    curvature_sign = CurvatureSign.NONNEGATIVE

    def __init__(self, n):
        if n < 2:
            raise ValueError("sphere ambient dimension must be >= 2")
        self.n = n
        self.dim = n - 1
        self.point_shape = (n,)
        self.name = f"S^{n - 1}"

    def _inner(self, p, u, v):
        return float(np.dot(u, v))

    def project(self, p):
        p = np.asarray(p, dtype=float)
        return p / np.linalg.norm(p)

    def project_tangent(self, p, v):
        return v - np.dot(p, v) * p

    def exp(self, p, v):
        t = np.linalg.norm(v)
        if t == 0.0:
            return np.array(p, dtype=float)
        return self.project(math.cos(t) * p + (math.sin(t) / t) * v)

    def log(self, p, q):
        theta = self.distance(p, q)
        if theta == 0.0:
            return np.zeros(self.n)
        if math.pi - theta < 1e-10:
            raise InjectivityError("points are (numerically) antipodal; log is not unique")
        u = q - np.dot(p, q) * p
        v = (theta / np.linalg.norm(u)) * u
        return self.project_tangent(p, v)

    def transport(self, p, q, v):
        denom = 1.0 + float(np.dot(p, q))
        if denom < 1e-12:
            raise InjectivityError("no unique minimal geodesic between antipodal points")
        return v - (np.dot(q, v) / denom) * (p + q)

    def distance(self, p, q):
        return 2.0 * math.atan2(np.linalg.norm(p - q), np.linalg.norm(p + q))

    def injectivity_radius(self, p):
        return math.pi

    def _frame_candidates(self, p):
        skip = int(np.argmax(np.abs(p)))
        eye = np.eye(self.n)
        return [eye[j] - p[j] * p for j in range(self.n) if j != skip]

    def is_point(self, p, tol=MEMBERSHIP_TOL):
        return (
            np.shape(p) == self.point_shape
            and bool(np.all(np.isfinite(p)))
            and abs(np.linalg.norm(p) - 1.0) <= tol
        )

    def is_tangent(self, p, v, tol=MEMBERSHIP_TOL):
        return bool(np.all(np.isfinite(v))) and abs(np.dot(p, v)) <= _tol(tol, np.linalg.norm(v))

    def random_point(self, rng):
        return self.project(rng.standard_normal(self.n))

    def dlog(self, p, q, v):
        u = self.log(p, q)
        theta = np.linalg.norm(u)
        if theta < 1e-12:
            return -np.asarray(v, dtype=float)
        uhat = u / theta
        par = np.dot(uhat, v) * uhat
        return -(par + (theta * math.cos(theta) / math.sin(theta)) * (v - par))


class Hyperboloid(Manifold):
    """Hyperbolic space H^n as the upper sheet of <x, x>_M = -1 in R^{n+1}."""

    curvature_sign = CurvatureSign.NONPOSITIVE

    def __init__(self, n):
        if n < 1:
            raise ValueError("hyperboloid dimension must be >= 1")
        self.n = n
        self.dim = n
        self.point_shape = (n + 1,)
        self.name = f"H^{n}"

    @staticmethod
    def minkowski(u, v):
        return float(np.dot(u[1:], v[1:]) - u[0] * v[0])

    def _inner(self, p, u, v):
        return self.minkowski(u, v)

    def project(self, p):
        p = np.array(p, dtype=float)
        p[0] = math.sqrt(1.0 + np.dot(p[1:], p[1:]))
        return p

    def project_tangent(self, p, v):
        return v + self.minkowski(p, v) * p

    def exp(self, p, v):
        t = math.sqrt(max(self.minkowski(v, v), 0.0))
        if t == 0.0:
            return np.array(p, dtype=float)
        return self.project(math.cosh(t) * p + (math.sinh(t) / t) * v)

    def log(self, p, q):
        d = self.distance(p, q)
        if d == 0.0:
            return np.zeros(self.n + 1)
        u = q + self.minkowski(p, q) * p
        nu = math.sqrt(max(self.minkowski(u, u), 0.0))
        if nu == 0.0:
            return np.zeros(self.n + 1)
        return self.project_tangent(p, (d / nu) * u)

    def transport(self, p, q, v):
        return v + (self.minkowski(q, v) / (1.0 - self.minkowski(p, q))) * (p + q)

    def distance(self, p, q):
        c = np.asarray(q, dtype=float) - p
        chord2 = self.minkowski(c, c)
        if chord2 > 4.0:
            return math.acosh(-self.minkowski(p, q))
        return 2.0 * math.asinh(math.sqrt(max(chord2, 0.0)) / 2.0)

    def injectivity_radius(self, p):
        return math.inf

    def _frame_candidates(self, p):
        eye = np.eye(self.n + 1)
        return [eye[j] + p[j] * p for j in range(1, self.n + 1)]

    def is_point(self, p, tol=MEMBERSHIP_TOL):
        if np.shape(p) != self.point_shape or not np.all(np.isfinite(p)) or p[0] <= 0:
            return False
        return abs(self.minkowski(p, p) + 1.0) <= _tol(tol, p[0] ** 2)

    def is_tangent(self, p, v, tol=MEMBERSHIP_TOL):
        if not np.all(np.isfinite(v)):
            return False
        return abs(self.minkowski(p, v)) <= _tol(tol, np.linalg.norm(p) * np.linalg.norm(v))

    def random_point(self, rng):
        return self.project(np.concatenate([[0.0], rng.standard_normal(self.n)]))

    def dlog(self, p, q, v):
        u = self.log(p, q)
        theta = self.norm(p, u)
        if theta < 1e-12:
            return -np.asarray(v, dtype=float)
        uhat = u / theta
        par = self.minkowski(uhat, v) * uhat
        return -(par + (theta / math.tanh(theta)) * (v - par))


def _sym(a):
    return 0.5 * (a + a.T)


def _eig_fn(a, fn):
    w, vecs = np.linalg.eigh(_sym(a))
    return (vecs * fn(w)) @ vecs.T


def _half_coth(theta):
    """(theta/2) * coth(theta/2) with its removable singularity at 0."""
    out = np.ones_like(theta)
    big = np.abs(theta) > 1e-8
    half = 0.5 * theta[big]
    out[big] = half / np.tanh(half)
    return out


class SPD(Manifold):
    """Symmetric positive-definite n x n matrices, affine-invariant metric."""

    curvature_sign = CurvatureSign.NONPOSITIVE

    def __init__(self, n):
        if n < 1:
            raise ValueError("SPD matrix size must be >= 1")
        self.n = n
        self.dim = n * (n + 1) // 2
        self.point_shape = (n, n)
        self.name = f"SPD({n})"

    # matrix functions via the symmetric eigendecomposition
    @staticmethod
    def _sqrt_and_invsqrt(p):
        w, vecs = np.linalg.eigh(_sym(p))
        w = np.maximum(w, 1e-300)
        r = np.sqrt(w)
        return (vecs * r) @ vecs.T, (vecs / r) @ vecs.T

    @staticmethod
    def _logm(a):
        w, vecs = np.linalg.eigh(_sym(a))
        if np.any(w <= 0.0):
            raise ManifoldError("matrix logarithm of a matrix with non-positive eigenvalue")
        return (vecs * np.log(np.maximum(w, 1e-300))) @ vecs.T

    @staticmethod
    def _whitener(p):
        """``L^-1`` for the Cholesky factor ``p = L L^T``."""
        lower = np.linalg.cholesky(_sym(p))
        return scipy.linalg.solve_triangular(lower, np.eye(len(lower)), lower=True)

    def _whiten(self, p, v, linv=None):
        linv = self._whitener(p) if linv is None else linv
        return linv @ v @ linv.T

    def _inner(self, p, u, v):
        linv = self._whitener(p)
        return float(np.sum(self._whiten(p, u, linv) * self._whiten(p, v, linv)))

    def frame(self, p):
        # Gram-Schmidt in whitened coordinates, where the metric is Frobenius
        linv = self._whitener(p)
        cands = [linv @ c @ linv.T for c in self._frame_candidates(p)]
        basis = gram_schmidt(cands, lambda a, b: float(np.sum(a * b)))
        if len(basis) != self.dim:
            raise ArithmeticError(f"frame construction produced {len(basis)} of {self.dim} vectors")
        lower = np.linalg.inv(linv)
        return np.stack([_sym(lower @ b @ lower.T) for b in basis])

    def to_coords(self, p, v, frame=None):
        frame = self.frame(p) if frame is None else frame
        linv = self._whitener(p)
        wv = linv @ v @ linv.T
        wf = np.einsum("ij,kjl,ml->kim", linv, frame, linv)
        return np.einsum("kim,im->k", wf, wv)

    def project(self, p):
        p = _sym(np.asarray(p, dtype=float))
        w, vecs = np.linalg.eigh(p)
        if w.min() >= 1e-12:
            return p
        return _sym((vecs * np.maximum(w, 1e-12)) @ vecs.T)

    def project_tangent(self, p, v):
        return _sym(v)

    def exp(self, p, v):
        if not np.any(v):
            return np.array(p, dtype=float)
        s, si = self._sqrt_and_invsqrt(p)
        return self.project(s @ _eig_fn(si @ v @ si, np.exp) @ s)

    def log(self, p, q):
        s, si = self._sqrt_and_invsqrt(p)
        return _sym(s @ self._logm(si @ q @ si) @ s)

    def transport(self, p, q, v):
        s, si = self._sqrt_and_invsqrt(p)
        e = s @ _eig_fn(si @ q @ si, np.sqrt) @ si
        return _sym(e @ v @ e.T)

    def distance(self, p, q):
        w = scipy.linalg.eigvalsh(_sym(q), _sym(p))
        if np.any(w <= 0.0):
            raise ManifoldError("generalized eigenvalue <= 0; argument is not SPD")
        return float(np.sqrt(np.sum(np.log(w) ** 2)))

    def injectivity_radius(self, p):
        return math.inf

    def _frame_candidates(self, p):
        out = []
        for i in range(self.n):
            for j in range(i, self.n):
                e = np.zeros((self.n, self.n))
                if i == j:
                    e[i, i] = 1.0
                else:
                    e[i, j] = e[j, i] = 1.0 / math.sqrt(2.0)
                out.append(e)
        return out

    def is_point(self, p, tol=MEMBERSHIP_TOL):
        if np.shape(p) != self.point_shape or not np.all(np.isfinite(p)):
            return False
        if np.max(np.abs(p - p.T)) > _tol(tol, np.max(np.abs(p))):
            return False
        return bool(np.linalg.eigvalsh(_sym(p)).min() > 0.0)

    def is_tangent(self, p, v, tol=MEMBERSHIP_TOL):
        if not np.all(np.isfinite(v)):
            return False
        return bool(np.max(np.abs(v - v.T)) <= _tol(tol, np.max(np.abs(v))))

    def random_point(self, rng):
        a = rng.standard_normal((self.n, self.n))
        return _eig_fn(0.5 * (a + a.T) / math.sqrt(self.n), np.exp)

    def dlog(self, p, q, v):
        s, si = self._sqrt_and_invsqrt(p)
        mu, u = np.linalg.eigh(_sym(si @ q @ si))
        lam = np.log(mu)
        w_hat = u.T @ (si @ v @ si) @ u
        scale = _half_coth(lam[:, None] - lam[None, :])
        return _sym(s @ u @ (-scale * w_hat) @ u.T @ s)


_KINDS = {
    "euclidean": Euclidean,
    "sphere": Sphere,
    "spd": SPD,
    "hyperboloid": Hyperboloid,
}


def make_manifold(kind, dim):
    """Build a closed-form kernel.

    ``dim`` is the ambient size for ``sphere`` (``("sphere", 3)`` is S^2), the
    matrix size for ``spd`` and the intrinsic dimension otherwise.
    """
    try:
        cls = _KINDS[kind]
    except KeyError:
        raise ValueError(f"unsupported manifold kind {kind!r}; expected one of {sorted(_KINDS)}") from None
    if not isinstance(dim, (int, np.integer)) or isinstance(dim, bool):
        raise ValueError(f"dimension must be an integer, got {dim!r}")
    m = cls(int(dim))
    if m.ambient_dim > MAX_AMBIENT:
        raise ValueError(f"ambient dimension {m.ambient_dim} exceeds {MAX_AMBIENT}")
    return m
