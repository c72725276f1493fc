"""Benchmark problems: a manifold, a vector field, a known zero and starts.

Problems are described by plain dicts (the JSON problem-file schema)::

    {"name": ..., "manifold": {"kind": ..., "dim": ...},
     "field": {"kind": ..., <params>}, "known_solution": [...],
     "starts": [{"point": [...], "expect": "quadratic"}], "notes": ...}

Built-in problems are written in the same schema and go through the same
builder, so file problems and registry problems behave identically.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .analysis import holder_field
from .chart import ChartManifold, stereo_pullback, stereo_to_sphere, stereographic_sphere_chart
from .core import PIVOT_TOL, lu_checked
from .errors import SingularOperatorError
from .manifolds import SPD, Euclidean, Hyperboloid, Sphere, make_manifold
from .vectorfield import VectorField

MAX_ANCHORS = 64
EIGENGAP_MIN = 1e-6
SOLUTION_TOL = 1e-10


@dataclass
class StartPoint:
    point: np.ndarray
    expect: Optional[str] = None


@dataclass
class ProblemSpec:
    name: str
    manifold: object
    field: VectorField
    known_solution: Optional[np.ndarray] = None
    starts: List[StartPoint] = field(default_factory=list)
    notes: str = ""
    smooth: bool = True
    description: dict = field(default_factory=dict, repr=False)


# -- manifolds ---------------------------------------------------------------


def _build_manifold(desc):
    kind = desc["kind"]
    dim = desc["dim"]
    if kind == "stereographic-sphere":
        return ChartManifold(
            stereographic_sphere_chart(int(dim), desc.get("max_radius", 4.0)),
            injectivity_radius=desc.get("injectivity_radius", 1.5),
        )
    return make_manifold(kind, dim)


def _as_point(m, raw):
    arr = np.asarray(raw, dtype=float).reshape(m.point_shape)
    p = m.project(arr)
    m.check_point(p)
    return p


# -- fields ------------------------------------------------------------------


def _symmetric_matrix(params, n):
    if "diag" in params:
        a = np.diag(np.asarray(params["diag"], dtype=float))
    else:
        a = np.asarray(params["matrix"], dtype=float)
    if a.shape != (n, n):
        raise ValueError(f"matrix must be {n}x{n}, got {a.shape}")
    if np.max(np.abs(a - a.T)) > 1e-12 * max(1.0, np.max(np.abs(a))):
        raise ValueError("rayleigh matrix must be symmetric")
    return 0.5 * (a + a.T)


def _rayleigh_field(m, params, solution):
    if isinstance(m, ChartManifold):
        n = m.dim + 1
    elif isinstance(m, Sphere):
        n = m.n
    else:
        raise ValueError("rayleigh field needs a sphere or stereographic-sphere manifold")
    a = _symmetric_matrix(params, n)
    eig = np.linalg.eigvalsh(a)
    if solution is None:
        target = eig[-1]
    else:
        amb = stereo_to_sphere(solution) if isinstance(m, ChartManifold) else solution
        target = float(amb @ a @ amb)
    gaps = np.abs(eig - target)
    gaps = np.delete(gaps, int(np.argmin(gaps)))
    if gaps.size and gaps.min() <= EIGENGAP_MIN:
        raise ValueError(f"eigengap {gaps.min():.3g} too small; derivative nearly singular at the solution")

    if isinstance(m, ChartManifold):

        def fn(x):
            s = stereo_to_sphere(x)
            return stereo_pullback(x, 2.0 * (a @ s - (s @ a @ s) * s))

        return VectorField(m, fn, None, m.spec.domain, name="rayleigh-chart")

    def fn(p):
        return 2.0 * (a @ p - (p @ a @ p) * p)

    def derivative(p, v):
        av = a @ v
        return 2.0 * (av - (p @ av) * p - (p @ a @ p) * v)

    return VectorField(m, fn, derivative, name="rayleigh")


def _karcher_field(m, params):
    anchors = [_as_point(m, q) for q in params["anchors"]]
    if not 1 <= len(anchors) <= MAX_ANCHORS:
        raise ValueError(f"karcher field needs between 1 and {MAX_ANCHORS} anchors")
    if not hasattr(m, "dlog"):
        raise ValueError(f"karcher field not available on {m.name}")

    def fn(p):
        return sum(m.log(p, q) for q in anchors)

    def derivative(p, v):
        return sum(m.dlog(p, q, v) for q in anchors)

    domain = None
    if math.isfinite(m.injectivity_radius(anchors[0])):
        domain = lambda p: all(m.distance(p, q) < m.injectivity_radius(q) - 1e-6 for q in anchors)  # noqa: E731
    return VectorField(m, fn, derivative, domain, name="karcher")


def _quadratic_root_field(m, params):
    if not isinstance(m, Euclidean):
        raise ValueError("quadratic-root field lives on Euclidean space")
    c = np.broadcast_to(np.asarray(params.get("c", 2.0), dtype=float), m.point_shape).copy()
    return VectorField(m, lambda x: x * x - c, lambda x, v: 2.0 * x * v, name="quadratic-root")


def _linear_field(m, params):
    if not isinstance(m, Euclidean):
        raise ValueError("linear field lives on Euclidean space")
    a = np.asarray(params["matrix"], dtype=float).reshape(m.n, m.n)
    b = np.asarray(params.get("offset", np.zeros(m.n)), dtype=float)
    return VectorField(m, lambda x: a @ x - b, lambda x, v: a @ v, name="linear")


def _build_field(m, desc, solution):
    kind = desc["kind"]
    if kind == "rayleigh":
        return _rayleigh_field(m, desc, solution)
    if kind == "karcher":
        return _karcher_field(m, desc)
    if kind == "quadratic-root":
        return _quadratic_root_field(m, desc)
    if kind == "linear":
        return _linear_field(m, desc)
    if kind == "holder":
        if solution is None:
            raise ValueError("holder field needs known_solution")
        return holder_field(m, solution, float(desc["alpha"]), desc.get("direction"))
    raise ValueError(f"unknown field kind {kind!r}")


def build_problem(desc):
    """Build and validate a :class:`ProblemSpec` from its dict description."""
    m = _build_manifold(desc["manifold"])
    solution = None
    if desc.get("known_solution") is not None:
        solution = _as_point(m, desc["known_solution"])
    fld_desc = desc["field"]
    fld = _build_field(m, fld_desc, solution)
    starts = [StartPoint(_as_point(m, s["point"]), s.get("expect")) for s in desc.get("starts", [])]
    smooth = not (fld_desc["kind"] == "holder" and float(fld_desc["alpha"]) < 1.0)
    spec = ProblemSpec(desc["name"], m, fld, solution, starts, desc.get("notes", ""), smooth, desc)
    if solution is not None:
        check_solution(spec)
    return spec


def check_solution(spec, tol=SOLUTION_TOL):
    """Raise ``ValueError`` unless ``known_solution`` is a nondegenerate zero."""
    m, p = spec.manifold, spec.known_solution
    res = m.norm(p, spec.field(p))
    if res > tol:
        raise ValueError(f"{spec.name}: ||X(known_solution)|| = {res:.3e} exceeds {tol:g}")
    try:
        lu_checked(spec.field.covariant_derivative(p).matrix, PIVOT_TOL)
    except SingularOperatorError as exc:
        raise ValueError(f"{spec.name}: covariant derivative singular at the known solution") from exc


# -- built-in registry -------------------------------------------------------


def _unit(v):
    v = np.asarray(v, dtype=float)
    return v / np.linalg.norm(v)


def _reflected_pairs(m, center, tangents):
    """Anchor pairs exp_c(+-t) whose Karcher field vanishes at ``center``."""
    out = []
    for t in tangents:
        out.append(m.exp(center, t))
        out.append(m.exp(center, -t))
    return out


def _builtin_descriptions():
    descs = []
    descs.append(
        {
            "name": "euclid-sqrt2",
            "manifold": {"kind": "euclidean", "dim": 1},
            "field": {"kind": "quadratic-root", "c": 2.0},
            "known_solution": [math.sqrt(2.0)],
            "starts": [{"point": [1.0], "expect": "quadratic"}],
            "notes": "scalar x^2 - 2; classical Newton",
        }
    )

    descs.append(
        {
            "name": "rayleigh-s2",
            "manifold": {"kind": "sphere", "dim": 3},
            "field": {"kind": "rayleigh", "diag": [1.0, 2.0, 3.0]},
            "known_solution": [0.0, 0.0, 1.0],
            "starts": [{"point": _unit([0.3, 0.3, 1.0]).tolist(), "expect": "quadratic"}],
            "notes": "gradient of p^T A p on S^2; zero at the dominant eigenvector",
        }
    )

    diag9 = np.arange(1.0, 11.0)
    start9 = np.full(10, 0.08)
    start9[-1] = 1.0
    descs.append(
        {
            "name": "rayleigh-s9",
            "manifold": {"kind": "sphere", "dim": 10},
            "field": {"kind": "rayleigh", "diag": diag9.tolist()},
            "known_solution": np.eye(10)[-1].tolist(),
            "starts": [{"point": _unit(start9).tolist(), "expect": "quadratic"}],
            "notes": "Rayleigh field on S^9 with A = diag(1..10)",
        }
    )

    spd = SPD(2)
    center = np.array([[2.0, 0.5], [0.5, 1.0]])
    tang = [np.array([[0.6, 0.3], [0.3, -0.2]]), np.array([[-0.1, 0.5], [0.5, 0.4]])]
    descs.append(
        {
            "name": "karcher-spd2",
            "manifold": {"kind": "spd", "dim": 2},
            "field": {"kind": "karcher", "anchors": [a.tolist() for a in _reflected_pairs(spd, center, tang)]},
            "known_solution": center.tolist(),
            "starts": [{"point": [[1.0, 0.0], [0.0, 1.0]], "expect": "quadratic"}],
            "notes": "non-commuting anchors placed in geodesically reflected pairs about the mean",
        }
    )

    descs.append(
        {
            "name": "karcher-spd2-commuting",
            "manifold": {"kind": "spd", "dim": 2},
            "field": {"kind": "karcher", "anchors": [[[1.0, 0.0], [0.0, 4.0]], [[9.0, 0.0], [0.0, 1.0]]]},
            "known_solution": [[3.0, 0.0], [0.0, 2.0]],
            "starts": [{"point": [[1.5, 0.4], [0.4, 1.0]], "expect": "quadratic"}],
            "notes": "two commuting anchors; the mean is their geodesic midpoint diag(3, 2)",
        }
    )

    spd3 = SPD(3)
    c3 = np.array([[1.5, 0.2, 0.0], [0.2, 1.0, 0.3], [0.0, 0.3, 2.0]])
    t3 = [
        np.array([[0.4, 0.1, 0.2], [0.1, -0.3, 0.0], [0.2, 0.0, 0.1]]),
        np.array([[0.0, 0.3, -0.1], [0.3, 0.2, 0.2], [-0.1, 0.2, -0.4]]),
        np.array([[-0.2, 0.0, 0.3], [0.0, 0.1, -0.2], [0.3, -0.2, 0.3]]),
    ]
    descs.append(
        {
            "name": "karcher-spd3",
            "manifold": {"kind": "spd", "dim": 3},
            "field": {"kind": "karcher", "anchors": [a.tolist() for a in _reflected_pairs(spd3, c3, t3)]},
            "known_solution": c3.tolist(),
            "starts": [{"point": np.eye(3).tolist(), "expect": "quadratic"}],
            "notes": "six anchors in SPD(3)",
        }
    )

    hyp = Hyperboloid(2)
    ch = hyp.project([0.0, 0.4, -0.3])
    th = [hyp.project_tangent(ch, np.array([0.0, 0.8, 0.2])), hyp.project_tangent(ch, np.array([0.0, -0.3, 0.9]))]
    descs.append(
        {
            "name": "karcher-h2",
            "manifold": {"kind": "hyperboloid", "dim": 2},
            "field": {"kind": "karcher", "anchors": [a.tolist() for a in _reflected_pairs(hyp, ch, th)]},
            "known_solution": ch.tolist(),
            "starts": [{"point": hyp.project([0.0, -0.6, 0.7]).tolist(), "expect": "quadratic"}],
            "notes": "four anchors on H^2 in reflected pairs about the mean",
        }
    )

    for alpha, tag, expect in [(0.5, "a05", "superlinear"), (0.75, "a075", "superlinear"), (1.0, "a10", "quadratic")]:
        descs.append(
            {
                "name": f"holder-euclid-{tag}",
                "manifold": {"kind": "euclidean", "dim": 1},
                "field": {"kind": "holder", "alpha": alpha},
                "known_solution": [1.0],
                "starts": [{"point": [1.5], "expect": expect}],
                "notes": f"X(x) = (x - 1) + |x - 1|^{1 + alpha:g}; derivative is {alpha:g}-Hoelder at the zero",
            }
        )
        descs.append(
            {
                "name": f"holder-sphere-{tag}",
                "manifold": {"kind": "sphere", "dim": 3},
                "field": {"kind": "holder", "alpha": alpha},
                "known_solution": [0.0, 0.0, 1.0],
                "starts": [{"point": _unit([0.4, 0.2, 1.0]).tolist(), "expect": expect}],
                "notes": "Hoelder test field on S^2 with transported direction",
            }
        )

    descs.append(
        {
            "name": "rayleigh-s2-chart",
            "manifold": {"kind": "stereographic-sphere", "dim": 2},
            "field": {"kind": "rayleigh", "diag": [1.0, 2.0, 3.0]},
            "known_solution": [0.0, 0.0],
            "starts": [{"point": [0.15, 0.15], "expect": "quadratic"}],
            "notes": "Rayleigh field on S^2 in a stereographic chart; geometry by ODE integration",
        }
    )
    return descs


_REGISTRY = None


def builtin_problems():
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = [build_problem(d) for d in _builtin_descriptions()]
    return list(_REGISTRY)


def lookup(name):
    for spec in builtin_problems():
        if spec.name == name:
            return spec
    raise KeyError(name)


def problem_names():
    return [d["name"] for d in _builtin_descriptions()]


def load_problem_file(path):
    """Problems from a JSON file holding one problem object or a list of them."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = [data]
    return [build_problem(d) for d in data]
