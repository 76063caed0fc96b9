"""Metric families: null-block metrics, the (x, y, z, xbar) family, Walker
metrics and their special cases, plus the pullback check for affine maps.

Coordinate orders (0-based chart indices):

* ``build_def11``: x_1..x_k, y_1..y_l, xbar_1..xbar_k
* ``build_thm13``: (x, y, z, xbar)
* Walker metrics: (x_1, x_2, x_3, x_4) -> indices 0..3, so the textbook
  ``x_3 x_4`` is written ``x2*x3`` in expression strings.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import linalg
from .curvature import DomainCondition, MetricChart
from .errors import ConfigError, CurvlabError, DegenerateMetricError, EvaluationError
from .expr import Coord, Param, ScalarExpr, as_expr, coordinates_used, eval_jet, parse_expr

__all__ = [
    "build_def11", "build_thm13", "build_walker", "build_thm14", "make_thm14_case2",
    "build_thm19", "Thm14Classification", "pullback_residual", "thm13_isometry",
    "thm13_isometry_between", "harmonicity_residual", "chart_from_config",
]


def _expr(value, dim, params):
    if isinstance(value, str):
        return parse_expr(value, dim, params)
    return as_expr(value)


def build_def11(k: int, l: int, C, psi, bindings: Mapping[str, float] | None = None,
                name: str = "def11") -> MetricChart:
    """g(dx_i, dx_j) = -2 psi_ij(y), g(dy_a, dy_b) = C_ab, g(dx_i, dxbar_i) = 1.

    ``psi`` is a k x k array of expressions (or strings) in the y coordinates
    ``x{k}..x{k+l-1}``; only the upper triangle is read, a lower triangle that
    disagrees is rejected.
    """
    if k < 1 or l < 1:
        raise ValueError("k and l must be positive")
    bindings = dict(bindings or {})
    C = np.asarray(C, dtype=float)
    if C.shape != (l, l) or np.max(np.abs(C - C.T), initial=0) > 0:
        raise ValueError("C must be a symmetric l x l matrix")
    try:
        linalg.invert(C)
    except DegenerateMetricError:
        raise DegenerateMetricError("C is degenerate") from None
    m = 2 * k + l
    y_range = set(range(k, k + l))
    comps = {}
    for i in range(k):
        for j in range(i, k):
            e = _expr(psi[i][j], m, bindings)
            if j != i and psi[j][i] is not None:
                other = _expr(psi[j][i], m, bindings)
                if other != e:
                    raise ValueError(f"psi is not symmetric at ({i}, {j})")
            bad = coordinates_used(e) - y_range
            if bad:
                raise ValueError(f"psi[{i}][{j}] depends on non-y coordinate x{min(bad)}")
            comps[(i, j)] = -2 * e
        comps[(i, k + l + i)] = 1.0
    for a in range(l):
        for b in range(a, l):
            if C[a, b] != 0:
                comps[(k + a, k + b)] = float(C[a, b])
    return MetricChart(m, comps, bindings, name=name)


def harmonicity_residual(k: int, l: int, C, psi, point, bindings: Mapping[str, float] | None = None) -> np.ndarray:
    """Matrix C^{ab} d_{y_a} d_{y_b} psi_ij at a chart point of ``build_def11(k, l, C, psi)``.

    Read directly from the psi expressions, not from the chart.
    """
    bindings = dict(bindings or {})
    Cinv = linalg.invert(np.asarray(C, dtype=float))
    m = 2 * k + l
    out = np.zeros((k, k))
    for i in range(k):
        for j in range(i, k):
            jet = eval_jet(_expr(psi[i][j], m, bindings), point, bindings)
            out[i, j] = out[j, i] = float(np.sum(Cinv * jet.hessian[k:k + l, k:k + l]))
    return out


def build_thm13(phi, bindings: Mapping[str, float] | None = None, margin: float = 1e-12,
                box=None) -> MetricChart:
    """Coordinates (x, y, z, xbar); g(dx, dxbar) = g(dy, dy) = g(dz, dz) = 1, g(dx, dz) = 2 phi(y).

    ``phi`` may only use the coordinate ``x1`` (= y).  Points with
    ``|phi''(y)| <= margin`` are rejected.
    """
    bindings = dict(bindings or {})
    phi = _expr(phi, 4, bindings)
    if coordinates_used(phi) - {1}:
        raise ValueError("phi may depend on the y coordinate (x1) only")
    comps = {(0, 3): 1.0, (1, 1): 1.0, (2, 2): 1.0, (0, 2): 2 * phi}
    dom = (DomainCondition(phi, (1, 1), margin, "phi''(y) != 0"),)
    return MetricChart(4, comps, bindings, dom, name="thm13", box=box)


def build_walker(g33, g34, g44, bindings: Mapping[str, float] | None = None,
                 domain: Sequence[DomainCondition] = (), name: str = "walker", box=None) -> MetricChart:
    """g(dx1, dx3) = g(dx2, dx4) = 1 plus the free entries g33, g34, g44."""
    bindings = dict(bindings or {})
    comps = {(0, 2): 1.0, (1, 3): 1.0}
    for key, val in (((2, 2), g33), ((2, 3), g34), ((3, 3), g44)):
        e = _expr(val, 4, bindings)
        comps[key] = e
    return MetricChart(4, comps, bindings, tuple(domain), name=name, box=box)


@dataclass(frozen=True)
class Thm14Classification:
    closed: bool
    closed_residual: float
    case2: bool


def _closedness(P, Q, bindings, grid, tol):
    worst, ref = 0.0, 0.0
    for u in grid:
        for v in grid:
            p = [0.0, 0.0, u, v]
            try:
                dp = eval_jet(P, p, bindings).partial(2)
                dq = eval_jet(Q, p, bindings).partial(3)
            except EvaluationError:
                continue
            worst = max(worst, abs(dp - dq))
            ref = max(ref, abs(dp), abs(dq))
    residual = float(worst / (ref + 1))
    return bool(residual <= tol), residual


def build_thm14(P, Q, S, bindings: Mapping[str, float] | None = None,
                domain: Sequence[DomainCondition] = (), tol: float = 1e-9,
                grid: Sequence[float] = tuple(np.linspace(-1, 1, 9)), box=None,
                _case2: bool = False):
    """Walker metric with g33 = g44 = 0 and g34 = x1 P + x2 Q + S (textbook indices).

    P, Q, S may depend on the chart coordinates x2, x3 only.  Returns
    ``(chart, classification)``; ``classification.closed`` samples
    ``dP/dx3 - dQ/dx4`` (textbook indices) on ``grid x grid``.
    """
    bindings = dict(bindings or {})
    P, Q, S = (_expr(v, 4, bindings) for v in (P, Q, S))
    for label, e in (("P", P), ("Q", Q), ("S", S)):
        if coordinates_used(e) - {2, 3}:
            raise ValueError(f"{label} may depend on x2 and x3 only")
    g34 = Coord(0) * P + Coord(1) * Q + S
    chart = build_walker(0.0, g34, 0.0, bindings, domain,
                         name="thm14case2" if _case2 else "thm14", box=box)
    closed, residual = _closedness(P, Q, bindings, grid, tol)
    return chart, Thm14Classification(closed, residual, _case2)


def make_thm14_case2(a: float, b: float, c: float, S=0.0, coefficient: float = -2.0,
                     margin: float = 0.05, bindings=None, box=None):
    """Walker metric with P = k c / L, Q = k b / L, L = a + b x3 + c x4 (textbook indices).

    With the metric normalisation used here (g(dx1, dx3) = 1) the Ricci
    operator vanishes exactly for ``coefficient = -2``; ``coefficient = 1``
    reproduces the unnormalised formula, which is Jacobi-Videv but not
    Einstein.  Points with ``|L| <= margin`` are rejected.
    """
    if a == 0 and b == 0 and c == 0:
        raise ValueError("(a, b, c) must not all vanish")
    L = a + b * Coord(2) + c * Coord(3)
    P = (coefficient * c) / L
    Q = (coefficient * b) / L
    dom = (DomainCondition(L, (), margin, "a + b x3 + c x4 != 0"),)
    return build_thm14(P, Q, S, bindings, dom, box=box, _case2=True)


def build_thm19(s: float) -> MetricChart:
    """g33 = s x1 x2, g34 = s (x2^2 - x1^2) / 2, g44 = -s x1 x2 (textbook indices)."""
    x1, x2 = Coord(0), Coord(1)
    sp = Param("s")
    return build_walker(sp * x1 * x2, sp * (x2 ** 2 - x1 ** 2) / 2, -sp * x1 * x2,
                        {"s": float(s)}, name="thm19")


# --------------------------------------------------------------------------
# Isometries
# --------------------------------------------------------------------------

def pullback_residual(chart: MetricChart, T, points) -> float:
    """max over points of |dT^t g(T p) dT - g(p)|_max for the affine map p -> M p + t."""
    M, t = T
    M = np.asarray(M, dtype=float)
    t = np.asarray(t, dtype=float)
    try:
        linalg.invert(M)
    except DegenerateMetricError:
        raise CurvlabError("affine map is singular") from None
    worst = 0.0
    for p in points:
        p = np.asarray(p, dtype=float)
        diff = M.T @ chart.metric_at(M @ p + t) @ M - chart.metric_at(p)
        worst = max(worst, float(np.max(np.abs(diff))))
    return worst


def thm13_isometry(b: float, shifts, exponent_scale: float = 1.0):
    """Affine map (x, y, z, xbar) -> (e^{-k b a2} x + a1, y + a2, z + a3, e^{k b a2} xbar + a4).

    ``k = exponent_scale``.  For phi = e^{b y} the map is an isometry when
    ``k = 1``; ``k = 2`` is the variant that does not preserve the metric.
    """
    a1, a2, a3, a4 = map(float, shifts)
    lam = np.exp(-exponent_scale * b * a2)
    M = np.diag([lam, 1.0, 1.0, 1.0 / lam])
    return M, np.array([a1, a2, a3, a4])


def thm13_isometry_between(b: float, p, q):
    """The isometry of the e^{b y} metric taking ``p`` to ``q``."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    a2 = q[1] - p[1]
    lam = np.exp(-b * a2)
    shifts = (q[0] - lam * p[0], a2, q[2] - p[2], q[3] - p[3] / lam)
    return thm13_isometry(b, shifts)


# --------------------------------------------------------------------------
# Config documents
# --------------------------------------------------------------------------

FAMILIES = ("def11", "thm13", "walker", "thm14", "thm14case2", "thm19")


def chart_from_config(doc: dict):
    """Build a chart from a family config document.

    Returns ``(chart, info)`` where ``info`` holds family-specific data
    (classification for thm14, phi for thm13, ...).
    """
    try:
        family = doc["family"]
    except (KeyError, TypeError):
        raise ConfigError("config needs a 'family' field") from None
    params = {str(k): float(v) for k, v in (doc.get("params") or {}).items()}
    try:
        if family == "def11":
            k, l = int(doc["k"]), int(doc["l"])
            chart = build_def11(k, l, doc["C"], doc["psi"], params)
            return chart, {"k": k, "l": l, "C": np.asarray(doc["C"], dtype=float)}
        if family == "thm13":
            chart = build_thm13(doc["phi"], params, box=doc.get("box"))
            return chart, {"phi_expr": parse_expr(doc["phi"], 4, params)}
        if family == "walker":
            return build_walker(doc.get("g33", "0"), doc.get("g34", "0"), doc.get("g44", "0"), params), {}
        if family == "thm14":
            chart, cls = build_thm14(doc.get("P", "0"), doc.get("Q", "0"), doc.get("S", "0"), params,
                                     box=doc.get("box"))
            return chart, {"classification": cls}
        if family == "thm14case2":
            chart, cls = make_thm14_case2(float(doc["a"]), float(doc["b"]), float(doc["c"]),
                                          _expr(doc.get("S", "0"), 4, params),
                                          float(doc.get("coefficient", -2.0)), bindings=params,
                                          box=doc.get("box"))
            return chart, {"classification": cls}
        if family == "thm19":
            s = float(doc["s"])
            return build_thm19(s), {"s": s}
    except KeyError as exc:
        raise ConfigError(f"{family} config is missing field {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {family} config: {exc}") from None
    raise ConfigError(f"unknown family {family!r}; expected one of {', '.join(FAMILIES)}")
