"""Levi-Civita connection, Riemann tensor, its covariant derivative and the
Jacobi / Ricci operators of a coordinate-chart metric.

Conventions (coordinate frames, summation over repeated indices)::

    Gamma_first[i, j, k]  = g(nabla_{d_i} d_j, d_k)
    Gamma[i, j, l]        = Gamma_{ij}^l
    R_op[i, j, k, l]      : R(d_i, d_j) d_k = R_op[i, j, k, l] d_l,
                            R(x, y) = nabla_x nabla_y - nabla_y nabla_x - nabla_[x,y]
    R_lower[i, j, k, l]   = g(R(d_i, d_j) d_k, d_l)
    nabla_R[a, i, j, k, l] = (nabla_a R)_{ijkl}

With these conventions the (x, y, z, xbar) family metric ``g(dx, dz) = 2 phi(y)``
gives ``R(dx, dy, dy, dx) = phi'^2``.

Operator matrices act on column vectors of coordinate components: entry
``[l, c]`` is the ``d_l`` component of the image of ``d_c``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from scipy.stats import qmc

from . import linalg
from .errors import DomainError
from .expr import Const, ScalarExpr, as_expr, coordinates_used, eval_jet

__all__ = [
    "DomainCondition", "MetricChart", "CurvatureData", "curvature_at",
    "jacobi_op", "jacobi_polarized", "curvature_operator", "sample_points",
    "invariant_residuals",
]


@dataclass(frozen=True)
class DomainCondition:
    """Requires ``|d^k expr / dx_partials| > margin`` at admissible points."""

    expr: ScalarExpr
    partials: tuple[int, ...] = ()
    margin: float = 1e-12
    label: str = ""

    def value(self, point, bindings):
        return eval_jet(self.expr, point, bindings).partial(*self.partials)

    def holds(self, point, bindings):
        return abs(self.value(point, bindings)) > self.margin


@dataclass(frozen=True)
class MetricChart:
    """A metric given by expressions ``g[i][j]`` on an open subset of R^m.

    ``components`` maps index pairs ``(i, j)`` with ``i <= j`` to expressions;
    missing pairs are zero.  The symmetric matrix is assembled on demand.
    """

    dim: int
    components: Mapping[tuple[int, int], ScalarExpr]
    bindings: Mapping[str, float] = field(default_factory=dict)
    domain: tuple[DomainCondition, ...] = ()
    name: str = ""
    box: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        comps = {}
        for (i, j), e in dict(self.components).items():
            if not (0 <= i < self.dim and 0 <= j < self.dim):
                raise ValueError(f"component ({i}, {j}) outside a {self.dim}-dimensional chart")
            key = (min(i, j), max(i, j))
            if key in comps:
                raise ValueError(f"component {key} given twice")
            e = as_expr(e)
            bad = [c for c in coordinates_used(e) if c >= self.dim]
            if bad:
                raise ValueError(f"component {key} uses coordinate x{bad[0]} >= dim {self.dim}")
            comps[key] = e
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "bindings", dict(self.bindings))
        object.__setattr__(self, "domain", tuple(self.domain))
        if self.box is not None:
            box = tuple((float(lo), float(hi)) for lo, hi in self.box)
            if len(box) != self.dim or any(lo >= hi for lo, hi in box):
                raise ValueError(f"box must give {self.dim} intervals (low < high)")
            object.__setattr__(self, "box", box)

    def expr(self, i, j) -> ScalarExpr:
        return self.components.get((min(i, j), max(i, j)), Const(0.0))

    def with_bindings(self, **values):
        return MetricChart(self.dim, self.components, {**self.bindings, **values}, self.domain,
                           self.name, self.box)

    def admits(self, point) -> bool:
        return all(c.holds(point, self.bindings) for c in self.domain)

    def check_domain(self, point):
        for c in self.domain:
            if not c.holds(point, self.bindings):
                label = c.label or str(c.expr)
                raise DomainError(f"domain condition {label!r} fails at {list(map(float, point))}")

    def metric_at(self, point) -> np.ndarray:
        point = np.asarray(point, dtype=float)
        g = np.zeros((self.dim, self.dim))
        for (i, j), e in self.components.items():
            v = eval_jet(e, point, self.bindings).value
            g[i, j] = g[j, i] = v
        return g

    def metric_jets(self, point):
        """Derivatives of g up to order 3, as dense arrays indexed [derivs..., i, j]."""
        m = self.dim
        point = np.asarray(point, dtype=float)
        g0 = np.zeros((m, m))
        g1 = np.zeros((m, m, m))
        g2 = np.zeros((m, m, m, m))
        g3 = np.zeros((m, m, m, m, m))
        for (i, j), e in self.components.items():
            jet = eval_jet(e, point, self.bindings)
            vals = (jet.value, jet.gradient, jet.hessian, jet.third)
            for arr, v in zip((g0, g1, g2, g3), vals):
                arr[..., i, j] = v
                arr[..., j, i] = v
        return g0, g1, g2, g3


@dataclass(frozen=True, eq=False)
class CurvatureData:
    """Pointwise geometric data of a chart; see the module docstring for index conventions."""

    point: np.ndarray
    g: np.ndarray
    g_inv: np.ndarray
    dg: np.ndarray
    gamma_first: np.ndarray
    gamma: np.ndarray
    R_op: np.ndarray
    R_lower: np.ndarray
    nabla_R: np.ndarray | None
    ricci_form: np.ndarray
    ricci_op: np.ndarray

    @property
    def dim(self):
        return self.g.shape[0]

    @property
    def scale(self):
        return float(np.max(np.abs(self.R_lower), initial=0.0)) + 1.0


def curvature_at(chart: MetricChart, point: Sequence[float], nabla_r: bool = True,
                 inv_tol: float = 1e-12) -> CurvatureData:
    """Connection and curvature of ``chart`` at ``point``.

    ``nabla_r=False`` skips the covariant derivative of R (which needs the
    third derivatives of g).
    """
    point = np.asarray(point, dtype=float)
    if point.shape != (chart.dim,):
        raise ValueError(f"expected a point of dimension {chart.dim}, got shape {point.shape}")
    chart.check_domain(point)
    G0, G1, G2, G3 = chart.metric_jets(point)
    H0 = linalg.invert(G0, inv_tol)

    # derivatives of the inverse metric: d(G H) = 0
    H1 = -np.einsum("lm,amn,nk->alk", H0, G1, H0)
    H2 = -np.einsum("lm,abmn,nk->ablk", H0, G2, H0)
    H2 -= np.einsum("lm,amn,bnk->ablk", H0, G1, H1)
    H2 -= np.einsum("lm,bmn,ank->ablk", H0, G1, H1)

    # Gamma_first[i,j,k] = 1/2 (d_i g_jk + d_j g_ik - d_k g_ij), with its derivatives
    def first_kind(D):  # D[..., c, i, j] = d_c g_ij with leading derivative axes
        return 0.5 * (D + np.swapaxes(D, -3, -2) - np.moveaxis(D, -3, -1))

    # D[..., c, i, j] with c the connection derivative: reorder so index c is third from last
    GF0 = first_kind(G1)
    GF1 = first_kind(G2)  # [a, i, j, k]: d_a Gamma_first_ijk (a is outermost)
    GF2 = first_kind(G3) if chart.dim else None

    # second kind Gamma[i,j,l] = H[l,k] GF[i,j,k]
    Gm0 = np.einsum("lk,ijk->ijl", H0, GF0)
    Gm1 = np.einsum("alk,ijk->aijl", H1, GF0) + np.einsum("lk,aijk->aijl", H0, GF1)

    # R_op[i,j,k,l] = d_i Gamma_jk^l - d_j Gamma_ik^l + Gamma_im^l Gamma_jk^m - Gamma_jm^l Gamma_ik^m
    quad = np.einsum("iml,jkm->ijkl", Gm0, Gm0)
    R_op = Gm1 - np.swapaxes(Gm1, 0, 1) + quad - np.swapaxes(quad, 0, 1)
    R_lower = np.einsum("ijkn,nl->ijkl", R_op, G0)

    nabla_R = None
    if nabla_r:
        Gm2 = (np.einsum("ablk,ijk->abijl", H2, GF0)
               + np.einsum("alk,bijk->abijl", H1, GF1)
               + np.einsum("blk,aijk->abijl", H1, GF1)
               + np.einsum("lk,abijk->abijl", H0, GF2))
        dquad = np.einsum("aiml,jkm->aijkl", Gm1, Gm0) + np.einsum("iml,ajkm->aijkl", Gm0, Gm1)
        dR_op = (np.einsum("aijkl->aijkl", Gm2) - np.swapaxes(Gm2, 1, 2)
                 + dquad - np.swapaxes(dquad, 1, 2))
        dR_lower = np.einsum("aijkn,nl->aijkl", dR_op, G0) + np.einsum("ijkn,anl->aijkl", R_op, G1)
        nabla_R = (dR_lower
                   - np.einsum("aim,mjkl->aijkl", Gm0, R_lower)
                   - np.einsum("ajm,imkl->aijkl", Gm0, R_lower)
                   - np.einsum("akm,ijml->aijkl", Gm0, R_lower)
                   - np.einsum("alm,ijkm->aijkl", Gm0, R_lower))

    J = _polarized_all(R_op)
    ricci_form = np.einsum("ijcc->ij", J)
    ricci_op = H0 @ ricci_form
    return CurvatureData(point, G0, H0, G1, GF0, Gm0, R_op, R_lower, nabla_R, ricci_form, ricci_op)


def _polarized_all(R_op):
    """J[i, j, l, c]: matrix of J(d_i, d_j), c -> 1/2 (R(d_c, d_i) d_j + R(d_c, d_j) d_i)."""
    return 0.5 * (np.einsum("cijl->ijlc", R_op) + np.einsum("cjil->ijlc", R_op))


def jacobi_op(cd: CurvatureData, x) -> np.ndarray:
    """Matrix of the Jacobi operator y -> R(y, x) x."""
    x = np.asarray(x, dtype=float)
    return np.einsum("cijl,i,j->lc", cd.R_op, x, x)


def jacobi_polarized(cd: CurvatureData, i: int, j: int) -> np.ndarray:
    """Matrix of J(d_i, d_j): z -> 1/2 (R(z, d_i) d_j + R(z, d_j) d_i)."""
    return 0.5 * (cd.R_op[:, i, j, :].T + cd.R_op[:, j, i, :].T)


def curvature_operator(cd: CurvatureData, i: int, j: int) -> np.ndarray:
    """Matrix of z -> R(d_i, d_j) z."""
    return cd.R_op[i, j].T.copy()


def invariant_residuals(cd: CurvatureData) -> dict[str, float]:
    """Scale-normalised residuals of the identities every curvature tensor satisfies."""
    R = cd.R_lower
    s = cd.scale
    res = {
        "antisymmetry": np.max(np.abs(R + R.transpose(1, 0, 2, 3)), initial=0) / s,
        "pair_symmetry": np.max(np.abs(R - R.transpose(2, 3, 0, 1)), initial=0) / s,
        "first_bianchi": np.max(np.abs(R + R.transpose(1, 2, 0, 3) + R.transpose(2, 0, 1, 3)), initial=0) / s,
        "metric_compatibility": np.max(np.abs(
            cd.dg - cd.gamma_first - cd.gamma_first.transpose(0, 2, 1)), initial=0)
            / (np.max(np.abs(cd.dg), initial=0) + 1),
        "ricci_symmetry": np.max(np.abs(cd.ricci_form - cd.ricci_form.T), initial=0) / s,
        "ricci_self_adjoint": np.max(np.abs(cd.g @ cd.ricci_op - (cd.g @ cd.ricci_op).T), initial=0) / s,
        "ricci_contraction": np.max(np.abs(
            cd.ricci_form - np.einsum("kijk->ij", cd.R_op)), initial=0) / s,
    }
    if cd.nabla_R is not None:
        N = cd.nabla_R
        sN = float(np.max(np.abs(N), initial=0)) + 1
        res["second_bianchi"] = np.max(np.abs(
            N + N.transpose(1, 2, 0, 3, 4) + N.transpose(2, 0, 1, 3, 4)), initial=0) / sN
    return {k: float(v) for k, v in res.items()}


def sample_points(chart: MetricChart, n: int, seed: int = 0, box=None,
                  user_points: Sequence[Sequence[float]] = (), max_draws: int = 100_000) -> list[np.ndarray]:
    """Deterministic admissible points: user points first, then a scrambled Halton sequence.

    ``box`` is a sequence of ``(low, high)`` per coordinate (default: the
    chart's own box, else ``[-1, 1]``).
    Candidates failing the chart's domain predicate are rejected.
    """
    out = []
    for p in user_points:
        p = np.asarray(p, dtype=float)
        if chart.admits(p):
            out.append(p)
    if len(out) >= n:
        return out[:n]
    if box is None:
        box = chart.box if chart.box is not None else [(-1.0, 1.0)] * chart.dim
    box = np.asarray(box, dtype=float)
    sampler = qmc.Halton(d=chart.dim, scramble=True, seed=seed)
    drawn = 0
    while len(out) < n:
        batch = sampler.random(32)
        drawn += 32
        for u in batch:
            p = box[:, 0] + u * (box[:, 1] - box[:, 0])
            if chart.admits(p):
                out.append(p)
                if len(out) == n:
                    break
        if drawn > max_draws:
            raise DomainError(f"could not find {n} admissible points after {drawn} draws")
    return out
