"""Finite-difference oracle for the curvature engine.

Everything here is computed in extended precision with :mod:`mpmath`,
straight from metric values: no jets, no derivative formulas for the inverse
metric.  Central differences in double precision would be swamped by
rounding at third order, so the working precision is raised far enough that
truncation error dominates and can be made small by choosing a tiny step.
"""
from __future__ import annotations

from itertools import permutations, product

import mpmath
import numpy as np

from .curvature import MetricChart
from .expr import evaluate

DPS = 60
STEP = "1e-18"
# nested differences of order k lose k * |log10 h| digits to rounding
ORDER_STEPS = {1: "1e-18", 2: "1e-15", 3: "1e-12"}


def _metric(chart: MetricChart, p):
    m = chart.dim
    g = mpmath.zeros(m, m)
    for (i, j), e in chart.components.items():
        v = evaluate(e, p, chart.bindings, lib=mpmath)
        g[i, j] = g[j, i] = mpmath.mpf(v)
    return g


def _shift(p, a, t):
    q = list(p)
    q[a] += t
    return q


def _dmetric(chart, p, h):
    """dg[a][i, j] by central differences."""
    m = chart.dim
    return [(_metric(chart, _shift(p, a, h)) - _metric(chart, _shift(p, a, -h))) / (2 * h)
            for a in range(m)]


def _gamma(chart, p, h):
    """Gamma[i][j][l] = Gamma_ij^l from Koszul's formula."""
    m = chart.dim
    g = _metric(chart, p)
    ginv = g ** -1
    dg = _dmetric(chart, p, h)
    first = [[[(dg[i][j, k] + dg[j][i, k] - dg[k][i, j]) / 2 for k in range(m)]
              for j in range(m)] for i in range(m)]
    return [[[mpmath.fsum(ginv[l, k] * first[i][j][k] for k in range(m)) for l in range(m)]
             for j in range(m)] for i in range(m)], g


def _riemann(chart, p, h):
    """R_lower[i][j][k][l] = g(R(d_i, d_j) d_k, d_l) from differences of Gamma."""
    m = chart.dim
    G, g = _gamma(chart, p, h)
    dG = []
    for a in range(m):
        plus, _ = _gamma(chart, _shift(p, a, h), h)
        minus, _ = _gamma(chart, _shift(p, a, -h), h)
        dG.append([[[(plus[i][j][l] - minus[i][j][l]) / (2 * h) for l in range(m)]
                    for j in range(m)] for i in range(m)])
    R_op = np.empty((m,) * 4, dtype=object)
    for i, j, k, l in product(range(m), repeat=4):
        quad = mpmath.fsum(G[i][q][l] * G[j][k][q] - G[j][q][l] * G[i][k][q] for q in range(m))
        R_op[i, j, k, l] = dG[i][j][k][l] - dG[j][i][k][l] + quad
    R = np.empty((m,) * 4, dtype=object)
    for i, j, k, l in product(range(m), repeat=4):
        R[i, j, k, l] = mpmath.fsum(R_op[i, j, k, n] * g[n, l] for n in range(m))
    return R, G


def fd_metric_derivatives(chart: MetricChart, point, dps: int = DPS):
    """(dg, d2g, d3g) as float arrays indexed [derivs..., i, j], by nested central differences."""
    m = chart.dim
    with mpmath.workdps(dps):
        p = [mpmath.mpf(float(x)) for x in point]

        def diff(f, axes, q, h):
            if not axes:
                return f(q)
            a, rest = axes[0], axes[1:]
            return (diff(f, rest, _shift(q, a, h), h) - diff(f, rest, _shift(q, a, -h), h)) / (2 * h)

        def metric(q):
            return np.array(_metric(chart, q).tolist(), dtype=object)

        out = []
        for order in (1, 2, 3):
            h = mpmath.mpf(ORDER_STEPS[order])
            arr = np.zeros((m,) * order + (m, m))
            for axes in product(range(m), repeat=order):
                if list(axes) != sorted(axes):
                    continue
                val = np.array(diff(metric, axes, p, h), dtype=float)
                for perm in set(permutations(axes)):
                    arr[perm] = val
            out.append(arr)
    return tuple(out)


def fd_riemann(chart: MetricChart, point, dps: int = DPS, step=STEP) -> np.ndarray:
    """Lower-index Riemann tensor from metric values only."""
    with mpmath.workdps(dps):
        p = [mpmath.mpf(float(x)) for x in point]
        R, _ = _riemann(chart, p, mpmath.mpf(step))
        return np.array(R.tolist(), dtype=float).reshape(R.shape)


def fd_nabla_riemann(chart: MetricChart, point, dps: int = 90, step=STEP,
                     outer_step="1e-12") -> np.ndarray:
    """(nabla_a R)_{ijkl}: differences of the oracle R, corrected by the oracle Gamma."""
    m = chart.dim
    with mpmath.workdps(dps):
        h = mpmath.mpf(step)
        H = mpmath.mpf(outer_step)
        p = [mpmath.mpf(float(x)) for x in point]
        R, G = _riemann(chart, p, h)
        out = np.zeros((m,) * 5)
        for a in range(m):
            Rp, _ = _riemann(chart, _shift(p, a, H), h)
            Rm, _ = _riemann(chart, _shift(p, a, -H), h)
            for i, j, k, l in product(range(m), repeat=4):
                v = (Rp[i, j, k, l] - Rm[i, j, k, l]) / (2 * H)
                v -= mpmath.fsum(G[a][i][q] * R[q, j, k, l] + G[a][j][q] * R[i, q, k, l]
                                 + G[a][k][q] * R[i, j, q, l] + G[a][l][q] * R[i, j, k, q]
                                 for q in range(m))
                out[a, i, j, k, l] = float(v)
    return out
