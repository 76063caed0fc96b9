"""Algebraic curvature models (V, <.,.>, A) and constructions on them."""
from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import linalg
from .curvature import MetricChart, curvature_at
from .errors import ModelError, NotEinsteinError

__all__ = [
    "Model", "SymmetryResidual", "validate", "model_at", "canonical_model",
    "random_model", "double_model", "einstein_constant",
]

MODEL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class Model:
    """Inner product ``metric`` (n x n) and 4-tensor ``A`` (n, n, n, n).

    Operator matrices follow the chart convention: entry ``[l, c]`` is the
    ``e_l`` component of the image of ``e_c``.
    """

    metric: np.ndarray
    A: np.ndarray

    def __post_init__(self):
        metric = np.array(self.metric, dtype=float)
        A = np.array(self.A, dtype=float)
        n = metric.shape[0]
        if metric.shape != (n, n) or A.shape != (n,) * 4:
            raise ModelError(f"inconsistent shapes: metric {metric.shape}, A {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ModelError("A has non-finite entries")
        if np.max(np.abs(metric - metric.T), initial=0) > 0:
            raise ModelError("inner product is not symmetric")
        metric.setflags(write=False)
        A.setflags(write=False)
        object.__setattr__(self, "metric", metric)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "_metric_inv", linalg.invert(metric))

    @property
    def n(self):
        return self.metric.shape[0]

    @property
    def metric_inv(self):
        return self._metric_inv

    @property
    def scale(self):
        return float(np.max(np.abs(self.A), initial=0.0)) + 1.0

    @property
    def signature(self):
        return linalg.signature(self.metric)

    def curvature_operators(self):
        """Array ``C[i, j]``: matrix of the curvature operator of (e_i, e_j)."""
        return np.einsum("lw,ijcw->ijlc", self.metric_inv, self.A)

    def jacobi_operators(self):
        """Array ``J[i, j]``: matrix of the polarized Jacobi operator J(e_i, e_j)."""
        lower = 0.5 * (np.einsum("cijw->ijcw", self.A) + np.einsum("cjiw->ijcw", self.A))
        return np.einsum("lw,ijcw->ijlc", self.metric_inv, lower)

    def jacobi(self, x):
        x = np.asarray(x, dtype=float)
        return np.einsum("ijlc,i,j->lc", self.jacobi_operators(), x, x)

    def ricci_form(self):
        return np.einsum("ijcc->ij", self.jacobi_operators())

    def ricci_op(self):
        return self.metric_inv @ self.ricci_form()

    def to_dict(self):
        return {"n": self.n, "metric": self.metric.tolist(), "A": self.A.ravel().tolist()}

    @classmethod
    def from_dict(cls, doc):
        try:
            n = int(doc["n"])
            metric = np.asarray(doc["metric"], dtype=float)
            flat = np.asarray(doc["A"], dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelError(f"malformed model document: {exc}") from exc
        if flat.size != n ** 4:
            raise ModelError(f"A has {flat.size} entries, expected {n ** 4}")
        return cls(metric, flat.reshape((n,) * 4))

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class SymmetryResidual:
    name: str
    residual: float
    witness: tuple[int, ...]
    tol: float

    @property
    def ok(self):
        return self.residual <= self.tol


def validate(A, tol: float = MODEL_TOL) -> list[SymmetryResidual]:
    """Scale-normalised residuals of the three curvature symmetries of ``A``."""
    A = np.asarray(A, dtype=float)
    scale = float(np.max(np.abs(A), initial=0.0)) + 1.0
    checks = {
        "antisymmetry": A + A.transpose(1, 0, 2, 3),
        "pair_symmetry": A - A.transpose(2, 3, 0, 1),
        "first_bianchi": A + A.transpose(1, 2, 0, 3) + A.transpose(2, 0, 1, 3),
    }
    out = []
    for name, diff in checks.items():
        d = np.abs(diff)
        idx = np.unravel_index(np.argmax(d), d.shape) if d.size else ()
        out.append(SymmetryResidual(name, float(d[idx]) / scale if d.size else 0.0,
                                    tuple(int(i) for i in idx), tol))
    return out


def _require_valid(A, tol=MODEL_TOL):
    bad = [r for r in validate(A, tol) if not r.ok]
    if bad:
        r = bad[0]
        raise ModelError(f"tensor violates {r.name} (residual {r.residual:.3e} at {r.witness})")


def model_at(chart: MetricChart, point) -> Model:
    """The curvature tensor of ``chart`` at ``point`` as an algebraic model."""
    cd = curvature_at(chart, point, nabla_r=False)
    return Model(cd.g, cd.R_lower)


def canonical_model(phi, c: float, metric=None) -> Model:
    """A(x, y, z, w) = c (phi(x, w) phi(y, z) - phi(x, z) phi(y, w)).

    ``metric`` defaults to the identity.  With ``phi == metric`` this is the
    constant-curvature model whose Ricci operator is ``c (n - 1) id``.
    """
    phi = np.asarray(phi, dtype=float)
    if np.max(np.abs(phi - phi.T), initial=0) > 0:
        raise ModelError("phi must be symmetric")
    n = phi.shape[0]
    A = c * (np.einsum("il,jk->ijkl", phi, phi) - np.einsum("ik,jl->ijkl", phi, phi))
    return Model(np.eye(n) if metric is None else metric, A)


def random_model(seed: int, n: int, signature: tuple[int, int] | None = None) -> Model:
    """Sum of 1-3 canonical terms with random symmetric phi (entries in [-1, 1]).

    The inner product is ``diag(-1 x p, +1 x q)`` for ``signature=(p, q)``
    (default: positive definite).
    """
    if n > 8:
        raise ValueError("random_model supports n <= 8")
    p, q = signature if signature is not None else (0, n)
    if p + q != n:
        raise ValueError(f"signature {signature} does not match n={n}")
    metric = np.diag([-1.0] * p + [1.0] * q)
    rng = np.random.default_rng(seed)
    A = np.zeros((n,) * 4)
    for _ in range(int(rng.integers(1, 4))):
        b = rng.uniform(-1, 1, size=(n, n))
        phi = np.triu(b) + np.triu(b, 1).T
        A += canonical_model(phi, rng.uniform(-1, 1)).A
    return Model(metric, A)


def einstein_constant(model: Model, tol: float = 1e-8) -> float:
    """s with rho = s id; raises NotEinsteinError otherwise."""
    rho = model.ricci_op()
    s = float(np.trace(rho)) / model.n
    dev = float(np.max(np.abs(rho - s * np.eye(model.n)), initial=0.0))
    if dev > tol * (abs(s) + 1):
        raise NotEinsteinError(f"model is not Einstein (|rho - s id| = {dev:.3e}, s = {s:.6g})")
    return s


def double_model(m0: Model) -> Model:
    """Neutral-signature model on V+ (+) V- built from a Riemannian Einstein model.

    The inner product of ``m0`` must be exactly the identity (orthonormal
    basis).  Basis order of the result: e_1^+, ..., e_n^+, e_1^-, ..., e_n^-.
    Complexify V0, extend A0 complex-multilinearly, identify e^- with
    sqrt(-1) e and take real part of the inner product and imaginary part of
    the tensor: an entry with m minus-slots is Im(i^m) A0, i.e. +A0 for one
    minus, -A0 for three, and zero for an even number.
    """
    n = m0.n
    if not np.array_equal(m0.metric, np.eye(n)):
        if linalg.signature(m0.metric)[0] > 0:
            raise ModelError("doubling requires a positive definite (Riemannian) model")
        raise ModelError("doubling requires the inner product to be the identity (orthonormal basis)")
    _require_valid(m0.A)
    einstein_constant(m0)

    weight = {0: 0.0, 1: 1.0, 2: 0.0, 3: -1.0, 4: 0.0}
    sign = np.zeros((2,) * 4)
    for halves in product((0, 1), repeat=4):
        sign[halves] = weight[sum(halves)]
    # A1[(h1,i),(h2,j),(h3,k),(h4,l)] = sign[h1,h2,h3,h4] * A0[i,j,k,l]
    A1 = np.einsum("abcd,ijkl->aibjckdl", sign, m0.A).reshape((2 * n,) * 4)
    metric = np.diag([1.0] * n + [-1.0] * n)
    return Model(metric, A1)
