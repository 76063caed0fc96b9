"""Commutation properties of curvature models and the normalised basis of the
(x, y, z, xbar) family.

Every checker returns a :class:`PropertyResult`.  A residual at or below
``tol`` passes, one at or above ``fail_threshold`` fails, and anything in
between raises :class:`~curvlab.errors.IndeterminateVerdictError`.

Commutator-type residuals are relative: ``max|[X, Y]|`` is divided by
``max|X| * max|Y|`` over the operator families involved, which makes the
verdict invariant under rescaling the tensor.  When ``T`` is the Ricci
operator its magnitude is taken as ``max(max|rho|, max|A|)``, so that a Ricci
operator that vanishes up to rounding is not inflated to unit size.

"For all x" conditions are decided on polarized basis pairs, which is exact by
multilinearity.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from . import families
from .curvature import curvature_at
from .errors import DomainError, IndeterminateVerdictError, NotSelfAdjointError
from .expr import ScalarExpr, eval_jet
from .linalg import SpectralProfile, spectral_profile
from .models import Model

DEFAULT_TOL = 1e-8
FAIL_THRESHOLD = 1e-4

PROPERTY_NAMES = ("einstein", "pseudo_einstein", "jacobi_videv", "skew_videv",
                  "jacobi_tsankov", "mixed_tsankov")


@dataclass(frozen=True)
class PropertyResult:
    name: str
    verdict: bool
    residual: float
    witness: tuple
    tol: float

    def to_dict(self):
        d = asdict(self)
        d["witness"] = list(self.witness)
        del d["name"]
        return d


def _decide(name, residual, witness, tol, fail_threshold=FAIL_THRESHOLD):
    residual = float(residual)
    if tol < residual < max(fail_threshold, tol):
        raise IndeterminateVerdictError(name, residual, tol, fail_threshold)
    return PropertyResult(name, residual <= tol, residual, tuple(int(w) for w in witness), tol)


def _worst(stack):
    """max |entry| of an array of matrices and the index tuple where it occurs."""
    a = np.abs(stack)
    if a.size == 0:
        return 0.0, ()
    idx = np.unravel_index(np.argmax(a), a.shape)
    return float(a[idx]), idx


def _commutator_stack(ops, T):
    """[O, T] for every matrix O in ``ops[..., :, :]``."""
    return ops @ T - T @ ops


def _ricci_or(model, T):
    """(T, magnitude of T); T defaults to the Ricci operator."""
    if T is None:
        rho = model.ricci_op()
        return rho, max(_size(rho), _size(model.A))
    T = np.asarray(T, dtype=float)
    return T, _size(T)


def _size(a):
    return float(np.max(np.abs(a), initial=0.0))


def _relative(value, *sizes):
    denom = float(np.prod(sizes))
    if denom == 0.0:
        return 0.0 if value == 0 else float("inf")
    return value / denom


# --------------------------------------------------------------------------
# Einstein / pseudo-Einstein
# --------------------------------------------------------------------------

def check_einstein(rho, tol: float = DEFAULT_TOL, fail_threshold: float = FAIL_THRESHOLD) -> PropertyResult:
    """rho = c id with c = Tr(rho)/m; residual is |rho - c id|_max / (|c| + 1)."""
    rho = np.asarray(rho, dtype=float)
    m = rho.shape[0]
    c = np.trace(rho) / m
    value, idx = _worst(rho - c * np.eye(m))
    return _decide("einstein", value / (abs(c) + 1), idx, tol, fail_threshold)


def check_pseudo_einstein(profile: SpectralProfile, tol: float = DEFAULT_TOL,
                          fail_threshold: float = FAIL_THRESHOLD) -> PropertyResult:
    """Single real eigenvalue, or exactly one complex-conjugate pair.

    The residual is the smaller of the two hypotheses' worst eigenvalue
    distance, relative to ``1 + max|lambda|``; the witness is the index of
    the worst eigenvalue cluster.
    """
    if profile.is_nilpotent:
        return _decide("pseudo_einstein", 0.0, (), tol, fail_threshold)
    lam = np.array([complex(re, im) for re, im, _ in profile.eigenvalues])
    w = np.array([k for *_, k in profile.eigenvalues], dtype=float)
    norm = 1 + np.max(np.abs(lam))
    centre = np.sum(w * lam.real) / np.sum(w)
    real_dev = np.abs(lam - centre)
    half = np.sum(w * np.abs(lam.imag)) / np.sum(w)
    pair_dev = np.minimum(np.abs(lam - complex(centre, half)), np.abs(lam - complex(centre, -half)))
    if half <= tol * norm:
        pair_dev = np.full_like(pair_dev, np.inf)
    dev = real_dev if real_dev.max() <= pair_dev.max() else pair_dev
    k = int(np.argmax(dev))
    return _decide("pseudo_einstein", dev[k] / norm, (k,), tol, fail_threshold)


# --------------------------------------------------------------------------
# Videv-type conditions
# --------------------------------------------------------------------------

def check_jacobi_videv(model: Model, tol: float = DEFAULT_TOL, T=None,
                       fail_threshold: float = FAIL_THRESHOLD) -> PropertyResult:
    """J(x) T = T J(x) for all x (T defaults to the Ricci operator).

    Witness: (i, j, row, col) of the worst entry of [J(e_i, e_j), T].
    """
    T, t_size = _ricci_or(model, T)
    J = model.jacobi_operators()
    value, idx = _worst(_commutator_stack(J, T))
    return _decide("jacobi_videv", _relative(value, _size(J), t_size), idx, tol, fail_threshold)


def check_skew_videv(model: Model, tol: float = DEFAULT_TOL, T=None,
                     fail_threshold: float = FAIL_THRESHOLD) -> PropertyResult:
    """A(x, y) T = T A(x, y) for all x, y, A the curvature operator."""
    T, t_size = _ricci_or(model, T)
    ops = model.curvature_operators()
    value, idx = _worst(_commutator_stack(ops, T))
    return _decide("skew_videv", _relative(value, _size(ops), t_size), idx, tol, fail_threshold)


def condition_a_residual(model: Model, T=None, adjoint_tol: float = 1e-9) -> float:
    """Worst deviation among A(T.,.,.,.), A(.,T.,.,.), A(.,.,T.,.), A(.,.,.,T.).

    T must be self-adjoint for the model's inner product.
    """
    residual, _ = _condition_a(model, T, adjoint_tol)
    return residual


def _condition_a(model, T, adjoint_tol):
    T, t_size = _ricci_or(model, T)
    gT = model.metric @ T
    if np.max(np.abs(gT - gT.T), initial=0) > adjoint_tol * (np.max(np.abs(gT), initial=0) + 1):
        raise NotSelfAdjointError("T is not self-adjoint with respect to the inner product")
    A = model.A
    slots = [
        np.einsum("ma,mbcd->abcd", T, A),
        np.einsum("mb,amcd->abcd", T, A),
        np.einsum("mc,abmd->abcd", T, A),
        np.einsum("md,abcm->abcd", T, A),
    ]
    best, where = 0.0, ()
    for k in range(3):
        value, idx = _worst(slots[k] - slots[k + 1])
        if value > best:
            best, where = value, (k,) + tuple(idx)
    return _relative(best, _size(A), t_size), where


def check_condition_a(model: Model, tol: float = DEFAULT_TOL, T=None,
                      fail_threshold: float = FAIL_THRESHOLD) -> PropertyResult:
    """T can be moved between the four slots of A; witness (slot pair, i, j, k, l)."""
    residual, where = _condition_a(model, T, 1e-9)
    return _decide("condition_a", residual, where, tol, fail_threshold)


def check_jacobi_tsankov(model: Model, tol: float = DEFAULT_TOL,
                         fail_threshold: float = FAIL_THRESHOLD) -> PropertyResult:
    """J(x) J(y) = J(y) J(x) for all x, y; witness (i, j, k, l, row, col)."""
    J = model.jacobi_operators()
    n = model.n
    flat = J.reshape(n * n, n, n)
    comm = np.einsum("pab,qbc->pqac", flat, flat)
    comm = comm - comm.transpose(1, 0, 2, 3)
    value, idx = _worst(comm)
    witness = ()
    if idx:
        p, q, r, c = idx
        witness = (p // n, p % n, q // n, q % n, r, c)
    return _decide("jacobi_tsankov", _relative(value, _size(J), _size(J)), witness, tol, fail_threshold)


def check_mixed_tsankov(model: Model, tol: float = DEFAULT_TOL,
                        fail_threshold: float = FAIL_THRESHOLD) -> PropertyResult:
    """J(x) A(y, z) = A(y, z) J(x) for all x, y, z; witness (i, j, k, l, row, col)."""
    J = model.jacobi_operators()
    C = model.curvature_operators()
    n = model.n
    Jf = J.reshape(n * n, n, n)
    Cf = C.reshape(n * n, n, n)
    comm = np.einsum("pab,qbc->pqac", Jf, Cf) - np.einsum("qab,pbc->pqac", Cf, Jf)
    value, idx = _worst(comm)
    witness = ()
    if idx:
        p, q, r, c = idx
        witness = (p // n, p % n, q // n, q % n, r, c)
    return _decide("mixed_tsankov", _relative(value, _size(J), _size(C)), witness, tol, fail_threshold)


def property_report(model: Model, tol: float = DEFAULT_TOL, rank_tol: float = 1e-8,
                    fail_threshold: float = FAIL_THRESHOLD):
    """All six properties of ``model``.

    Returns ``(results, profile)`` where ``results`` maps property name to a
    PropertyResult, or to the IndeterminateVerdictError raised for it.
    """
    rho = model.ricci_op()
    profile = spectral_profile(rho, rank_tol, ref_scale=model.scale)
    checks = {
        "einstein": lambda: check_einstein(rho, tol, fail_threshold),
        "pseudo_einstein": lambda: check_pseudo_einstein(profile, tol, fail_threshold),
        "jacobi_videv": lambda: check_jacobi_videv(model, tol, None, fail_threshold),
        "skew_videv": lambda: check_skew_videv(model, tol, None, fail_threshold),
        "jacobi_tsankov": lambda: check_jacobi_tsankov(model, tol, fail_threshold),
        "mixed_tsankov": lambda: check_mixed_tsankov(model, tol, fail_threshold),
    }
    results = {}
    for name, fn in checks.items():
        try:
            results[name] = fn()
        except IndeterminateVerdictError as exc:
            results[name] = exc
    return results, profile


# --------------------------------------------------------------------------
# (x, y, z, xbar) family: normalised basis and the alpha invariant
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NormalizedBasis:
    X: np.ndarray
    Y: np.ndarray
    Z: np.ndarray
    Xbar: np.ndarray
    eps1: float
    delta1: float
    alpha: float
    relations: dict

    @property
    def max_relation_error(self):
        return max(abs(v - target) for v, target in self.relations.values())


def _phi_derivs(phi: ScalarExpr, bindings, y):
    jet = eval_jet(phi, [0.0, y, 0.0, 0.0], bindings)
    return jet.value, jet.partial(1), jet.partial(1, 1)


def normalized_basis_thm13(phi: ScalarExpr, bindings, point) -> NormalizedBasis:
    """Normalised basis {X, Y, Z, Xbar} of the (x, y, z, xbar) chart with g(dx, dz) = 2 phi(y).

    ``phi`` is an expression in the chart coordinate ``x1`` (= y).  The
    ``relations`` field maps each normalisation condition to
    ``(computed, required)``.
    """
    point = np.asarray(point, dtype=float)
    f, f1, f2 = _phi_derivs(phi, bindings, point[1])
    if f2 == 0:
        raise DomainError(f"phi'' vanishes at y = {point[1]}")
    eps1 = 1.0 / f2
    delta1 = 0.5 * f1 * f1 / f2
    X = eps1 * np.array([1.0, 0.0, delta1, -0.5 * (delta1 ** 2 + 4 * f * delta1)])
    Y = np.array([0.0, 1.0, 0.0, 0.0])
    Z = np.array([0.0, 0.0, 1.0, -(delta1 + 2 * f)])
    Xbar = np.array([0.0, 0.0, 0.0, 1.0 / eps1])

    cd = curvature_at(families.build_thm13(phi, bindings), point, nabla_r=False)
    g = cd.g

    def R(a, b, c, d):
        return float(np.einsum("ijkl,i,j,k,l->", cd.R_lower, a, b, c, d))

    relations = {
        "g(X,Xbar)": (float(X @ g @ Xbar), 1.0),
        "g(Y,Y)": (float(Y @ g @ Y), 1.0),
        "g(Z,Z)": (float(Z @ g @ Z), 1.0),
        "R(X,Y,Y,X)": (R(X, Y, Y, X), 0.0),
        "R(Y,Z,Z,Y)": (R(Y, Z, Z, Y), 0.0),
        "R(Y,X,X,Z)": (R(Y, X, X, Z), 0.0),
        "R(X,Y,Y,Z)": (R(X, Y, Y, Z), -1.0),
        "R(X,Z,Z,Y)": (R(X, Z, Z, Y), 0.0),
    }
    return NormalizedBasis(X, Y, Z, Xbar, eps1, delta1, R(X, Z, Z, X), relations)


def alpha_invariant(phi: ScalarExpr, bindings, y: float) -> float:
    """phi'^2 / phi''^2 at y."""
    _, f1, f2 = _phi_derivs(phi, bindings, y)
    if f2 == 0:
        raise DomainError(f"phi'' vanishes at y = {y}")
    return f1 * f1 / (f2 * f2)


def alpha_constancy(phi: ScalarExpr, bindings, ys, tol: float = 1e-9) -> PropertyResult:
    """Curvature-homogeneity criterion for the family: alpha constant on the y grid."""
    values = np.array([alpha_invariant(phi, bindings, y) for y in ys])
    spread = float(values.max() - values.min())
    mean = float(values.mean())
    residual = spread / (abs(mean) + 1)
    k = int(np.argmax(np.abs(values - mean)))
    return PropertyResult("alpha_constant", residual <= tol, residual, (k,), tol)
