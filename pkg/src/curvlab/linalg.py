"""Small dense linear algebra: inversion, spectra and ranks of operator powers."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMetricError

DEFAULT_RANK_TOL = 1e-8
RANK_FLOOR = 1e-12
MAX_DIM = 16


def invert(a, tol: float = 1e-12) -> np.ndarray:
    """Inverse of a square matrix; raises DegenerateMetricError if singular within ``tol``.

    Singularity is judged by the ratio of extreme singular values.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DegenerateMetricError("matrix has non-finite entries")
    sv = np.linalg.svd(a, compute_uv=False)
    if sv[0] == 0 or sv[-1] <= tol * sv[0]:
        raise DegenerateMetricError(
            f"matrix is singular within tolerance (sigma_min/sigma_max = {sv[-1] / sv[0] if sv[0] else 0:.3e})")
    return np.linalg.inv(a)


def signature(g, tol: float = 1e-12) -> tuple[int, int]:
    """(number of negative, number of positive) eigenvalues of a symmetric matrix."""
    w = np.linalg.eigvalsh(np.asarray(g, dtype=float))
    scale = max(np.abs(w).max(), 1.0)
    return int(np.sum(w < -tol * scale)), int(np.sum(w > tol * scale))


def charpoly(t) -> np.ndarray:
    """Coefficients of det(lambda I - T), highest degree first (Faddeev-LeVerrier)."""
    t = np.asarray(t, dtype=float)
    n = t.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    m = np.zeros_like(t)
    eye = np.eye(n)
    for k in range(1, n + 1):
        m = t @ m + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(t @ m) / k
    return coeffs


def polynomial_roots(coeffs, maxiter: int = 500) -> np.ndarray:
    """All complex roots of a polynomial (highest degree first) by Aberth iteration."""
    c = np.asarray(coeffs, dtype=complex)
    c = c / c[0]
    n = len(c) - 1
    if n == 0:
        return np.zeros(0, dtype=complex)
    if n == 1:
        return np.array([-c[1]])
    radius = 1 + np.max(np.abs(c[1:]))
    z = 0.5 * radius * np.exp(1j * (2 * np.pi * np.arange(n) / n + 0.4))
    dc = c[:-1] * np.arange(n, 0, -1)
    off_diag = ~np.eye(n, dtype=bool)
    for _ in range(maxiter):
        p = np.polyval(c, z)
        dp = np.polyval(dc, z)
        diff = z[:, None] - z[None, :]
        with np.errstate(divide="ignore", invalid="ignore"):
            s = np.sum(np.where(off_diag, 1 / np.where(off_diag, diff, 1), 0), axis=1)
            ratio = p / dp
            w = ratio / (1 - ratio * s)
        w = np.where(np.isfinite(w), w, 0)
        z = z - w
        if np.all(np.abs(w) <= 1e-15 * np.maximum(np.abs(z), 1)):
            break
    return z


def _cluster(roots, tol):
    """Group roots lying within ``tol`` of a group seed; (centroid, multiplicity) pairs."""
    remaining = sorted(roots, key=lambda r: (r.real, r.imag))
    groups = []
    while remaining:
        seed = remaining[0]
        members = [r for r in remaining if abs(r - seed) <= tol]
        remaining = [r for r in remaining if abs(r - seed) > tol]
        groups.append((complex(np.mean(members)), len(members)))
    return groups


def _polish(coeffs, z, mult, steps: int = 8):
    """Newton on the (mult-1)-th derivative, where a root of multiplicity ``mult`` is simple."""
    c = np.asarray(coeffs, dtype=complex)
    for _ in range(mult - 1):
        c = np.polyder(c)
    dc = np.polyder(c)
    for _ in range(steps):
        d = np.polyval(dc, z)
        if d == 0:
            break
        step = np.polyval(c, z) / d
        z = z - step
        if abs(step) <= 1e-16 * max(abs(z), 1):
            break
    return z


@dataclass(frozen=True)
class SpectralProfile:
    """Eigenvalues with multiplicities and the rank sequence of powers.

    ``ranks[k-1]`` is the rank of ``T**k`` for ``k = 1..n``;
    ``nilpotency_index`` is 0 when T is not nilpotent.
    """

    n: int
    eigenvalues: tuple[tuple[float, float, int], ...]
    ranks: tuple[int, ...]
    nilpotency_index: int
    tol: float = DEFAULT_RANK_TOL

    @property
    def is_nilpotent(self):
        return self.nilpotency_index > 0

    def to_dict(self):
        return {
            "eigenvalues": [{"re": re, "im": im, "multiplicity": k} for re, im, k in self.eigenvalues],
            "ranks": list(self.ranks),
            "nilpotency_index": self.nilpotency_index,
            "tol": self.tol,
        }


def power_ranks(t, tol: float = DEFAULT_RANK_TOL, ref_scale: float = 0.0) -> tuple[int, ...]:
    """Ranks of T, T^2, ..., T^n.

    Singular values of T^k are compared against
    ``tol * max(sigma_max(T)**k, ref_scale**k, 1e-12)``, so that rounding
    residue of an operator that is exactly nilpotent does not count towards
    the rank.  ``ref_scale`` lets a caller supply the magnitude of the data T
    was computed from; otherwise a T that is zero up to rounding would be
    judged against its own noise.
    """
    t = np.asarray(t, dtype=float)
    n = t.shape[0]
    smax = np.linalg.svd(t, compute_uv=False)[0] if n else 0.0
    ranks = []
    p = np.eye(n)
    for k in range(1, n + 1):
        p = p @ t
        sv = np.linalg.svd(p, compute_uv=False)
        thresh = tol * max(smax ** k, ref_scale ** k, RANK_FLOOR)
        ranks.append(int(np.sum(sv > thresh)))
    return tuple(ranks)


def spectral_profile(t, tol: float = DEFAULT_RANK_TOL, cluster_tol: float = 1e-5,
                     ref_scale: float = 0.0) -> SpectralProfile:
    """Eigenvalue clusters and rank sequence of a real square matrix (n <= 16).

    Eigenvalues are roots of the characteristic polynomial.  Nearby roots
    (within ``cluster_tol * (1 + max|lambda|)``) are merged and reported by
    their centroid, which is far better conditioned than the individual
    members of a perturbed multiple root.  Nilpotency is read off the rank
    sequence; a nilpotent operator reports the single eigenvalue 0.
    ``ref_scale`` is passed on to :func:`power_ranks`.
    """
    t = np.asarray(t, dtype=float)
    n = t.shape[0]
    if n > MAX_DIM:
        raise ValueError(f"spectral_profile supports n <= {MAX_DIM}")
    ranks = power_ranks(t, tol, ref_scale)
    nil = next((k + 1 for k, r in enumerate(ranks) if r == 0), 0)
    if nil:
        return SpectralProfile(n, ((0.0, 0.0, n),), ranks, nil, tol)
    coeffs = charpoly(t)
    roots = polynomial_roots(coeffs)
    scale = 1 + np.max(np.abs(roots))
    groups = []
    for z, mult in _cluster(roots, cluster_tol * scale):
        polished = _polish(coeffs, z, mult)
        groups.append((polished if abs(polished - z) <= cluster_tol * scale else z, mult))
    eig = []
    for z, mult in groups:
        if abs(z.imag) <= cluster_tol * scale:
            eig.append((float(z.real), 0.0, mult))
        elif z.imag > 0:
            # the conjugate cluster mirrors this one; report both from one centroid
            eig.append((float(z.real), float(z.imag), mult))
            eig.append((float(z.real), -float(z.imag), mult))
    if sum(e[2] for e in eig) != n:
        eig = [(float(z.real), float(z.imag), mult) for z, mult in groups]
    eig.sort(key=lambda e: (e[0], e[1]))
    return SpectralProfile(n, tuple(eig), ranks, 0, tol)
