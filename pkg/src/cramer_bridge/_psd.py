"""Positive-definite cone primitives shared by the maxent and SDP modules."""

from __future__ import annotations

import math

import numpy as np

from .errors import NotPositiveDefinite

PIVOT_TOL = 1e-12


def symmetrize(Z) -> np.ndarray:
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] != Z.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {Z.shape}")
    return 0.5 * (Z + Z.T)


def pd_cholesky(Z) -> np.ndarray:
    """Lower Cholesky factor of the symmetric part of ``Z``.

    Raises NotPositiveDefinite when a squared pivot falls below
    ``PIVOT_TOL`` relative to the largest diagonal entry.
    """
    S = symmetrize(Z)
    try:
        L = np.linalg.cholesky(S)
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix is not positive definite") from exc
    piv = np.diag(L) ** 2
    scale = max(float(np.max(np.abs(np.diag(S)))), np.finfo(float).tiny)
    if not np.all(np.isfinite(piv)) or piv.min() <= PIVOT_TOL * scale:
        raise NotPositiveDefinite("matrix is numerically singular")
    return L


def is_pd(Z) -> bool:
    try:
        pd_cholesky(Z)
    except NotPositiveDefinite:
        return False
    return True


def logdet_pd(Z) -> float:
    L = pd_cholesky(Z)
    return 2.0 * float(np.sum(np.log(np.diag(L))))


def inv_pd(Z) -> np.ndarray:
    L = pd_cholesky(Z)
    Linv = np.linalg.inv(L)
    return Linv.T @ Linv


def multivariate_gamma_constant(d: int) -> float:
    """ln Gamma_d((d+1)/2), the constant in the PSD-cone log-barrier.

    With dX the Lebesgue measure on the d(d+1)/2 upper-triangle entries,
    ``int_{PSD} exp(-<Z, X>) dX = exp(C_d) * det(Z)**(-(d+1)/2)``.
    """
    if int(d) != d or d < 1:
        raise ValueError("d must be a positive integer")
    d = int(d)
    a = (d + 1) / 2.0
    out = d * (d - 1) / 4.0 * math.log(math.pi)
    for j in range(1, d + 1):
        out += math.lgamma(a + (1 - j) / 2.0)
    return out


def psd_log_barrier(Z) -> float:
    """phi(Z) = C_d - (d+1)/2 * ln det Z for Z positive definite."""
    Z = symmetrize(Z)
    d = Z.shape[0]
    return multivariate_gamma_constant(d) - 0.5 * (d + 1) * logdet_pd(Z)


def psd_log_barrier_gradient(Z) -> np.ndarray:
    d = np.shape(Z)[0]
    return -0.5 * (d + 1) * inv_pd(Z)


def max_psd_step(S: np.ndarray, dS: np.ndarray) -> float:
    """Largest t with S + t*dS still PSD (inf if the direction never exits)."""
    L = pd_cholesky(S)
    Linv = np.linalg.inv(L)
    M = Linv @ symmetrize(dS) @ Linv.T
    lo = float(np.linalg.eigvalsh(0.5 * (M + M.T))[0])
    return math.inf if lo >= 0 else -1.0 / lo
