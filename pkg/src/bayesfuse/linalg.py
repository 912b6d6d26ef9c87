"""
Symmetric positive definite matrix helpers.

Every routine here accepts a single ``(d, d)`` matrix or a stack of them
with shape ``(..., d, d)``; the batched form is what the Monte Carlo
fuser uses in its inner loop.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.special import gammaln

from .errors import DomainError, NotPositiveDefinite

SYM_RTOL = 1e-10
PD_RTOL = 1e-10


def _scale(a: NDArray) -> NDArray:
    return 1.0 + np.max(np.abs(a), axis=(-2, -1))


def pd_tolerance(a: ArrayLike) -> NDArray | float:
    """Eigenvalue floor ``1e-10 * (1 + max|a_ij|)`` used to call a matrix PD."""
    return PD_RTOL * _scale(np.asarray(a, dtype=float))


def symmetrize(a: ArrayLike) -> NDArray:
    a = np.asarray(a, dtype=float)
    return 0.5 * (a + np.swapaxes(a, -1, -2))


def is_symmetric(a: ArrayLike) -> bool:
    a = np.asarray(a, dtype=float)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        return False
    asym = np.max(np.abs(a - np.swapaxes(a, -1, -2)), axis=(-2, -1))
    return bool(np.all(asym <= SYM_RTOL * _scale(a)))


def is_positive_definite(a: ArrayLike, tol: float | None = None) -> bool:
    """True iff ``a`` is symmetric and its smallest eigenvalue exceeds ``tol``.

    With ``tol=None`` the scale-relative :func:`pd_tolerance` is used.
    Never raises; non-square or non-finite input simply returns False.
    """
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        return False
    if not np.all(np.isfinite(a)) or not is_symmetric(a):
        return False
    if tol is None:
        tol = pd_tolerance(a)
    return bool(np.linalg.eigvalsh(symmetrize(a))[0] > tol)


def as_spd(a: ArrayLike, name: str = "matrix") -> NDArray:
    """Symmetrize ``a`` and validate it as SPD, returning a fresh float array."""
    a = np.array(a, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    if a.ndim < 2 or a.shape[-1] != a.shape[-2]:
        raise NotPositiveDefinite(f"{name} must be square, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise NotPositiveDefinite(f"{name} has non-finite entries")
    if not is_symmetric(a):
        raise NotPositiveDefinite(f"{name} is not symmetric")
    a = symmetrize(a)
    w = np.linalg.eigvalsh(a)[..., 0]
    if np.any(w <= pd_tolerance(a)):
        raise NotPositiveDefinite(
            f"{name} is not positive definite (min eigenvalue {np.min(w):.3e})"
        )
    return a


def _checked_eigh(a: NDArray) -> tuple[NDArray, NDArray]:
    a = symmetrize(a)
    w, v = np.linalg.eigh(a)
    if np.any(w[..., 0] <= pd_tolerance(a)):
        raise NotPositiveDefinite(
            f"matrix is not positive definite (min eigenvalue {np.min(w[..., 0]):.3e})"
        )
    return w, v


def _from_eig(w: NDArray, v: NDArray) -> NDArray:
    out = (v * w[..., None, :]) @ np.swapaxes(v, -1, -2)
    return symmetrize(out)


def sym_sqrt(a: ArrayLike) -> NDArray:
    """Symmetric square root ``S`` with ``S @ S == a``, via eigendecomposition."""
    w, v = _checked_eigh(np.asarray(a, dtype=float))
    return _from_eig(np.sqrt(w), v)


def sym_inv_sqrt(a: ArrayLike) -> NDArray:
    """Symmetric inverse square root ``a^{-1/2}``."""
    w, v = _checked_eigh(np.asarray(a, dtype=float))
    return _from_eig(1.0 / np.sqrt(w), v)


def spd_inverse(a: ArrayLike) -> NDArray:
    a = np.asarray(a, dtype=float)
    try:
        c = np.linalg.cholesky(symmetrize(a))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix is not positive definite") from exc
    eye = np.broadcast_to(np.eye(a.shape[-1]), a.shape)
    cinv = np.linalg.solve(c, eye)
    return symmetrize(np.swapaxes(cinv, -1, -2) @ cinv)


def logdet(a: ArrayLike) -> NDArray | float:
    """``ln|a|`` from the Cholesky factor's diagonal."""
    a = np.asarray(a, dtype=float)
    try:
        c = np.linalg.cholesky(symmetrize(a))
    except np.linalg.LinAlgError as exc:
        raise NotPositiveDefinite("matrix is not positive definite") from exc
    out = 2.0 * np.sum(np.log(np.diagonal(c, axis1=-2, axis2=-1)), axis=-1)
    return float(out) if np.ndim(out) == 0 else out


def ln_multigamma(l: int, a: float) -> float:
    """Log of the multivariate gamma function ``Gamma_l(a)``.

    ``ln Gamma_l(a) = l(l-1)/4 ln(pi) + sum_{j=1..l} ln Gamma(a - (j-1)/2)``,
    defined for ``a > (l-1)/2``.
    """
    if int(l) != l or l < 1:
        raise DomainError(f"dimension must be a positive integer, got {l}")
    l = int(l)
    if not a > (l - 1) / 2:
        raise DomainError(f"ln_multigamma needs a > (l-1)/2; got l={l}, a={a}")
    j = np.arange(l)
    return float(l * (l - 1) / 4 * math.log(math.pi) + np.sum(gammaln(a - j / 2)))
