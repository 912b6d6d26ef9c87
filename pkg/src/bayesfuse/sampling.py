"""
Matrix-variate samplers and log-densities.

Covers the Wishart distribution, the inverted matrix-variate t
distribution, and the conditional law of the off-diagonal blocks of a
Wishart matrix given its diagonal blocks (prior scale proportional to the
identity, or more generally block diagonal).

Samplers take an optional ``size``.  With ``size=None`` a single draw is
returned; otherwise draws are stacked along a new leading axis.  Within
one call the generator is consumed in a fixed order: for every inverted-t
draw the ``(dof, l)`` Gaussian factor of the Wishart matrix ``S`` first,
then the ``(l, m)`` Gaussian ``X``, each filled in C order over the whole
batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .blocks import DiagonalBlocks, OffDiagonalBlocks, assemble
from .errors import DimensionMismatch, InvalidDof, OutOfSupport
from .linalg import as_spd, is_positive_definite, ln_multigamma, logdet, sym_inv_sqrt, sym_sqrt, symmetrize
from .rng import RandomStream

# Draws whose assembled joint covariance is worse conditioned than this are redrawn.
MAX_CONDITION = 1e12


def _integer_dof(n: float, minimum: int, what: str) -> int:
    if float(n) != int(n):
        raise InvalidDof(f"{what}: stacking sampler needs an integer dof, got {n}")
    if int(n) < minimum:
        raise InvalidDof(f"{what}: dof {n} is below the minimum {minimum}")
    return int(n)


@dataclass(frozen=True)
class WishartParams:
    """Wishart distribution ``W_l(n, scale)``."""

    n: float
    scale: NDArray

    def __post_init__(self):
        scale = as_spd(self.scale, "Wishart scale")
        object.__setattr__(self, "scale", scale)
        if not self.n > self.l - 1:
            raise InvalidDof(f"Wishart dof must exceed l - 1 = {self.l - 1}, got {self.n}")

    @property
    def l(self) -> int:
        return self.scale.shape[0]


@dataclass(frozen=True)
class InvTParams:
    """Inverted matrix-variate t ``IT_{l,m}(n, loc, row_scale, col_scale)``."""

    n: float
    loc: NDArray
    row_scale: NDArray
    col_scale: NDArray

    def __post_init__(self):
        row = as_spd(self.row_scale, "row scale")
        col = as_spd(self.col_scale, "column scale")
        loc = np.asarray(self.loc, dtype=float)
        if loc.ndim == 0 and loc == 0:
            loc = np.zeros((row.shape[0], col.shape[0]))
        if loc.shape != (row.shape[0], col.shape[0]):
            raise DimensionMismatch(
                f"location has shape {loc.shape}, expected {(row.shape[0], col.shape[0])}"
            )
        if not self.n > 0:
            raise InvalidDof(f"inverted-t dof must be positive, got {self.n}")
        object.__setattr__(self, "row_scale", row)
        object.__setattr__(self, "col_scale", col)
        object.__setattr__(self, "loc", loc)

    @property
    def l(self) -> int:
        return self.row_scale.shape[0]

    @property
    def m(self) -> int:
        return self.col_scale.shape[0]


def _shape(size, *tail) -> tuple:
    return tail if size is None else (int(size), *tail)


def sample_gaussian_matrix(rows: int, cols: int, rng: RandomStream, size=None) -> NDArray:
    """Matrix of independent standard normal entries."""
    if rows < 1 or cols < 1:
        raise DimensionMismatch(f"matrix shape must be positive, got ({rows}, {cols})")
    return rng.normal(_shape(size, rows, cols))


def _wishart_identity(n: int, l: int, rng: RandomStream, size=None) -> NDArray:
    g = rng.normal(_shape(size, n, l))
    return np.swapaxes(g, -1, -2) @ g


def sample_wishart(p: WishartParams, rng: RandomStream, size=None) -> NDArray:
    """Draw ``X^T X`` where ``X`` has ``n`` independent ``N(0, scale)`` rows."""
    n = _integer_dof(p.n, p.l, "Wishart")
    root = sym_sqrt(p.scale)
    return symmetrize(root @ _wishart_identity(n, p.l, rng, size) @ root)


def wishart_logpdf(a: ArrayLike, p: WishartParams) -> NDArray | float:
    a = as_spd(a, "Wishart argument")
    if a.shape[-1] != p.l:
        raise DimensionMismatch(f"argument is {a.shape[-1]}x{a.shape[-1]}, scale is {p.l}x{p.l}")
    n, l = p.n, p.l
    tr = np.trace(np.linalg.solve(p.scale, a), axis1=-2, axis2=-1)
    return (
        0.5 * (n - l - 1) * logdet(a)
        - 0.5 * tr
        - 0.5 * n * l * math.log(2.0)
        - 0.5 * n * logdet(p.scale)
        - ln_multigamma(l, n / 2)
    )


def _inverted_t_core(n: int, l: int, m: int, rng: RandomStream, size=None) -> NDArray:
    """``(S + X X^T)^{-1/2} X`` with ``S ~ W_l(n + l - 1, I)``, ``X ~ N_{l,m}(0, I)``."""
    dof = _integer_dof(n + l - 1, l, "inverted-t Wishart factor")
    s = _wishart_identity(dof, l, rng, size)
    x = rng.normal(_shape(size, l, m))
    return sym_inv_sqrt(s + x @ np.swapaxes(x, -1, -2)) @ x


def sample_inverted_t(p: InvTParams, rng: RandomStream, size=None) -> NDArray:
    """Draw ``T = row^{1/2} (S + X X^T)^{-1/2} X col^{1/2} + loc``."""
    core = _inverted_t_core(p.n, p.l, p.m, rng, size)
    return sym_sqrt(p.row_scale) @ core @ sym_sqrt(p.col_scale) + p.loc


def _schur(t: NDArray, p: InvTParams) -> NDArray:
    # |I - row^-1 D col^-1 D^T| = |row - D col^-1 D^T| / |row|, and the right side is symmetric.
    d = t - p.loc
    return symmetrize(p.row_scale - d @ np.linalg.solve(p.col_scale, np.swapaxes(d, -1, -2)))


def in_inverted_t_support(t: ArrayLike, p: InvTParams) -> bool:
    return is_positive_definite(_schur(np.asarray(t, dtype=float), p))


def inverted_t_logpdf(t: ArrayLike, p: InvTParams) -> float:
    t = np.asarray(t, dtype=float)
    if t.shape != (p.l, p.m):
        raise DimensionMismatch(f"argument has shape {t.shape}, expected {(p.l, p.m)}")
    schur = _schur(t, p)
    if not is_positive_definite(schur):
        raise OutOfSupport("I - row^-1 (T - loc) col^-1 (T - loc)^T is not positive definite")
    n, l, m = p.n, p.l, p.m
    return (
        ln_multigamma(l, (n + m + l - 1) / 2)
        - ln_multigamma(l, (n + l - 1) / 2)
        - 0.5 * m * l * math.log(math.pi)
        - 0.5 * m * logdet(p.row_scale)
        - 0.5 * l * logdet(p.col_scale)
        + 0.5 * (n - 2) * (logdet(schur) - logdet(p.row_scale))
    )


def _offdiag_column(b: NDArray, a_new: NDArray, n: int, rng: RandomStream, size=None) -> NDArray:
    """Draw the transposed cross block ``C^T`` (``l2 x l1``) given leading block ``b`` and ``a_new``.

    ``C^T ~ IT_{l2,l1}(n - l1 - l2 + 1, O, a_new, b)``; sampled with
    ``S ~ W_{l2}(n - l1, I)``.  ``b`` may be a single matrix or a stack.
    """
    l1, l2 = b.shape[-1], a_new.shape[-1]
    core = _inverted_t_core(n - l1 - l2 + 1, l2, l1, rng, size)
    return sym_sqrt(a_new) @ core @ sym_sqrt(b)


def sample_offdiag_two(a11: ArrayLike, a22: ArrayLike, n: float, rng: RandomStream, size=None) -> NDArray:
    """Draw ``A12`` from its conditional law given ``A11`` and ``A22``.

    ``A = [[A11, A12], [A12^T, A22]]`` has a Wishart prior with ``n``
    degrees of freedom and a block-diagonal scale; the scale drops out.
    """
    a11 = as_spd(a11, "A11")
    a22 = as_spd(a22, "A22")
    l1, l2 = a11.shape[0], a22.shape[0]
    n = _integer_dof(n, l1 + l2, "two-node conditional")
    return np.swapaxes(_offdiag_column(a11, a22, n, rng, size), -1, -2)


def _chain_once(diag: NDArray, n: int, rng: RandomStream, size) -> NDArray:
    k, m = diag.shape[0], diag.shape[1]
    shape = _shape(size, k * m, k * m)
    full = np.zeros(shape)
    for j in range(k):
        full[..., j * m:(j + 1) * m, j * m:(j + 1) * m] = diag[j]
    lead = diag[0]
    for j in range(1, k):
        ct = _offdiag_column(lead, diag[j], n, rng, size)
        full[..., j * m:(j + 1) * m, : j * m] = ct
        full[..., : j * m, j * m:(j + 1) * m] = np.swapaxes(ct, -1, -2)
        lead = full[..., : (j + 1) * m, : (j + 1) * m]
    return full


def _well_conditioned(full: NDArray) -> NDArray:
    w = np.linalg.eigvalsh(full)
    return w[..., 0] * MAX_CONDITION > w[..., -1]


def sample_joint_chain(pd: DiagonalBlocks, n: float, rng: RandomStream, size=None) -> tuple[NDArray, int]:
    """Draw full joint covariances sharing the given diagonal blocks.

    Off-diagonal block columns are drawn left to right: step ``j`` draws the
    cross blocks between node ``j`` and nodes ``0..j-1`` given the leading
    ``jm x jm`` principal block already assembled.

    Returns
    -------
    full : ndarray
        ``(km, km)`` or ``(size, km, km)`` joint covariances.
    rejected : int
        Number of ill-conditioned draws that were discarded and redrawn.
    """
    k, m = pd.k, pd.m
    if k < 2:
        raise DimensionMismatch("need at least two nodes to sample cross blocks")
    n = _integer_dof(n, k * m, "chain sampler")
    diag = np.asarray(pd.blocks)
    if size is None:
        rejected = 0
        while True:
            full = _chain_once(diag, n, rng, None)
            if _well_conditioned(full):
                return full, rejected
            rejected += 1
    full = _chain_once(diag, n, rng, size)
    bad = np.flatnonzero(~_well_conditioned(full))
    rejected = 0
    while bad.size:
        rejected += bad.size
        redraw = _chain_once(diag, n, rng, bad.size)
        ok = _well_conditioned(redraw)
        full[bad[ok]] = redraw[ok]
        bad = bad[~ok]
    return full, rejected


def sample_offdiag_chain(pd: DiagonalBlocks, n: float, rng: RandomStream) -> OffDiagonalBlocks:
    """One draw of all ``k(k-1)/2`` cross blocks given the diagonal blocks."""
    full, _ = sample_joint_chain(pd, n, rng)
    m = pd.m
    return OffDiagonalBlocks(pd.k, m, {
        (i, j): full[i * m:(i + 1) * m, j * m:(j + 1) * m].copy()
        for i in range(pd.k) for j in range(i + 1, pd.k)
    })


def chain_factors(pd: DiagonalBlocks, po: OffDiagonalBlocks, n: float) -> list[tuple[NDArray, InvTParams]]:
    """The ``k - 1`` inverted-t factors of the conditional density.

    Factor ``j`` (1-based) is the law of the ``m x jm`` block row
    ``[P_{1,j+1}^T ... P_{j,j+1}^T]`` given the leading ``jm x jm`` block
    ``B_j`` and ``P_{j+1,j+1}``:
    ``IT_{m, jm}(n - (j+1)m + 1, O, P_{j+1,j+1}, B_j)``.
    """
    k, m = pd.k, pd.m
    full = assemble(pd, po)
    out = []
    for j in range(1, k):
        lead = full[: j * m, : j * m]
        ct = full[j * m:(j + 1) * m, : j * m]
        out.append((ct, InvTParams(n - (j + 1) * m + 1, 0, pd[j], lead)))
    return out


def conditional_logpdf(po: OffDiagonalBlocks, pd: DiagonalBlocks, n: float) -> float:
    """Log-density of the cross blocks given the diagonal blocks under a Wishart prior."""
    k, m = pd.k, pd.m
    if not n > k * m - 1:
        raise InvalidDof(f"need n > km - 1 = {k * m - 1}, got {n}")
    if not is_positive_definite(assemble(pd, po)):
        raise OutOfSupport("assembled joint covariance is not positive definite")
    return float(sum(inverted_t_logpdf(t, p) for t, p in chain_factors(pd, po, n)))
