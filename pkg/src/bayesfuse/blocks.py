"""Block views of a joint ``km x km`` covariance over ``k`` stacked estimates."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionMismatch, NotPositiveDefinite
from .linalg import as_spd, is_positive_definite


@dataclass(frozen=True)
class DiagonalBlocks:
    """The ``k`` known per-node covariances, stored as a ``(k, m, m)`` array."""

    blocks: NDArray

    def __post_init__(self):
        b = np.asarray(self.blocks, dtype=float)
        if b.ndim != 3 or b.shape[1] != b.shape[2]:
            raise DimensionMismatch(f"expected a (k, m, m) stack, got shape {b.shape}")
        if b.shape[0] < 1:
            raise DimensionMismatch("need at least one diagonal block")
        b = np.stack([as_spd(blk, f"diagonal block {j}") for j, blk in enumerate(b)])
        b.setflags(write=False)
        object.__setattr__(self, "blocks", b)

    @classmethod
    def from_list(cls, blocks) -> "DiagonalBlocks":
        return cls(np.stack([np.atleast_2d(np.asarray(b, dtype=float)) for b in blocks]))

    @property
    def k(self) -> int:
        return self.blocks.shape[0]

    @property
    def m(self) -> int:
        return self.blocks.shape[1]

    def __getitem__(self, j: int) -> NDArray:
        return self.blocks[j]

    def __len__(self) -> int:
        return self.k


@dataclass(frozen=True)
class OffDiagonalBlocks:
    """Upper-triangle cross-covariances keyed by 0-based ``(i, j)`` with ``i < j``.

    ``blocks[(i, j)]`` is ``P_ij``, the covariance between the errors of
    node ``i`` and node ``j``; the lower triangle is its transpose.
    """

    k: int
    m: int
    blocks: dict = field(default_factory=dict)

    def __post_init__(self):
        expected = {(i, j) for i in range(self.k) for j in range(i + 1, self.k)}
        if set(self.blocks) != expected:
            raise DimensionMismatch(
                f"need exactly the {len(expected)} upper-triangle blocks for k={self.k}"
            )
        for key, blk in self.blocks.items():
            if np.shape(blk) != (self.m, self.m):
                raise DimensionMismatch(f"block {key} has shape {np.shape(blk)}")

    @classmethod
    def zeros(cls, k: int, m: int) -> "OffDiagonalBlocks":
        return cls(k, m, {(i, j): np.zeros((m, m)) for i in range(k) for j in range(i + 1, k)})

    def __getitem__(self, key: tuple[int, int]) -> NDArray:
        i, j = key
        if i < j:
            return self.blocks[(i, j)]
        return np.asarray(self.blocks[(j, i)]).T


def assemble(pd: DiagonalBlocks, po: OffDiagonalBlocks) -> NDArray:
    """Build the full ``km x km`` matrix from its diagonal and off-diagonal blocks."""
    if (po.k, po.m) != (pd.k, pd.m):
        raise DimensionMismatch(f"diagonal is k={pd.k}, m={pd.m}; off-diagonal is k={po.k}, m={po.m}")
    k, m = pd.k, pd.m
    out = np.empty((k * m, k * m))
    for i in range(k):
        out[i * m:(i + 1) * m, i * m:(i + 1) * m] = pd[i]
        for j in range(i + 1, k):
            blk = np.asarray(po[(i, j)], dtype=float)
            out[i * m:(i + 1) * m, j * m:(j + 1) * m] = blk
            out[j * m:(j + 1) * m, i * m:(i + 1) * m] = blk.T
    return out


def split(full: ArrayLike, m: int) -> tuple[DiagonalBlocks, OffDiagonalBlocks]:
    full = np.asarray(full, dtype=float)
    if full.shape[0] % m:
        raise DimensionMismatch(f"size {full.shape[0]} is not a multiple of m={m}")
    k = full.shape[0] // m
    pd = DiagonalBlocks(np.stack([full[j * m:(j + 1) * m, j * m:(j + 1) * m] for j in range(k)]))
    po = OffDiagonalBlocks(k, m, {
        (i, j): full[i * m:(i + 1) * m, j * m:(j + 1) * m].copy()
        for i in range(k) for j in range(i + 1, k)
    })
    return pd, po


class JointCovariance:
    """Positive definite joint covariance ``P_x`` of ``k`` stacked ``m``-vectors."""

    def __init__(self, full: ArrayLike, m: int):
        full = np.asarray(full, dtype=float)
        if full.ndim != 2 or full.shape[0] != full.shape[1] or full.shape[0] % m:
            raise DimensionMismatch(f"cannot view shape {full.shape} as blocks of size {m}")
        self.full = as_spd(full, "joint covariance")
        self.full.setflags(write=False)
        self.m = int(m)
        self.k = full.shape[0] // m

    @classmethod
    def from_blocks(cls, pd: DiagonalBlocks, po: OffDiagonalBlocks) -> "JointCovariance":
        full = assemble(pd, po)
        if not is_positive_definite(full):
            raise NotPositiveDefinite("assembled joint covariance is not positive definite")
        return cls(full, pd.m)

    def block(self, i: int, j: int) -> NDArray:
        m = self.m
        return self.full[i * m:(i + 1) * m, j * m:(j + 1) * m]

    @property
    def diagonal(self) -> DiagonalBlocks:
        return DiagonalBlocks(np.stack([self.block(j, j) for j in range(self.k)]))

    @property
    def off_diagonal(self) -> OffDiagonalBlocks:
        return split(self.full, self.m)[1]

    def __repr__(self) -> str:
        return f"JointCovariance(k={self.k}, m={self.m})"

