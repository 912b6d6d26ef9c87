"""
Fusion of ``k`` vector estimates ``x_j`` with error covariances ``P_jj``.

* :func:`optimal_fusion` - best linear unbiased fusion when the full joint
  covariance is known.
* :func:`two_node_fusion` - the same for ``k = 2`` written in closed form.
* :func:`bayesian_mc_fusion` - Monte Carlo MMSE fusion when only the
  diagonal blocks are known; cross blocks are integrated out under a
  Wishart prior.
* :func:`fast_ci_weights` / :func:`ci_fusion` - covariance intersection.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .blocks import DiagonalBlocks, JointCovariance
from .errors import DimensionMismatch, SingularDenominator, WeightSumError
from .linalg import as_spd, spd_inverse, symmetrize
from .rng import RandomStream
from .sampling import sample_joint_chain

METHODS = ("optimal", "bayesian_mc", "fast_ci")


@dataclass(frozen=True)
class Estimate:
    x: NDArray
    P: NDArray

    def __post_init__(self):
        x = np.atleast_1d(np.asarray(self.x, dtype=float))
        if x.ndim != 1 or not np.all(np.isfinite(x)):
            raise DimensionMismatch("estimate must be a finite vector")
        P = as_spd(self.P, "estimate covariance")
        if P.shape[0] != x.shape[0]:
            raise DimensionMismatch(f"vector has length {x.shape[0]}, covariance is {P.shape}")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "P", P)

    @property
    def m(self) -> int:
        return self.x.shape[0]


@dataclass(frozen=True)
class FusedEstimate:
    x: NDArray
    P: NDArray
    method: str
    diagnostics: dict = field(default_factory=dict)


def _check_estimates(estimates: Sequence[Estimate]) -> tuple[int, int]:
    if len(estimates) == 0:
        raise DimensionMismatch("need at least one estimate")
    m = estimates[0].m
    if any(e.m != m for e in estimates):
        raise DimensionMismatch("all estimates must have the same dimension")
    return len(estimates), m


def stack(estimates: Sequence[Estimate]) -> NDArray:
    return np.concatenate([e.x for e in estimates])


def diagonal_blocks(estimates: Sequence[Estimate]) -> DiagonalBlocks:
    return DiagonalBlocks(np.stack([e.P for e in estimates]))


def _fuse_batch(px: NDArray, x: NDArray, m: int) -> tuple[NDArray, NDArray, NDArray]:
    """BLUE fusion for a stack of joint covariances.

    Returns ``(x_hat, P0, info)`` where ``info = I_(k)^T P_x^{-1} I_(k)``.
    Works for ``px`` of shape ``(km, km)`` or ``(N, km, km)``.
    """
    km = px.shape[-1]
    k = km // m
    rhs = np.concatenate([np.tile(np.eye(m), (k, 1)), x[:, None]], axis=1)
    rhs = np.broadcast_to(rhs, px.shape[:-2] + rhs.shape)
    y = np.linalg.solve(px, rhs)
    # I_(k)^T Y sums the k row blocks
    summed = y.reshape(px.shape[:-2] + (k, m, m + 1)).sum(axis=-3)
    info = symmetrize(summed[..., :m])
    p0 = spd_inverse(info)
    x_hat = (p0 @ summed[..., m:])[..., 0]
    return x_hat, p0, info


def optimal_weights(px: JointCovariance) -> NDArray:
    """Weight matrices ``W_j`` (stacked ``(k, m, m)``) with ``x_hat = sum_j W_j x_j``."""
    m, k = px.m, px.k
    pinv_i = np.linalg.solve(px.full, np.tile(np.eye(m), (k, 1)))  # P_x^{-1} I_(k)
    info = pinv_i.reshape(k, m, m).sum(axis=0)
    p0 = spd_inverse(symmetrize(info))
    # W^T = P0 I_(k)^T P_x^{-1}; block j of it is P0 (P_x^{-1} I_(k))_j^T
    return np.stack([p0 @ pinv_i[j * m:(j + 1) * m].T for j in range(k)])


def optimal_fusion(estimates: Sequence[Estimate], px: JointCovariance) -> FusedEstimate:
    """Minimum-variance linear unbiased fusion given the full joint covariance."""
    k, m = _check_estimates(estimates)
    if (px.k, px.m) != (k, m):
        raise DimensionMismatch(f"joint covariance is for k={px.k}, m={px.m}; got k={k}, m={m}")
    x_hat, p0, _ = _fuse_batch(px.full, stack(estimates), m)
    return FusedEstimate(x_hat, p0, "optimal", {"weights": optimal_weights(px)})


def two_node_fusion(e1: Estimate, e2: Estimate, P12: ArrayLike) -> FusedEstimate:
    P11, P22 = e1.P, e2.P
    P12 = np.asarray(P12, dtype=float)
    if P12.shape != P11.shape or P22.shape != P11.shape:
        raise DimensionMismatch("block shapes do not agree")
    JointCovariance(np.block([[P11, P12], [P12.T, P22]]), e1.m)
    denom = P11 - P12 - P12.T + P22
    try:
        denom_inv = np.linalg.inv(denom)
    except np.linalg.LinAlgError as exc:
        raise SingularDenominator("P11 - P12 - P12^T + P22 is singular") from exc
    W1 = (P22 - P12.T) @ denom_inv
    W2 = (P11 - P12) @ denom_inv
    x_hat = W1 @ e1.x + W2 @ e2.x
    P0 = W1 @ P11 @ W1.T + W1 @ P12 @ W2.T + W2 @ P12.T @ W1.T + W2 @ P22 @ W2.T
    return FusedEstimate(x_hat, symmetrize(P0), "optimal", {"weights": np.stack([W1, W2])})


def bayesian_mc_fusion(
    estimates: Sequence[Estimate],
    n: float,
    M: int,
    rng: RandomStream,
) -> FusedEstimate:
    """Monte Carlo MMSE fusion with unknown cross-covariances.

    Draws ``M`` joint covariances from the conditional law of the cross
    blocks given the known diagonal blocks (Wishart prior with ``n``
    degrees of freedom), fuses optimally under each, and averages.

    The returned ``P`` is the average of the per-draw fused covariances.
    It is not a calibrated error covariance and tends to be optimistic,
    especially if fused outputs are fed back into further fusion.
    """
    k, m = _check_estimates(estimates)
    if int(M) != M or M < 1:
        raise ValueError(f"M must be a positive integer, got {M}")
    if k == 1:
        e = estimates[0]
        return FusedEstimate(e.x.copy(), e.P.copy(), "bayesian_mc", {"M": int(M), "rejected": 0})
    px, rejected = sample_joint_chain(diagonal_blocks(estimates), n, rng, size=int(M))
    x_hat, p0, _ = _fuse_batch(px, stack(estimates), m)
    return FusedEstimate(
        x_hat.mean(axis=0),
        symmetrize(p0.mean(axis=0)),
        "bayesian_mc",
        {"M": int(M), "rejected": int(rejected), "calibrated_covariance": False},
    )


def fast_ci_weights(pd: DiagonalBlocks | Sequence[ArrayLike]) -> NDArray:
    """Covariance intersection weights proportional to ``1 / tr(P_jj)``."""
    if not isinstance(pd, DiagonalBlocks):
        pd = DiagonalBlocks.from_list(pd)
    inv_tr = 1.0 / np.trace(pd.blocks, axis1=1, axis2=2)
    return inv_tr / inv_tr.sum()


def ci_fusion(estimates: Sequence[Estimate], weights: ArrayLike) -> FusedEstimate:
    """Covariance intersection: ``P0^{-1} = sum w_j P_jj^{-1}``."""
    k, m = _check_estimates(estimates)
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,):
        raise DimensionMismatch(f"need {k} weights, got shape {w.shape}")
    if np.any(w < 0) or np.any(w > 1) or abs(w.sum() - 1.0) > 1e-10:
        raise WeightSumError(f"weights must lie in [0, 1] and sum to 1, got {w}")
    if np.count_nonzero(w) == 1:
        e = estimates[int(np.flatnonzero(w)[0])]
        return FusedEstimate(e.x.copy(), e.P.copy(), "fast_ci", {"weights": w})
    info = np.zeros((m, m))
    vec = np.zeros(m)
    for wj, e in zip(w, estimates):
        if wj == 0:
            continue
        pinv = spd_inverse(e.P)
        info += wj * pinv
        vec += wj * pinv @ e.x
    P0 = spd_inverse(info)
    return FusedEstimate(P0 @ vec, P0, "fast_ci", {"weights": w})


def fast_ci_fusion(estimates: Sequence[Estimate]) -> FusedEstimate:
    return ci_fusion(estimates, fast_ci_weights(diagonal_blocks(estimates)))
