"""
Simulation models and the trial/aggregation engine.

Model 1 draws the joint covariance itself from a Wishart distribution and
the estimates from a zero-mean normal with that covariance.  Model 2 is
the hierarchical setting of distributed filtering: a common state with
random covariance ``Sigma_0`` observed by ``k`` nodes with independent
random noise covariances, so every cross block equals ``Sigma_0``.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence, Union

import numpy as np

from .blocks import JointCovariance
from .errors import FusionError, ValidationError
from .fusion import (
    METHODS,
    Estimate,
    bayesian_mc_fusion,
    fast_ci_fusion,
    optimal_fusion,
)
from .rng import RandomStream
from .sampling import WishartParams, sample_wishart

# child stream ids within one trial
DATA_STREAM = 0
MC_STREAM = 1


@dataclass(frozen=True)
class Model1Config:
    k: int = 2
    m: int = 2
    sigma2: float = 1.0
    n_gen: int | None = None
    n_prior: int | None = None
    mc_samples: int = 100
    trials: int = 10000
    seed: int = 0
    methods: tuple[str, ...] = METHODS
    model: int = field(default=1, init=False)

    def __post_init__(self):
        if self.n_gen is None:
            object.__setattr__(self, "n_gen", 3 * self.k)
        if self.n_prior is None:
            object.__setattr__(self, "n_prior", 3 * self.k)
        object.__setattr__(self, "methods", tuple(self.methods))
        _validate_common(self)
        if self.m < 1:
            raise ValidationError("m must be >= 1")
        if self.n_gen < self.k * self.m:
            raise ValidationError(f"n_gen must be >= k*m = {self.k * self.m}")

    @property
    def sigma0_2(self):
        return None


@dataclass(frozen=True)
class Model2Config:
    k: int = 2
    sigma0_2: float = 0.2
    sigma2: float = 1.0
    dof_hyper: int = 3
    n_prior: int | None = None
    mc_samples: int = 100
    trials: int = 10000
    seed: int = 0
    methods: tuple[str, ...] = METHODS
    model: int = field(default=2, init=False)
    m: int = field(default=2, init=False)

    def __post_init__(self):
        if self.n_prior is None:
            object.__setattr__(self, "n_prior", 3 * self.k)
        object.__setattr__(self, "methods", tuple(self.methods))
        _validate_common(self)
        if not self.sigma0_2 > 0:
            raise ValidationError("sigma0_2 must be > 0")
        if int(self.dof_hyper) != self.dof_hyper or self.dof_hyper < self.m:
            raise ValidationError(f"dof_hyper must be an integer >= {self.m}")


Config = Union[Model1Config, Model2Config]


def _validate_common(cfg) -> None:
    if int(cfg.k) != cfg.k or cfg.k < 2:
        raise ValidationError("k must be >= 2")
    if not cfg.sigma2 > 0:
        raise ValidationError("sigma2 must be > 0")
    if int(cfg.n_prior) != cfg.n_prior or cfg.n_prior < cfg.k * cfg.m:
        raise ValidationError(f"n_prior must be an integer >= k*m = {cfg.k * cfg.m}")
    if int(cfg.mc_samples) != cfg.mc_samples or cfg.mc_samples < 1:
        raise ValidationError("mc_samples must be >= 1")
    if int(cfg.trials) != cfg.trials or cfg.trials < 1:
        raise ValidationError("trials must be >= 1")
    if int(cfg.seed) != cfg.seed or not 0 <= cfg.seed < 2**64:
        raise ValidationError("seed must be a 64-bit unsigned integer")
    unknown = set(cfg.methods) - set(METHODS)
    if unknown or not cfg.methods:
        raise ValidationError(f"methods must be a non-empty subset of {METHODS}")


@dataclass
class Trial:
    x0: np.ndarray
    estimates: list[Estimate]
    px: JointCovariance


def _gaussian(cov: np.ndarray, rng: RandomStream) -> np.ndarray:
    return np.linalg.cholesky(cov) @ rng.normal(cov.shape[0])


def gen_model1_trial(cfg: Model1Config, rng: RandomStream) -> Trial:
    km = cfg.k * cfg.m
    px = sample_wishart(WishartParams(cfg.n_gen, cfg.sigma2 * np.eye(km)), rng)
    x = _gaussian(px, rng)
    joint = JointCovariance(px, cfg.m)
    m = cfg.m
    estimates = [Estimate(x[j * m:(j + 1) * m], joint.block(j, j)) for j in range(cfg.k)]
    return Trial(np.zeros(m), estimates, joint)


def gen_model2_trial(cfg: Model2Config, rng: RandomStream) -> Trial:
    m, k = cfg.m, cfg.k
    sigma0 = sample_wishart(WishartParams(cfg.dof_hyper, cfg.sigma0_2 * np.eye(m)), rng)
    noise = [sample_wishart(WishartParams(cfg.dof_hyper, cfg.sigma2 * np.eye(m)), rng) for _ in range(k)]
    x0 = _gaussian(sigma0, rng)
    xs = [x0 + _gaussian(s, rng) for s in noise]
    px = np.tile(sigma0, (k, k))
    for j, s in enumerate(noise):
        px[j * m:(j + 1) * m, j * m:(j + 1) * m] += s
    joint = JointCovariance(px, m)
    estimates = [Estimate(x, joint.block(j, j)) for j, x in enumerate(xs)]
    return Trial(x0, estimates, joint)


def generate_trial(cfg: Config, rng: RandomStream) -> Trial:
    if cfg.model == 1:
        return gen_model1_trial(cfg, rng)
    return gen_model2_trial(cfg, rng)


@dataclass
class TrialOutcome:
    """Per-method squared error and fused vector for one trial."""

    sq_error: dict[str, float]
    fused: dict[str, np.ndarray]
    rejected: int = 0


def run_trial(trial: Trial, methods: Sequence[str], n_prior: int, M: int, rng: RandomStream) -> TrialOutcome:
    """Fuse one trial's estimates with each requested method.

    ``optimal`` sees the true joint covariance; the other methods only see
    the per-node covariances carried by the estimates.
    """
    fused, sq, rejected = {}, {}, 0
    for method in METHODS:
        if method not in methods:
            continue
        if method == "optimal":
            if len(trial.estimates) == 1:
                res = trial.estimates[0].x
            else:
                res = optimal_fusion(trial.estimates, trial.px).x
        elif method == "bayesian_mc":
            out = bayesian_mc_fusion(trial.estimates, n_prior, M, rng)
            rejected += out.diagnostics["rejected"]
            res = out.x
        else:
            res = fast_ci_fusion(trial.estimates).x
        fused[method] = res
        sq[method] = float(np.sum((res - trial.x0) ** 2))
    return TrialOutcome(sq, fused, rejected)


def trial_stream(seed: int, index: int) -> RandomStream:
    return RandomStream(seed, (index,))


def simulate_trial(cfg: Config, index: int) -> TrialOutcome:
    stream = trial_stream(cfg.seed, index)
    trial = generate_trial(cfg, stream.child(DATA_STREAM))
    return run_trial(trial, cfg.methods, cfg.n_prior, cfg.mc_samples, stream.child(MC_STREAM))


def _simulate_range(cfg: Config, start: int, stop: int):
    errs = np.empty((stop - start, len(cfg.methods)))
    fused = np.empty((stop - start, len(cfg.methods), cfg.m))
    rejected = 0
    for i in range(start, stop):
        try:
            out = simulate_trial(cfg, i)
        except FusionError as exc:
            raise RuntimeError(f"trial {i} (seed {cfg.seed}) failed: {exc}") from exc
        for c, method in enumerate(cfg.methods):
            errs[i - start, c] = out.sq_error[method]
            fused[i - start, c] = out.fused[method]
        rejected += out.rejected
    return errs, fused, rejected


@dataclass
class MethodStats:
    mse: float
    mse_stderr: float
    nmse: float
    mean_estimate: np.ndarray
    mean_estimate_stderr: float


@dataclass
class AggregateResult:
    config: Config
    trials: int
    methods: dict[str, MethodStats]
    rejected: int = 0
    sq_errors: np.ndarray | None = field(default=None, repr=False)

    def __getitem__(self, method: str) -> MethodStats:
        return self.methods[method]

    def diff_stderr(self, a: str, b: str) -> float:
        """Standard error of ``mse(a) - mse(b)`` from the paired per-trial errors."""
        idx = self.config.methods.index
        d = self.sq_errors[:, idx(a)] - self.sq_errors[:, idx(b)]
        return float(d.std(ddof=1) / math.sqrt(len(d))) if len(d) > 1 else 0.0


def aggregate(cfg: Config, errs: np.ndarray, fused: np.ndarray, rejected: int = 0) -> AggregateResult:
    n = errs.shape[0]
    mse = errs.mean(axis=0)
    stderr = errs.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mse)
    mean_est = fused.mean(axis=0)
    if n > 1:
        # sqrt(tr Cov / N): the RMS length of the error in the mean vector
        est_err = np.sqrt(fused.var(axis=0, ddof=1).sum(axis=-1) / n)
    else:
        est_err = np.zeros(len(cfg.methods))
    ref = mse[cfg.methods.index("optimal")] if "optimal" in cfg.methods else math.nan
    stats = {}
    for c, method in enumerate(cfg.methods):
        nmse = 1.0 if method == "optimal" else float(mse[c] / ref)
        stats[method] = MethodStats(float(mse[c]), float(stderr[c]), nmse, mean_est[c], float(est_err[c]))
    return AggregateResult(cfg, n, stats, rejected, errs)


def _chunks(trials: int, workers: int) -> list[tuple[int, int]]:
    size = max(1, math.ceil(trials / (4 * workers)))
    return [(s, min(trials, s + size)) for s in range(0, trials, size)]


def run_experiment(cfg: Config, workers: int = 1) -> AggregateResult:
    """Run ``cfg.trials`` independent trials and aggregate per-method errors.

    Each trial draws from a stream addressed by ``(seed, trial index)``,
    so ``workers`` changes wall time only.
    """
    if workers <= 1:
        errs, fused, rejected = _simulate_range(cfg, 0, cfg.trials)
    else:
        spans = _chunks(cfg.trials, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_simulate_range, [cfg] * len(spans), *zip(*spans)))
        errs = np.concatenate([p[0] for p in parts])
        fused = np.concatenate([p[1] for p in parts])
        rejected = sum(p[2] for p in parts)
    return aggregate(cfg, errs, fused, rejected)


def config_dict(cfg: Config) -> dict:
    d = asdict(cfg)
    d["methods"] = list(cfg.methods)
    return d
