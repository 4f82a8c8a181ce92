"""Parallel-analysis rank selection with signflip or permutation nulls and
pairwise or upper-edge comparison rules.

The selected rank is the number of leading data singular values strictly
above the alpha-percentile of their null analogues, scanning sequentially
from the top and stopping at the first failure.
"""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import svdvals

from .kernel import SingularSpectrum, check_matrix, singular_values
from .randomize import SeedSpec

__all__ = [
    "PaConfig",
    "SelectionResult",
    "percentile",
    "run_pa",
    "run_pa_given_nulls",
]

METHODS = ("signflip", "permutation")
COMPARISONS = ("pairwise", "upper_edge")

# subkey domains separating the trial streams of the two null constructions
_SIGNFLIP_DOMAIN = 1
_PERMUTATION_DOMAIN = 2


@dataclass(frozen=True)
class PaConfig:
    """Inputs of a parallel-analysis run."""

    method: str = "signflip"
    comparison: str = "pairwise"
    alpha: float = 95.0
    trials: int = 10
    max_rank: int | None = None
    seed: SeedSpec = field(default_factory=lambda: SeedSpec(0))
    workers: int = 1

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"method must be one of {METHODS}")
        if self.comparison not in COMPARISONS:
            raise ValueError(f"comparison must be one of {COMPARISONS}")
        if not (0.0 < self.alpha <= 100.0):
            raise ValueError("alpha must lie in (0, 100]")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.max_rank is not None and self.max_rank < 0:
            raise ValueError("max_rank must be nonnegative")
        if self.workers < 1:
            raise ValueError("workers must be at least 1")


@dataclass(frozen=True)
class SelectionResult:
    """Outcome of one selection: chosen rank plus the full comparison trace.

    ``null_percentiles[k]`` is the threshold the (k+1)-st data singular
    value was compared against, and ``trace[k]`` records whether it was
    strictly above. ``capped`` is set when no comparison failed before
    max_rank was exhausted.
    """

    k_hat: int
    data_sv: SingularSpectrum
    null_percentiles: np.ndarray
    trace: np.ndarray
    capped: bool
    method: str
    comparison: str
    alpha: float
    trials: int
    seed: SeedSpec | None = None


def percentile(samples, alpha) -> float:
    """Nearest-rank alpha-percentile: ascending order statistic at index
    ceil(alpha/100 * len(samples)), 1-based. alpha=100 is the maximum."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1 or samples.size == 0:
        raise ValueError("samples must be a nonempty 1-D vector")
    if not (0.0 < alpha <= 100.0):
        raise ValueError("alpha must lie in (0, 100]")
    order = np.sort(samples)
    idx = int(np.ceil(alpha / 100.0 * samples.size))
    return float(order[max(idx, 1) - 1])


def _scan(data_vals, thresholds):
    """First k with data_vals[k] <= thresholds[k]; capped when none."""
    above = data_vals > thresholds
    stops = np.flatnonzero(~above)
    if stops.size:
        return int(stops[0]), above, False
    return len(thresholds) - 1, above, True


def run_pa_given_nulls(
    data_sv,
    null_sv_per_trial,
    comparison="pairwise",
    alpha=95.0,
    max_rank=None,
    method="given",
    seed=None,
) -> SelectionResult:
    """Deterministic re-scoring of a selection from precomputed null spectra.

    ``null_sv_per_trial`` is a trials x m array of descending null singular
    values; pairwise comparison needs m > max_rank while upper-edge only
    reads column 0. ``run_pa`` is exactly null generation followed by this
    function.
    """
    if comparison not in COMPARISONS:
        raise ValueError(f"comparison must be one of {COMPARISONS}")
    if isinstance(data_sv, SingularSpectrum):
        spectrum = data_sv
    else:
        vals = np.asarray(data_sv, dtype=np.float64)
        spectrum = SingularSpectrum(values=vals, n=len(vals), p=len(vals))
    nulls = np.atleast_2d(np.asarray(null_sv_per_trial, dtype=np.float64))

    limit = len(spectrum) - 1
    if max_rank is None:
        max_rank = limit
    max_rank = min(max_rank, limit)
    if comparison == "pairwise" and nulls.shape[1] < max_rank + 1:
        raise ValueError(
            f"pairwise comparison up to rank {max_rank} needs {max_rank + 1} "
            f"null singular values per trial, got {nulls.shape[1]}"
        )

    if comparison == "pairwise":
        thresholds = np.array(
            [percentile(nulls[:, k], alpha) for k in range(max_rank + 1)]
        )
    else:
        thresholds = np.full(max_rank + 1, percentile(nulls[:, 0], alpha))

    k_hat, trace, capped = _scan(spectrum.values[: max_rank + 1], thresholds)
    if capped:
        warnings.warn(
            f"selection never stopped before max_rank={max_rank}; result is capped",
            stacklevel=2,
        )
    return SelectionResult(
        k_hat=k_hat,
        data_sv=spectrum,
        null_percentiles=thresholds,
        trace=trace,
        capped=capped,
        method=method,
        comparison=comparison,
        alpha=float(alpha),
        trials=nulls.shape[0],
        seed=seed,
    )


def null_singular_values(x, method, seed: SeedSpec, trials, workers=1, top_only=False):
    """trials x m array of descending null singular values for x.

    Trial t derives its generator from stream subkeys (domain, t), so the
    output is independent of execution order and worker count. With
    ``top_only`` only the leading value is kept (upper-edge comparison).
    """
    x = check_matrix(x)
    if method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    n, p = x.shape
    domain = _SIGNFLIP_DOMAIN if method == "signflip" else _PERMUTATION_DOMAIN

    def one_trial(t):
        gen = seed.generator(domain, t)
        if method == "signflip":
            null = x * (gen.integers(0, 2, size=(n, p)) * 2 - 1)
        else:
            perm = np.argsort(gen.random((n, p)), axis=0)
            null = np.take_along_axis(x, perm, axis=0)
        vals = svdvals(null)
        return vals[:1] if top_only else vals

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one_trial, range(trials)))
    else:
        rows = [one_trial(t) for t in range(trials)]
    return np.vstack(rows)


def run_pa(x, cfg: PaConfig) -> SelectionResult:
    """Parallel analysis on a data matrix per the supplied configuration."""
    x = check_matrix(x)
    if cfg.method not in METHODS:
        raise ValueError(f"method must be one of {METHODS}")
    spectrum = singular_values(x)
    limit = len(spectrum) - 1
    max_rank = limit if cfg.max_rank is None else min(cfg.max_rank, limit)
    nulls = null_singular_values(
        x,
        cfg.method,
        cfg.seed,
        cfg.trials,
        workers=cfg.workers,
        top_only=(cfg.comparison == "upper_edge"),
    )
    return run_pa_given_nulls(
        spectrum,
        nulls,
        comparison=cfg.comparison,
        alpha=cfg.alpha,
        max_rank=max_rank,
        method=cfg.method,
        seed=cfg.seed,
    )
