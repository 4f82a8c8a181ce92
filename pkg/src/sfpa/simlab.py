"""End-to-end simulation experiments: selection sweeps over signal
strength under homogeneous and heterogeneous noise, leading-noise-value
comparisons, and the homogenization demonstration comparing empirical
spectra to their solved limiting laws.

All experiments are pure functions of (seed, configuration) with fixed
aggregation order, so reruns are bit-identical regardless of worker count.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.linalg import svdvals

from .kernel import EmpiricalSpectralDistribution, singular_values
from .randomize import SeedSpec, _noise_entries, gen_spike_model
from .select import null_singular_values, run_pa_given_nulls
from .spectral import MixtureH, SpectralLaw, density_by_inversion, ks_distance

__all__ = [
    "DEFAULT_N",
    "DEFAULT_P",
    "DEFAULT_THETA_GRID",
    "METHOD_RULES",
    "profile_homogeneous",
    "profile_row_blocks",
    "profile_feature_sample_grid",
    "row_variance_mixture",
    "column_mean_square_mixture",
    "SweepResult",
    "run_sweep",
    "experiment_homogeneous",
    "experiment_hetero_rows",
    "experiment_hetero_grid",
    "noise_sv_distributions",
    "NoiseSvSamples",
    "homogenization_demo",
    "HomogenizationDemo",
]

DEFAULT_N = 500
DEFAULT_P = 300

#: theta from 0 to 4 in steps of 0.25
DEFAULT_THETA_GRID = tuple(np.arange(0.0, 4.0001, 0.25))

METHOD_RULES = (
    ("signflip", "pairwise"),
    ("signflip", "upper_edge"),
    ("permutation", "pairwise"),
    ("permutation", "upper_edge"),
)

HETERO_ROW_BLOCKS = ((0.9, 0.4), (0.1, 1.0))


def profile_homogeneous(n, p, scaled_variance=1.0):
    """Profile T with constant noise variance scaled_variance / n."""
    if scaled_variance < 0:
        raise ValueError("scaled_variance must be nonnegative")
    return np.full((n, p), np.sqrt(scaled_variance))


def profile_row_blocks(n, p, blocks):
    """Row-wise piecewise-constant profile.

    ``blocks`` is a sequence of (fraction, scaled_variance) pairs: that
    fraction of the samples gets noise variance scaled_variance / n.
    Fractions must sum to 1.
    """
    blocks = list(blocks)
    fracs = np.array([f for f, _ in blocks], dtype=np.float64)
    variances = np.array([v for _, v in blocks], dtype=np.float64)
    if np.any(fracs < 0) or abs(fracs.sum() - 1.0) > 1e-9:
        raise ValueError("block fractions must be nonnegative and sum to 1")
    if np.any(variances < 0):
        raise ValueError("block variances must be nonnegative")
    bounds = np.round(np.concatenate([[0.0], np.cumsum(fracs)]) * n).astype(int)
    bounds[-1] = n
    t = np.empty((n, p))
    for b, (lo, hi) in enumerate(zip(bounds[:-1], bounds[1:])):
        t[lo:hi, :] = np.sqrt(variances[b])
    return t


def profile_feature_sample_grid(
    n,
    p,
    hetero_feature_fraction=0.8,
    low=0.5,
    high=1.5,
    flat=1.0,
):
    """Feature/sample grid profile with homogenized column averages.

    A ``hetero_feature_fraction`` share of the features has noise variance
    low/n on the first half of the samples and high/n on the second half;
    the remaining features have flat/n throughout. With low + high = 2*flat
    every column mean-square variance equals flat.
    """
    if not (0.0 <= hetero_feature_fraction <= 1.0):
        raise ValueError("hetero_feature_fraction must lie in [0, 1]")
    if min(low, high, flat) < 0:
        raise ValueError("variances must be nonnegative")
    split_col = int(round(hetero_feature_fraction * p))
    split_row = n // 2
    t = np.full((n, p), np.sqrt(flat))
    t[:split_row, :split_col] = np.sqrt(low)
    t[split_row:, :split_col] = np.sqrt(high)
    return t


def row_variance_mixture(profile) -> MixtureH:
    """Mixing distribution of row variances T_i^2 for a row-constant profile."""
    profile = np.asarray(profile, dtype=np.float64)
    if np.any(profile != profile[:, :1]):
        raise ValueError("profile must be constant within each row")
    row_vars = profile[:, 0] ** 2
    atoms, counts = np.unique(row_vars, return_counts=True)
    return MixtureH(atoms=atoms, weights=counts / len(row_vars))


def column_mean_square_mixture(profile) -> MixtureH:
    """Mixing distribution of column mean squares (1/n) sum_i T_ij^2."""
    profile = np.asarray(profile, dtype=np.float64)
    col_ms = np.mean(profile**2, axis=0)
    atoms, counts = np.unique(col_ms, return_counts=True)
    return MixtureH(atoms=atoms, weights=counts / len(col_ms))


@dataclass(frozen=True)
class SweepResult:
    """Mean selected rank and selection-frequency histograms per method/rule
    combination across a signal-strength grid."""

    theta_grid: np.ndarray
    combos: tuple
    mean_k: np.ndarray  # combos x thetas
    freq: np.ndarray  # combos x thetas x (max k + 1), rows sum to runs
    runs: int
    seed: SeedSpec
    n: int
    p: int
    alpha: float
    trials: int

    def mean_for(self, method, comparison):
        return self.mean_k[self.combos.index((method, comparison))]

    def to_csv(self, path):
        kmax = self.freq.shape[2] - 1
        header = "theta,method,rule,mean_k," + ",".join(
            f"freq_{k}" for k in range(kmax + 1)
        )
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(header + "\n")
            for c, (method, rule) in enumerate(self.combos):
                for j, theta in enumerate(self.theta_grid):
                    freqs = ",".join(str(int(v)) for v in self.freq[c, j])
                    fh.write(f"{theta:.17g},{method},{rule},{self.mean_k[c, j]:.17g},{freqs}\n")

    def to_json_dict(self) -> dict:
        return {
            "theta_grid": [float(t) for t in self.theta_grid],
            "combos": [list(c) for c in self.combos],
            "mean_k": [[float(v) for v in row] for row in self.mean_k],
            "freq": [[[int(v) for v in h] for h in rows] for rows in self.freq],
            "runs": self.runs,
            "seed": {"master_seed": self.seed.master_seed, "stream_id": self.seed.stream_id},
            "n": self.n,
            "p": self.p,
            "alpha": self.alpha,
            "trials": self.trials,
        }

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def run_sweep(
    seed: SeedSpec,
    runs,
    theta_grid,
    profile=None,
    n=DEFAULT_N,
    p=DEFAULT_P,
    alpha=95.0,
    trials=10,
    noise_dist="gaussian",
    workers=1,
) -> SweepResult:
    """Selection sweep over theta for all four method/rule combinations.

    Each run draws one spiked data matrix; the two comparison rules of a
    method share the same null trials, so the upper-edge selection can
    never exceed the pairwise one (checked on every run).
    """
    if runs < 1:
        raise ValueError("runs must be at least 1")
    theta_grid = np.asarray(theta_grid, dtype=np.float64)
    selections = np.zeros((len(METHOD_RULES), len(theta_grid), runs), dtype=int)

    for j, theta in enumerate(theta_grid):
        for r in range(runs):
            run_seed = seed.stream(seed.stream_id + 1 + j * runs + r)
            x, _, _ = gen_spike_model(
                run_seed, n, p, strengths=[theta], profile=profile, noise_dist=noise_dist
            )
            data_sv = singular_values(x)
            for method in ("signflip", "permutation"):
                nulls = null_singular_values(x, method, run_seed, trials, workers=workers)
                pw = run_pa_given_nulls(
                    data_sv, nulls, "pairwise", alpha, method=method, seed=run_seed
                )
                ue = run_pa_given_nulls(
                    data_sv, nulls, "upper_edge", alpha, method=method, seed=run_seed
                )
                if ue.k_hat > pw.k_hat:
                    raise AssertionError(
                        "upper-edge selection exceeded pairwise on shared trials"
                    )
                selections[METHOD_RULES.index((method, "pairwise")), j, r] = pw.k_hat
                selections[METHOD_RULES.index((method, "upper_edge")), j, r] = ue.k_hat

    kmax = int(selections.max())
    freq = np.zeros((len(METHOD_RULES), len(theta_grid), kmax + 1), dtype=int)
    for c in range(len(METHOD_RULES)):
        for j in range(len(theta_grid)):
            freq[c, j] = np.bincount(selections[c, j], minlength=kmax + 1)
    return SweepResult(
        theta_grid=theta_grid,
        combos=METHOD_RULES,
        mean_k=selections.mean(axis=2),
        freq=freq,
        runs=runs,
        seed=seed,
        n=n,
        p=p,
        alpha=float(alpha),
        trials=trials,
    )


def experiment_homogeneous(
    seed: SeedSpec,
    runs=100,
    theta_grid=DEFAULT_THETA_GRID,
    n=DEFAULT_N,
    p=DEFAULT_P,
    alpha=95.0,
    trials=10,
    workers=1,
) -> SweepResult:
    """Rank-one spike in noise of variance 1/n."""
    return run_sweep(
        seed, runs, theta_grid, profile=None, n=n, p=p, alpha=alpha, trials=trials,
        workers=workers,
    )


def experiment_hetero_rows(
    seed: SeedSpec,
    runs=100,
    theta_grid=DEFAULT_THETA_GRID,
    n=DEFAULT_N,
    p=DEFAULT_P,
    alpha=95.0,
    trials=10,
    workers=1,
) -> SweepResult:
    """90% of the samples at noise variance 0.4/n, the rest at 1/n."""
    profile = profile_row_blocks(n, p, HETERO_ROW_BLOCKS)
    return run_sweep(
        seed, runs, theta_grid, profile=profile, n=n, p=p, alpha=alpha, trials=trials,
        workers=workers,
    )


def experiment_hetero_grid(
    seed: SeedSpec,
    runs=100,
    theta_grid=DEFAULT_THETA_GRID,
    n=DEFAULT_N,
    p=DEFAULT_P,
    alpha=95.0,
    trials=10,
    workers=1,
) -> SweepResult:
    """Feature/sample noise grid whose column average variances are all 1/n."""
    profile = profile_feature_sample_grid(n, p)
    return run_sweep(
        seed, runs, theta_grid, profile=profile, n=n, p=p, alpha=alpha, trials=trials,
        workers=workers,
    )


@dataclass(frozen=True)
class NoiseSvSamples:
    """Monte Carlo samples of the leading singular value of pure noise and
    of its permuted and signflipped versions (paired per draw)."""

    original: np.ndarray
    permuted: np.ndarray
    signflipped: np.ndarray
    seed: SeedSpec
    n: int
    p: int

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("draw,original,permuted,signflipped\n")
            for i, (o, q, f) in enumerate(
                zip(self.original, self.permuted, self.signflipped)
            ):
                fh.write(f"{i},{o:.17g},{q:.17g},{f:.17g}\n")

    def to_json_dict(self) -> dict:
        return {
            "original": [float(v) for v in self.original],
            "permuted": [float(v) for v in self.permuted],
            "signflipped": [float(v) for v in self.signflipped],
            "seed": {"master_seed": self.seed.master_seed, "stream_id": self.seed.stream_id},
            "n": self.n,
            "p": self.p,
        }


def noise_sv_distributions(
    seed: SeedSpec, trials, profile=None, n=DEFAULT_N, p=DEFAULT_P, noise_dist="gaussian"
) -> NoiseSvSamples:
    """Sample sigma_1 of noise N, permuted noise, and signflipped noise."""
    if trials < 10:
        raise ValueError("trials must be at least 10")
    if profile is not None:
        profile = np.asarray(profile, dtype=np.float64)
        if profile.shape != (n, p):
            raise ValueError(f"profile shape {profile.shape} does not match ({n}, {p})")
    orig = np.empty(trials)
    perm = np.empty(trials)
    flip = np.empty(trials)
    for i in range(trials):
        rng = seed.generator(i)
        e = _noise_entries(rng, (n, p), noise_dist)
        noise = (profile * e if profile is not None else e) / np.sqrt(n)
        signs = rng.integers(0, 2, size=(n, p)) * 2 - 1
        columns = np.argsort(rng.random((n, p)), axis=0)
        orig[i] = svdvals(noise)[0]
        flip[i] = svdvals(noise * signs)[0]
        perm[i] = svdvals(np.take_along_axis(noise, columns, axis=0))[0]
    return NoiseSvSamples(
        original=orig, permuted=perm, signflipped=flip, seed=seed, n=n, p=p
    )


@dataclass(frozen=True)
class HomogenizationDemo:
    """Empirical spectra of one heterogeneous noise draw, its signflipped
    and permuted versions, and the corresponding solved limiting laws
    (eigenvalue scale)."""

    esd_original: EmpiricalSpectralDistribution
    esd_signflipped: EmpiricalSpectralDistribution
    esd_permuted: EmpiricalSpectralDistribution
    row_law: SpectralLaw
    permuted_law: SpectralLaw
    ks: dict

    def save(self, out_dir):
        import os

        os.makedirs(out_dir, exist_ok=True)
        self.row_law.to_csv(os.path.join(out_dir, "row_law.csv"))
        self.permuted_law.to_csv(os.path.join(out_dir, "permuted_law.csv"))
        for name, esd_obj in (
            ("original", self.esd_original),
            ("signflipped", self.esd_signflipped),
            ("permuted", self.esd_permuted),
        ):
            with open(os.path.join(out_dir, f"esd_{name}.csv"), "w", encoding="utf-8") as fh:
                fh.write("eigenvalue\n")
                for v in esd_obj.points:
                    fh.write(f"{v:.17g}\n")
        with open(os.path.join(out_dir, "summary.json"), "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "ks": self.ks,
                    "row_law_upper_edge": self.row_law.upper_edge,
                    "permuted_law_upper_edge": self.permuted_law.upper_edge,
                },
                fh,
                indent=2,
                sort_keys=True,
            )
            fh.write("\n")


def homogenization_demo(
    seed: SeedSpec,
    n=DEFAULT_N,
    p=DEFAULT_P,
    grid=None,
    epsilon=1e-4,
) -> HomogenizationDemo:
    """Half the samples at noise variance 0.1/n, half at 0.9/n: permuting
    columns homogenizes the profile while signflipping preserves it."""
    profile = profile_row_blocks(n, p, ((0.5, 0.1), (0.5, 0.9)))
    rng = seed.generator(0)
    e = rng.standard_normal((n, p))
    noise = profile * e / np.sqrt(n)
    signs = rng.integers(0, 2, size=(n, p)) * 2 - 1
    columns = np.argsort(rng.random((n, p)), axis=0)

    def eig_points(mat):
        return EmpiricalSpectralDistribution(points=svdvals(mat) ** 2, kind="eigenvalue")

    esd_orig = eig_points(noise)
    esd_flip = eig_points(noise * signs)
    esd_perm = eig_points(np.take_along_axis(noise, columns, axis=0))

    gamma = p / n
    if grid is None:
        grid = np.linspace(1e-4, 2.2, 800)
    row_law = density_by_inversion(
        "row_variance_law", gamma, row_variance_mixture(profile), grid, epsilon=epsilon
    )
    permuted_law = density_by_inversion(
        "permuted_column_law", gamma, column_mean_square_mixture(profile), grid,
        epsilon=epsilon,
    )
    ks = {
        "signflipped_vs_row_law": ks_distance(esd_flip.points, row_law),
        "permuted_vs_permuted_law": ks_distance(esd_perm.points, permuted_law),
        "permuted_vs_row_law": ks_distance(esd_perm.points, row_law),
        "original_vs_row_law": ks_distance(esd_orig.points, row_law),
    }
    return HomogenizationDemo(
        esd_original=esd_orig,
        esd_signflipped=esd_flip,
        esd_permuted=esd_perm,
        row_law=row_law,
        permuted_law=permuted_law,
        ks=ks,
    )
