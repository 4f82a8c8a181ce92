"""Deterministic seeded generation of signflip matrices, column-wise
permutations, and the spiked signal-plus-noise simulation models.

Every random quantity is produced from a ``SeedSpec``: a (master_seed,
stream_id) pair mapped to an independent PCG64 stream via numpy's
``SeedSequence`` spawn keys. Identical pairs reproduce identical output;
distinct stream ids give streams that are independent by construction, so
Monte Carlo trials can run in any order or in parallel without changing
results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .kernel import check_matrix

__all__ = [
    "SeedSpec",
    "gen_rademacher",
    "signflip",
    "gen_column_permutation",
    "permute_columns",
    "gen_spike_model",
    "NOISE_DISTRIBUTIONS",
]

#: unit-variance noise families with a sharp sub-Gaussian Laplace transform
NOISE_DISTRIBUTIONS = ("gaussian", "rademacher", "uniform_pm_sqrt3")


@dataclass(frozen=True)
class SeedSpec:
    """Addressable random stream: (master_seed, stream_id)."""

    master_seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not (0 <= int(self.master_seed) < 2**64):
            raise ValueError("master_seed must fit in 64 unsigned bits")
        if not (0 <= int(self.stream_id) < 2**64):
            raise ValueError("stream_id must fit in 64 unsigned bits")

    def stream(self, stream_id: int) -> "SeedSpec":
        """Sibling stream under the same master seed."""
        return SeedSpec(self.master_seed, stream_id)

    def generator(self, *subkeys: int) -> np.random.Generator:
        """Generator for this stream, or a child stream keyed by ``subkeys``.

        Children with distinct subkey tuples are mutually independent and
        independent of the parent.
        """
        key = (self.stream_id,) + tuple(int(s) for s in subkeys)
        seq = np.random.SeedSequence(entropy=int(self.master_seed), spawn_key=key)
        return np.random.default_rng(seq)


def gen_rademacher(seed: SeedSpec, n: int, p: int) -> np.ndarray:
    """n x p matrix of i.i.d. uniform +-1 entries (float64)."""
    if n < 1 or p < 1:
        raise ValueError("n and p must be at least 1")
    rng = seed.generator()
    return (rng.integers(0, 2, size=(n, p)) * 2 - 1).astype(np.float64)


def signflip(x, r) -> np.ndarray:
    """Entrywise product with a +-1 matrix; preserves Frobenius norm exactly."""
    x = check_matrix(x)
    r = np.asarray(r, dtype=np.float64)
    if r.shape != x.shape:
        raise ValueError(f"shape mismatch: data {x.shape} vs signs {r.shape}")
    if not np.all(np.abs(r) == 1.0):
        raise ValueError("sign matrix entries must be +-1")
    return x * r


def gen_column_permutation(seed: SeedSpec, n: int, p: int) -> np.ndarray:
    """p independent uniform permutations of 0..n-1, one per column.

    Returned as an n x p integer array whose column j is the permutation
    applied to column j.
    """
    if n < 1 or p < 1:
        raise ValueError("n and p must be at least 1")
    rng = seed.generator()
    # argsort of iid uniforms is a uniform permutation, drawn for all
    # columns in one call so the stream consumption is shape-stable
    return np.argsort(rng.random((n, p)), axis=0)


def permute_columns(x, perm) -> np.ndarray:
    """Shuffle each column j of x by its own permutation perm[:, j]."""
    x = check_matrix(x)
    perm = np.asarray(perm)
    if perm.shape != x.shape:
        raise ValueError(f"shape mismatch: data {x.shape} vs permutation {perm.shape}")
    n = x.shape[0]
    if not np.all(np.sort(perm, axis=0) == np.arange(n)[:, None]):
        raise ValueError("each column of perm must be a permutation of 0..n-1")
    return np.take_along_axis(x, perm, axis=0)


def _unit_sphere(rng, dim):
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _noise_entries(rng, shape, dist):
    if dist == "gaussian":
        return rng.standard_normal(shape)
    if dist == "rademacher":
        return (rng.integers(0, 2, size=shape) * 2 - 1).astype(np.float64)
    if dist == "uniform_pm_sqrt3":
        return rng.uniform(-np.sqrt(3.0), np.sqrt(3.0), size=shape)
    raise ValueError(f"unknown noise distribution: {dist} (choose from {NOISE_DISTRIBUTIONS})")


def gen_spike_model(
    seed: SeedSpec,
    n: int,
    p: int,
    strengths=(),
    profile=None,
    noise_dist="gaussian",
):
    """Draw (X, S, N) with X = S + N from a spiked signal-plus-noise model.

    S sums rank-one spikes theta_i * u_i v_i^T with u_i, v_i independent and
    uniform on the unit spheres. N = (T o E) / sqrt(n) where T is the
    variance profile (entry (i, j) of N has variance T_ij^2 / n; T=1
    everywhere when ``profile`` is None) and E has i.i.d. zero-mean
    unit-variance entries from ``noise_dist``. All three matrices are
    returned so tests can check signal and noise separately.
    """
    if n < 1 or p < 1:
        raise ValueError("n and p must be at least 1")
    strengths = np.atleast_1d(np.asarray(strengths, dtype=np.float64))
    if strengths.size and np.any(strengths < 0):
        raise ValueError("spike strengths must be nonnegative")
    if profile is not None:
        profile = np.asarray(profile, dtype=np.float64)
        if profile.shape != (n, p):
            raise ValueError(f"profile shape {profile.shape} does not match ({n}, {p})")
        if np.any(profile < 0):
            raise ValueError("variance profile entries must be nonnegative")

    rng = seed.generator()
    s = np.zeros((n, p))
    for theta in strengths:
        u = _unit_sphere(rng, n)
        v = _unit_sphere(rng, p)
        s += theta * np.outer(u, v)
    e = _noise_entries(rng, (n, p), noise_dist)
    if profile is not None:
        e = profile * e
    noise = e / np.sqrt(n)
    return s + noise, s, noise
