"""Dense matrix container checks, matrix norms, singular values, and
empirical spectral distributions.

A "data matrix" throughout this package is a real n x p float64 array with
rows as samples and columns as features; ``check_matrix`` is the single
validation gate. Singular values are always returned in descending order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import svdvals

from .exceptions import ConvergenceError

__all__ = [
    "check_matrix",
    "SingularSpectrum",
    "EmpiricalSpectralDistribution",
    "singular_values",
    "leading_singular_value",
    "norm",
    "esd",
]


def check_matrix(x, name="matrix"):
    """Validate and return a data matrix as a float64 2-D array.

    Raises ValueError when the input is not 2-D, is empty, or contains
    NaN/Inf entries.
    """
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={arr.ndim}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"{name} must have at least one row and one column")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite entries")
    return arr


@dataclass(frozen=True)
class SingularSpectrum:
    """Descending singular values of an n x p matrix."""

    values: np.ndarray
    n: int
    p: int

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", vals)
        if vals.ndim != 1 or len(vals) != min(self.n, self.p):
            raise ValueError("expected min(n, p) singular values")
        if np.any(vals < 0) or np.any(np.diff(vals) > 0):
            raise ValueError("singular values must be nonnegative and nonincreasing")

    def __len__(self):
        return len(self.values)


@dataclass(frozen=True)
class EmpiricalSpectralDistribution:
    """Uniform distribution on a finite spectrum (step CDF).

    ``kind`` records whether the points are singular values or eigenvalues.
    """

    points: np.ndarray
    kind: str = "singular"

    def __post_init__(self):
        if self.kind not in ("singular", "eigenvalue"):
            raise ValueError(f"unknown spectrum kind: {self.kind}")
        pts = np.sort(np.asarray(self.points, dtype=np.float64))
        object.__setattr__(self, "points", pts)

    def cdf(self, x):
        """Right-continuous step CDF: fraction of points <= x."""
        x = np.asarray(x, dtype=np.float64)
        return np.searchsorted(self.points, x, side="right") / len(self.points)

    def histogram(self, bin_edges):
        """Counts per caller-supplied bin, as ``numpy.histogram`` would."""
        counts, edges = np.histogram(self.points, bins=np.asarray(bin_edges))
        return counts, edges


def singular_values(x) -> SingularSpectrum:
    """Full set of min(n, p) singular values, descending.

    Uses a bidiagonalization-based full SVD; deterministic for fixed input.
    """
    arr = check_matrix(x)
    vals = svdvals(arr)
    return SingularSpectrum(values=vals, n=arr.shape[0], p=arr.shape[1])


def leading_singular_value(x, method="full", tol=1e-10, max_iter=5000) -> float:
    """Largest singular value, by full SVD or by power iteration on X^T X.

    The iterative path squares the matrix against its shorter side so each
    step costs one matrix-vector pair; it raises ConvergenceError (carrying
    the last iterate) when max_iter steps do not reach ``tol`` relative
    change in the estimate.
    """
    arr = check_matrix(x)
    if method == "full":
        return float(svdvals(arr)[0])
    if method != "iterative":
        raise ValueError(f"unknown method: {method}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")

    n, p = arr.shape
    work = arr if n >= p else arr.T  # iterate on the smaller Gram side
    rng = np.random.default_rng(0)  # fixed start keeps the op deterministic
    v = rng.standard_normal(work.shape[1])
    v /= np.linalg.norm(v)
    sigma = 0.0
    change = np.inf
    for _ in range(max_iter):
        w = work.T @ (work @ v)
        norm_w = np.linalg.norm(w)
        if norm_w == 0.0:
            return 0.0  # zero matrix
        v = w / norm_w
        sigma_new = float(np.sqrt(norm_w))
        change = abs(sigma_new - sigma)
        sigma = sigma_new
        if change <= tol * max(1.0, sigma):
            return sigma
    raise ConvergenceError(
        f"power iteration did not converge in {max_iter} iterations",
        last_iterate=sigma,
        residual=change,
        iterations=max_iter,
    )


def _entrywise_pq(arr, p_in, q_out):
    """Entrywise (p, q) norm: q-norm over columns of the column p-norms."""
    col = np.sum(np.abs(arr) ** p_in, axis=0) ** (1.0 / p_in)
    if np.isinf(q_out):
        return float(np.max(col))
    return float(np.sum(col**q_out) ** (1.0 / q_out))


def norm(x, which, k=None) -> float:
    """Matrix norms used throughout the theory.

    which:
        op               spectral norm (largest singular value)
        frobenius        entrywise l2
        induced_1        max column absolute sum
        induced_inf      max row absolute sum
        entrywise        (sum |a_ij|^k)^(1/k), requires k >= 1
        two_inf          max column l2 norm
        two_inf_transpose  max row l2 norm
        inf_inf          max |a_ij|
        two_k            k-norm over columns of column l2 norms, k >= 1
        schatten         k-norm of the singular values, k >= 1
    """
    arr = check_matrix(x)
    if which in ("entrywise", "two_k", "schatten"):
        if k is None or k < 1:
            raise ValueError(f"norm '{which}' requires k >= 1")
    if which == "op":
        return float(svdvals(arr)[0])
    if which == "frobenius":
        return float(np.linalg.norm(arr, "fro"))
    if which == "induced_1":
        return float(np.max(np.sum(np.abs(arr), axis=0)))
    if which == "induced_inf":
        return float(np.max(np.sum(np.abs(arr), axis=1)))
    if which == "entrywise":
        return _entrywise_pq(arr, k, k)
    if which == "two_inf":
        return _entrywise_pq(arr, 2, np.inf)
    if which == "two_inf_transpose":
        return _entrywise_pq(arr.T, 2, np.inf)
    if which == "inf_inf":
        return float(np.max(np.abs(arr)))
    if which == "two_k":
        return _entrywise_pq(arr, 2, k)
    if which == "schatten":
        sv = svdvals(arr)
        return float(np.sum(sv**k) ** (1.0 / k))
    raise ValueError(f"unknown norm kind: {which}")


def esd(spectrum: SingularSpectrum, kind="singular") -> EmpiricalSpectralDistribution:
    """Empirical spectral distribution of a computed spectrum.

    kind="singular" uses the values as-is; kind="eigenvalue" squares them
    (eigenvalues of the Gram matrix of the source).
    """
    if kind == "singular":
        pts = spectrum.values
    elif kind == "eigenvalue":
        pts = spectrum.values**2
    else:
        raise ValueError(f"unknown spectrum kind: {kind}")
    return EmpiricalSpectralDistribution(points=pts, kind=kind)
