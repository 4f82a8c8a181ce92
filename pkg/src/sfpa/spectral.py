"""Limiting spectral laws of heterogeneous noise: fixed-point solvers for
the Stieltjes transforms, density recovery by inversion, and support-edge
location.

Two laws are covered, both on the eigenvalue scale of the p x p Gram
matrix N^T N:

* the row-variance law, driven by the mixing distribution H of row
  variances:        z + 1/m = integral t / (1 + gamma t m) dH(t)
* the permuted-column law, driven by the mixing distribution H of column
  mean-square variances:
      1 + 1/(gamma (z m + 1) - 1)
          = integral gamma t / (gamma t (z m + 1) + z - t) dH(t)

Each is solved by damped fixed-point iteration in the upper half plane,
where the solution is unique.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .exceptions import ConvergenceError

__all__ = [
    "MixtureH",
    "StieltjesSolution",
    "SpectralLaw",
    "solve_stieltjes_row_law",
    "solve_stieltjes_permuted_law",
    "density_by_inversion",
    "upper_edge",
    "ks_distance",
]

LAW_KINDS = ("row_variance_law", "permuted_column_law")

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 50_000
DEFAULT_EDGE_THRESHOLD = 1e-4


@dataclass(frozen=True)
class MixtureH:
    """Finite atomic mixing distribution: nonnegative atoms with weights
    summing to one (within 1e-12)."""

    atoms: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        atoms = np.atleast_1d(np.asarray(self.atoms, dtype=np.float64))
        weights = np.atleast_1d(np.asarray(self.weights, dtype=np.float64))
        if atoms.shape != weights.shape or atoms.ndim != 1 or atoms.size == 0:
            raise ValueError("atoms and weights must be matching nonempty vectors")
        if np.any(atoms < 0):
            raise ValueError("atoms must be nonnegative")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1 within 1e-12")
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def point_mass(cls, t: float) -> "MixtureH":
        return cls(atoms=np.array([t]), weights=np.array([1.0]))

    @classmethod
    def from_pairs(cls, pairs) -> "MixtureH":
        pairs = list(pairs)
        return cls(
            atoms=np.array([t for t, _ in pairs]),
            weights=np.array([w for _, w in pairs]),
        )

    @classmethod
    def from_quadrature(cls, density_fn, grid) -> "MixtureH":
        """Approximate a continuous mixing density by trapezoid-cell atoms."""
        grid = np.asarray(grid, dtype=np.float64)
        vals = np.asarray([density_fn(t) for t in grid], dtype=np.float64)
        cells = np.zeros_like(grid)
        cells[:-1] += 0.5 * np.diff(grid) * vals[:-1]
        cells[1:] += 0.5 * np.diff(grid) * vals[1:]
        total = cells.sum()
        if total <= 0:
            raise ValueError("quadrature mass must be positive")
        return cls(atoms=grid, weights=cells / total)


@dataclass(frozen=True)
class StieltjesSolution:
    """A solved point of a Stieltjes-transform fixed-point equation.

    Solutions live in the upper half plane: Im m > 0 whenever Im z > 0.
    """

    z: complex
    m: complex
    residual: float
    iterations: int

    def __post_init__(self):
        if not (self.m.imag > 0.0):
            raise ValueError(
                f"solution left the upper half plane: m={self.m} at z={self.z}"
            )


def _damped_fixed_point(step, z, m0, tol, max_iter, residual_fn):
    """Damped iteration m <- (1-lam) m + lam step(m), lam=0.5 with a 0.1
    fallback, stopping when the equation residual is within tol."""
    for lam in (0.5, 0.1):
        m = m0
        last_residual = np.inf
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            for it in range(1, max_iter + 1):
                m_next = (1.0 - lam) * m + lam * step(m)
                if not np.isfinite(m_next.real) or not np.isfinite(m_next.imag):
                    break
                m = m_next
                if it % 8 == 0 or it <= 64:
                    last_residual = residual_fn(m)
                    if last_residual <= tol:
                        return m, last_residual, it
            last_residual = residual_fn(m) if np.isfinite(m.real) else np.inf
        if last_residual <= tol:
            return m, last_residual, it
    raise ConvergenceError(
        f"Stieltjes fixed point did not reach tol={tol:g} at z={z}",
        last_iterate=m,
        residual=float(last_residual),
        iterations=max_iter,
    )


def solve_stieltjes_row_law(
    z,
    gamma,
    h: MixtureH,
    tol=DEFAULT_TOL,
    max_iter=DEFAULT_MAX_ITER,
    m0=None,
) -> StieltjesSolution:
    """Solve z + 1/m = integral t/(1 + gamma t m) dH(t) for m in C+."""
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("z must have positive imaginary part")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    atoms, weights = h.atoms, h.weights

    def step(m):
        integral = np.sum(weights * atoms / (1.0 + gamma * atoms * m))
        return 1.0 / (integral - z)

    def residual(m):
        integral = np.sum(weights * atoms / (1.0 + gamma * atoms * m))
        return abs(z + 1.0 / m - integral)

    m0 = -1.0 / z if m0 is None else complex(m0)
    m, res, iters = _damped_fixed_point(step, z, m0, tol, max_iter, residual)
    return StieltjesSolution(z=z, m=m, residual=res, iterations=iters)


def solve_stieltjes_permuted_law(
    z,
    gamma,
    h: MixtureH,
    tol=DEFAULT_TOL,
    max_iter=DEFAULT_MAX_ITER,
    m0=None,
) -> StieltjesSolution:
    """Solve the permuted-column law for m in C+.

    Iterates on w = z m + 1, for which the equation rearranges to
    w = I(w) / (gamma (I(w) - 1)) with
    I(w) = integral gamma t / (gamma t w + z - t) dH(t).
    """
    z = complex(z)
    if z.imag <= 0:
        raise ValueError("z must have positive imaginary part")
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    atoms, weights = h.atoms, h.weights

    def step(w):
        integral = np.sum(weights * gamma * atoms / (gamma * atoms * w + z - atoms))
        return integral / (gamma * (integral - 1.0))

    def residual(w):
        m = (w - 1.0) / z
        lhs = 1.0 + 1.0 / (gamma * (z * m + 1.0) - 1.0)
        rhs = np.sum(
            weights * gamma * atoms / (gamma * atoms * (z * m + 1.0) + z - atoms)
        )
        return abs(lhs - rhs)

    w0 = z * (-1.0 / z if m0 is None else complex(m0)) + 1.0
    w, res, iters = _damped_fixed_point(step, z, w0, tol, max_iter, residual)
    return StieltjesSolution(z=z, m=(w - 1.0) / z, residual=res, iterations=iters)


_SOLVERS = {
    "row_variance_law": solve_stieltjes_row_law,
    "permuted_column_law": solve_stieltjes_permuted_law,
}


@dataclass(frozen=True)
class SpectralLaw:
    """A limiting spectral density tabulated on a grid (eigenvalue scale)."""

    grid: np.ndarray
    density: np.ndarray
    upper_edge: float
    gamma: float
    source: str
    epsilon: float
    mixture: MixtureH | None = None

    def mass(self) -> float:
        """Trapezoid integral of the density over the grid."""
        return float(np.trapezoid(self.density, self.grid))

    def cdf_on_grid(self) -> np.ndarray:
        """Cumulative trapezoid integral, normalized to end at 1."""
        cdf = np.concatenate(
            [[0.0], np.cumsum(0.5 * (self.density[1:] + self.density[:-1]) * np.diff(self.grid))]
        )
        total = cdf[-1]
        if total <= 0:
            raise ValueError("law has zero mass on its grid")
        return cdf / total

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("x,density\n")
            for x, d in zip(self.grid, self.density):
                fh.write(f"{x:.17g},{d:.17g}\n")

    def to_json_dict(self) -> dict:
        out = {
            "source": self.source,
            "gamma": self.gamma,
            "epsilon": self.epsilon,
            "upper_edge": self.upper_edge,
            "grid": [float(v) for v in self.grid],
            "density": [float(v) for v in self.density],
        }
        if self.mixture is not None:
            out["mixture"] = {
                "atoms": [float(t) for t in self.mixture.atoms],
                "weights": [float(w) for w in self.mixture.weights],
            }
        return out

    def to_json(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _density_at(law_kind, x, epsilon, gamma, h, tol, max_iter):
    sol = _SOLVERS[law_kind](complex(x, epsilon), gamma, h, tol=tol, max_iter=max_iter)
    return max(sol.m.imag / np.pi, 0.0)


def density_by_inversion(
    law_kind,
    gamma,
    h: MixtureH,
    grid,
    epsilon=None,
    edge_threshold=DEFAULT_EDGE_THRESHOLD,
    tol=DEFAULT_TOL,
    max_iter=DEFAULT_MAX_ITER,
) -> SpectralLaw:
    """Recover a law's density on a grid via Im m(x + i eps) / pi.

    ``epsilon`` defaults to 1e-3 times the grid span. The upper support
    edge is located from the last grid point whose density exceeds
    ``edge_threshold`` and refined by bisection on the density. Solver
    failure at any grid point raises ConvergenceError naming the point.
    """
    if law_kind not in LAW_KINDS:
        raise ValueError(f"law_kind must be one of {LAW_KINDS}")
    grid = np.asarray(grid, dtype=np.float64)
    if grid.ndim != 1 or grid.size < 2 or np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be a strictly increasing vector of length >= 2")
    if epsilon is None:
        epsilon = 1e-3 * (grid[-1] - grid[0])
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")

    density = np.empty_like(grid)
    for i, x in enumerate(grid):
        try:
            density[i] = _density_at(law_kind, x, epsilon, gamma, h, tol, max_iter)
        except ConvergenceError as exc:
            raise ConvergenceError(
                f"density inversion failed at grid point x={x:g}: {exc}",
                last_iterate=exc.last_iterate,
                residual=exc.residual,
                iterations=exc.iterations,
            ) from exc

    if np.all(h.atoms == 0.0):
        edge = 0.0  # degenerate mixture: the law is a point mass at zero
    else:
        edge = _locate_upper_edge(
            law_kind, grid, density, epsilon, gamma, h, edge_threshold, tol, max_iter
        )
    return SpectralLaw(
        grid=grid,
        density=density,
        upper_edge=edge,
        gamma=float(gamma),
        source=law_kind,
        epsilon=float(epsilon),
        mixture=h,
    )


def _locate_upper_edge(
    law_kind, grid, density, epsilon, gamma, h, threshold, tol, max_iter
):
    above = np.flatnonzero(density > threshold)
    if above.size == 0:
        # degenerate law (e.g. all mass at zero): support collapses to 0
        return 0.0
    i = above[-1]
    if i == len(grid) - 1:
        return float(grid[-1])  # support reaches past the grid
    lo, hi = grid[i], grid[i + 1]
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if _density_at(law_kind, mid, epsilon, gamma, h, tol, max_iter) > threshold:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-12 * max(1.0, abs(hi)):
            break
    return float(0.5 * (lo + hi))


def upper_edge(law: SpectralLaw, threshold=None, scale="eigenvalue") -> float:
    """Upper support edge of a solved law.

    With ``threshold`` the edge is re-derived from the stored density grid
    at that level; otherwise the solver-refined edge is returned. Use
    scale="singular_value" to convert the eigenvalue-scale edge to the
    singular-value scale (square root).
    """
    if scale not in ("eigenvalue", "singular_value"):
        raise ValueError("scale must be 'eigenvalue' or 'singular_value'")
    if threshold is None:
        edge = law.upper_edge
    elif law.mixture is None:
        # no solver context: nearest grid crossing without refinement
        if np.all(law.density <= 0):
            raise ValueError("law density is identically zero")
        above = np.flatnonzero(law.density > threshold)
        if above.size == 0:
            raise ValueError("no density above threshold")
        edge = float(law.grid[above[-1]])
    else:
        if np.all(law.density <= 0):
            raise ValueError("law density is identically zero")
        edge = _locate_upper_edge(
            law.source,
            law.grid,
            law.density,
            law.epsilon,
            law.gamma,
            law.mixture,
            threshold,
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
        )
    return float(np.sqrt(edge)) if scale == "singular_value" else float(edge)


def ks_distance(points, law: SpectralLaw) -> float:
    """Kolmogorov-Smirnov distance between an empirical spectrum (eigenvalue
    scale) and a solved law, using the law's normalized trapezoid CDF."""
    pts = np.sort(np.asarray(points, dtype=np.float64))
    cdf = law.cdf_on_grid()
    law_at_pts = np.interp(pts, law.grid, cdf, left=0.0, right=1.0)
    k = pts.size
    upper = np.arange(1, k + 1) / k
    lower = np.arange(0, k) / k
    return float(
        max(np.max(np.abs(law_at_pts - upper)), np.max(np.abs(law_at_pts - lower)))
    )
