"""Computable signal-destruction and noise-level diagnostics: the
logarithmic decay coefficient, operator-norm bounds for signflipped
matrices, necessary-condition norms, rate-regime classification, factor
loading delocalization, and per-factor perceptibility verdicts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import svdvals

from .kernel import SingularSpectrum, check_matrix, norm
from .randomize import SeedSpec

__all__ = [
    "DestructionReport",
    "RateRegime",
    "PerceptibilityVerdict",
    "decay_coefficient",
    "destruction_report",
    "monte_carlo_flip_norm",
    "outer_product_condition",
    "classify_rate_regime",
    "factor_loading_check",
    "perceptibility",
]

#: numeric rank threshold, relative to the leading singular value
RANK_RTOL = 1e-10


def decay_coefficient(x) -> float:
    """Decay coefficient of the sorted row/column max-abs values.

    The n row maxima and p column maxima of |X| (the column l-inf norms of
    the symmetric embedding [[0, X], [X^T, 0]]) are sorted descending and
    the maximum of value * sqrt(log i) over 1-based positions i is
    returned. Natural log; sqrt(log 1) = 0.
    """
    x = check_matrix(x)
    col_max = np.max(np.abs(x), axis=0)
    row_max = np.max(np.abs(x), axis=1)
    vals = np.sort(np.concatenate([col_max, row_max]))[::-1]
    positions = np.arange(1, vals.size + 1, dtype=np.float64)
    return float(np.max(vals * np.sqrt(np.log(positions))))


@dataclass(frozen=True)
class DestructionReport:
    """Signal-destruction quantities for a candidate signal matrix.

    ``upper_bound_op`` is the computable upper-bound value
    max(two_inf, two_inf_t) + rho_inf for the expected operator norm of the
    signflipped matrix (up to the universal constant). ``necessary_norms``
    holds the five norms that must vanish for destruction to be possible.
    """

    n: int
    p: int
    rank: int
    two_inf: float
    two_inf_t: float
    rho_inf: float
    rank_bound_term: float
    abs_opnorm: float
    upper_bound_op: float
    necessary_norms: dict
    entrywise_k: float
    two_k_sum: float
    k: float

    def to_json_dict(self) -> dict:
        out = {
            "n": self.n,
            "p": self.p,
            "rank": self.rank,
            "two_inf": self.two_inf,
            "two_inf_t": self.two_inf_t,
            "rho_inf": self.rho_inf,
            "rank_bound_term": self.rank_bound_term,
            "abs_opnorm": self.abs_opnorm,
            "upper_bound_op": self.upper_bound_op,
            "necessary_norms": dict(self.necessary_norms),
            "entrywise_k": self.entrywise_k,
            "two_k_sum": self.two_k_sum,
            "k": self.k,
        }
        return out


def destruction_report(s, k_for_entrywise=4.0) -> DestructionReport:
    """All destruction-bound quantities for a signal matrix s."""
    s = check_matrix(s)
    if k_for_entrywise < 2:
        raise ValueError("k_for_entrywise must be >= 2")
    n, p = s.shape
    sv = svdvals(s)
    rank = int(np.sum(sv > RANK_RTOL * sv[0])) if sv[0] > 0 else 0
    two_inf = norm(s, "two_inf")
    two_inf_t = norm(s, "two_inf_transpose")
    rho = decay_coefficient(s)
    k = float(k_for_entrywise)
    necessary = {
        "inf_inf": norm(s, "inf_inf"),
        "fro_over_sqrt_n": norm(s, "frobenius") / np.sqrt(n),
        "fro_over_sqrt_p": norm(s, "frobenius") / np.sqrt(p),
        "induced_1_over_sqrt_n": norm(s, "induced_1") / np.sqrt(n),
        "induced_inf_over_sqrt_p": norm(s, "induced_inf") / np.sqrt(p),
    }
    return DestructionReport(
        n=n,
        p=p,
        rank=rank,
        two_inf=two_inf,
        two_inf_t=two_inf_t,
        rho_inf=rho,
        rank_bound_term=float(np.sqrt(rank * two_inf * two_inf_t)),
        abs_opnorm=norm(np.abs(s), "op"),
        upper_bound_op=max(two_inf, two_inf_t) + rho,
        necessary_norms=necessary,
        entrywise_k=norm(s, "entrywise", k=k),
        two_k_sum=norm(s, "two_k", k=k) ** k + norm(s.T, "two_k", k=k) ** k,
        k=k,
    )


def monte_carlo_flip_norm(s, trials, seed: SeedSpec):
    """Sample mean and standard error of the signflipped operator norm."""
    s = check_matrix(s)
    if trials < 2:
        raise ValueError("trials must be at least 2 to estimate a standard error")
    n, p = s.shape
    norms = np.empty(trials)
    for t in range(trials):
        rng = seed.generator(t)
        r = rng.integers(0, 2, size=(n, p)) * 2 - 1
        norms[t] = svdvals(s * r)[0]
    mean = float(norms.mean())
    stderr = float(norms.std(ddof=1) / np.sqrt(trials))
    return mean, stderr


def outer_product_condition(strengths, u_inf_norms, v_inf_norms) -> float:
    """Sum of theta_i * (||u_i||_inf + ||v_i||_inf) over spike terms.

    Comparing this value across a sequence of sizes assesses whether a sum
    of outer products is destroyed in expectation.
    """
    strengths = np.atleast_1d(np.asarray(strengths, dtype=np.float64))
    u_inf = np.atleast_1d(np.asarray(u_inf_norms, dtype=np.float64))
    v_inf = np.atleast_1d(np.asarray(v_inf_norms, dtype=np.float64))
    if strengths.size == 0:
        return 0.0
    if not (strengths.shape == u_inf.shape == v_inf.shape):
        raise ValueError("strengths and norm vectors must have equal lengths")
    if np.any(strengths < 0) or np.any(u_inf < 0) or np.any(v_inf < 0):
        raise ValueError("inputs must be nonnegative")
    return float(np.sum(strengths * (u_inf + v_inf)))


@dataclass(frozen=True)
class RateRegime:
    """Convergence verdicts for growth/delocalization exponent tuples.

    The signal delocalizes at rate p^(-alpha1) log^(-alpha2) p, its strength
    grows as p^beta1 log^beta2 p, and the number of spike terms grows as
    p^nu1 log^nu2 p. L1 destruction is guaranteed when alpha1 > nu1 + beta1,
    or at the boundary alpha1 = nu1 + beta1 when alpha2 > nu2 + beta2;
    almost-sure destruction (deterministic signals) needs the strict
    inequality alpha1 > nu1 + beta1.
    """

    alpha1: float
    alpha2: float
    beta1: float
    beta2: float
    nu1: float
    nu2: float
    verdict_l1: str = field(init=False)
    verdict_as: str = field(init=False)

    def __post_init__(self):
        lead = self.alpha1 - (self.nu1 + self.beta1)
        if lead > 0:
            l1 = "converges"
        elif lead == 0 and self.alpha2 > self.nu2 + self.beta2:
            l1 = "converges"
        else:
            l1 = "not_covered"
        object.__setattr__(self, "verdict_l1", l1)
        object.__setattr__(
            self, "verdict_as", "converges" if lead > 0 else "not_covered"
        )

    def to_json_dict(self) -> dict:
        return {
            "alpha1": self.alpha1,
            "alpha2": self.alpha2,
            "beta1": self.beta1,
            "beta2": self.beta2,
            "nu1": self.nu1,
            "nu2": self.nu2,
            "verdict_l1": self.verdict_l1,
            "verdict_as": self.verdict_as,
        }


def classify_rate_regime(alpha1, alpha2=0.0, beta1=0.0, beta2=0.0, nu1=0.0, nu2=0.0):
    """Classify exponents into destruction verdicts (rank-one: nu1=nu2=0)."""
    return RateRegime(
        alpha1=float(alpha1),
        alpha2=float(alpha2),
        beta1=float(beta1),
        beta2=float(beta2),
        nu1=float(nu1),
        nu2=float(nu2),
    )


def factor_loading_check(loadings, n):
    """Delocalization functionals of a scaled p x r factor loading matrix.

    Returns (sum of column l-inf norms, sqrt(log(n)/n) times the sum of
    column l2 norms); both must vanish as n grows for consistent selection
    in the factor model.
    """
    loadings = check_matrix(loadings)
    if n < 2:
        raise ValueError("n must be at least 2")
    sum_inf = float(np.sum(np.max(np.abs(loadings), axis=0)))
    sum_l2 = float(np.sum(np.linalg.norm(loadings, axis=0)))
    return sum_inf, float(np.sqrt(np.log(n) / n) * sum_l2)


@dataclass(frozen=True)
class PerceptibilityVerdict:
    """Per-factor labels against a noise upper edge with margin epsilon."""

    labels: tuple
    noise_edge: float
    margin: float


def perceptibility(
    data_sv: SingularSpectrum, noise_edge, epsilon
) -> PerceptibilityVerdict:
    """Label each factor perceptible / imperceptible / marginal.

    Factor k is perceptible when its singular value exceeds noise_edge +
    epsilon, imperceptible when it falls below noise_edge - epsilon, and
    marginal in between.
    """
    if epsilon < 0:
        raise ValueError("epsilon must be nonnegative")
    vals = (
        data_sv.values
        if isinstance(data_sv, SingularSpectrum)
        else np.asarray(data_sv, dtype=np.float64)
    )
    labels = []
    for v in vals:
        if v > noise_edge + epsilon:
            labels.append("perceptible")
        elif v < noise_edge - epsilon:
            labels.append("imperceptible")
        else:
            labels.append("marginal")
    return PerceptibilityVerdict(
        labels=tuple(labels), noise_edge=float(noise_edge), margin=float(epsilon)
    )
