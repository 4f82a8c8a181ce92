"""Rank selection for noisy data matrices via signflip and permutation
parallel analysis, with the random-matrix diagnostics and limiting
spectral laws that justify the method under heterogeneous noise."""

from .dataio import (
    apply_preprocess,
    read_matrix_binary,
    read_matrix_csv,
    write_matrix_binary,
    write_matrix_csv,
)
from .diagnostics import (
    DestructionReport,
    PerceptibilityVerdict,
    RateRegime,
    classify_rate_regime,
    decay_coefficient,
    destruction_report,
    factor_loading_check,
    monte_carlo_flip_norm,
    outer_product_condition,
    perceptibility,
)
from .exceptions import ConvergenceError, ParseError
from .kernel import (
    EmpiricalSpectralDistribution,
    SingularSpectrum,
    esd,
    leading_singular_value,
    norm,
    singular_values,
)
from .randomize import (
    SeedSpec,
    gen_column_permutation,
    gen_rademacher,
    gen_spike_model,
    permute_columns,
    signflip,
)
from .select import PaConfig, SelectionResult, percentile, run_pa, run_pa_given_nulls
from .simlab import (
    SweepResult,
    experiment_hetero_grid,
    experiment_hetero_rows,
    experiment_homogeneous,
    homogenization_demo,
    noise_sv_distributions,
    profile_feature_sample_grid,
    profile_homogeneous,
    profile_row_blocks,
)
from .spectral import (
    MixtureH,
    SpectralLaw,
    StieltjesSolution,
    density_by_inversion,
    ks_distance,
    solve_stieltjes_permuted_law,
    solve_stieltjes_row_law,
    upper_edge,
)

__version__ = "0.1.0"
