"""palign: two-modality latent alignment as a linear inverse problem.

Paired data matrices are stacked (second modality negated) and the
alignment maps are read off the left singular vectors with the smallest
singular values: exact when the stacked matrix is rank-deficient enough,
Frobenius-optimal otherwise. Ships with synthetic world generators, error
metrics, robustness sweeps, a linear contrastive baseline and a CLI.
"""

from .contrastive import ContrastiveConfig, info_nce_loss, train_linear_contrastive
from .errors import DataError, NumericalError
from .experiments import (
    EmbeddingAlignment,
    EmbeddingPairSet,
    SuiteResult,
    SweepAxis,
    SweepConfig,
    SweepFixed,
    SweepRecord,
    align_embeddings,
    linear_separability,
    load_embedding_pairs,
    plot_sweep,
    run_boundary_suite,
    run_sweep,
    run_synthetic_suite,
)
from .metrics import MetricReport, cmae, make_report, mlre, mlre_avg, ncmae
from .solver import (
    AlignmentProblem,
    AlignmentSolution,
    SvdMode,
    encode,
    left_null_dimension,
    numerical_rank,
    solve_alignment,
    split_solution,
    stack_modalities,
    verify_perfect,
)
from .synthetic import (
    GmmSpec,
    SyntheticWorld,
    default_gmm_spec,
    generate_modality,
    load_world,
    make_boundary_world,
    make_gmm_world,
    pseudo_inverse_encode,
    random_transform,
    sample_gmm_latents,
    sample_uniform_boundary_latents,
    save_world,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentProblem",
    "AlignmentSolution",
    "ContrastiveConfig",
    "DataError",
    "EmbeddingAlignment",
    "EmbeddingPairSet",
    "GmmSpec",
    "MetricReport",
    "NumericalError",
    "SuiteResult",
    "SvdMode",
    "SweepAxis",
    "SweepConfig",
    "SweepFixed",
    "SweepRecord",
    "SyntheticWorld",
    "align_embeddings",
    "cmae",
    "default_gmm_spec",
    "encode",
    "generate_modality",
    "info_nce_loss",
    "left_null_dimension",
    "linear_separability",
    "load_embedding_pairs",
    "load_world",
    "make_boundary_world",
    "make_gmm_world",
    "make_report",
    "mlre",
    "mlre_avg",
    "ncmae",
    "numerical_rank",
    "plot_sweep",
    "pseudo_inverse_encode",
    "random_transform",
    "run_boundary_suite",
    "run_sweep",
    "run_synthetic_suite",
    "sample_gmm_latents",
    "sample_uniform_boundary_latents",
    "save_world",
    "solve_alignment",
    "split_solution",
    "stack_modalities",
    "train_linear_contrastive",
    "verify_perfect",
]
