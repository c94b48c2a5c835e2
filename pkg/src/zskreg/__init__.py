"""Zero-shot regression toolkit.

Predict continuous values for targets that have no training instances,
using per-target side information.  The package provides:

* a joint feature/side-information kernel in three equivalent
  formulations (explicit expansion, per-call expansion, and a linear-cost
  combination of quadratic kernels), plus linear and quadratic kernels;
* an epsilon-SVR solved by deterministic sequential pairwise optimization;
* four zero-shot methods behind one contract: BL (side info as plain
  features), SR (inverse-distance blending of per-target models), MPLC
  (side info to model-parameter regression), and DSIL (one-phase learning
  under the joint kernel);
* seeded synthetic dataset generators (R and S families, timing grid);
* a zero-shot cross-validation benchmark with relative-MSE scoring and
  Friedman/Nemenyi rank statistics, plus a timing harness;
* a CLI: ``zskreg generate | benchmark | timing | fit | predict | stats``.
"""

from .data import (
    DataError,
    SideInfoTable,
    TargetSlice,
    ZeroShotDataset,
    load_dataset,
    slice_by_target,
)
from .datagen import (
    GeneratorCoefficients,
    SynthSpec,
    TimingGridSpec,
    generate,
    generate_timing_grid,
    generate_with_coefficients,
    sample_signed_uniform,
    save_dataset,
)
from .evaluation import (
    DEFAULT_C_GRID,
    BenchmarkReport,
    NemenyiResult,
    TimingCell,
    UndefinedScoreError,
    ZeroShotSplit,
    friedman_chi_squared,
    friedman_ranks,
    grid_search_c,
    in_sample_scores,
    make_splits,
    nemenyi_cd,
    relative_mse,
    run_benchmark,
    run_timing,
)
from .kernels import (
    JointArray,
    JointPoint,
    KernelSpec,
    cross_gram,
    dsil_kernel,
    gram_matrix,
    phi_expand,
    quadratic_kernel,
)
from .methods import (
    VARIANT_NAMES,
    ZeroShotRegressor,
    make_regressor,
    sr_similarity,
)
from .svr import ConvergenceWarning, LinearWeights, SvrConfig, SvrModel, extract_linear_weights

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "SideInfoTable",
    "TargetSlice",
    "ZeroShotDataset",
    "load_dataset",
    "slice_by_target",
    "GeneratorCoefficients",
    "SynthSpec",
    "TimingGridSpec",
    "generate",
    "generate_timing_grid",
    "generate_with_coefficients",
    "sample_signed_uniform",
    "save_dataset",
    "DEFAULT_C_GRID",
    "BenchmarkReport",
    "NemenyiResult",
    "TimingCell",
    "UndefinedScoreError",
    "ZeroShotSplit",
    "friedman_chi_squared",
    "friedman_ranks",
    "grid_search_c",
    "in_sample_scores",
    "make_splits",
    "nemenyi_cd",
    "relative_mse",
    "run_benchmark",
    "run_timing",
    "JointArray",
    "JointPoint",
    "KernelSpec",
    "cross_gram",
    "dsil_kernel",
    "gram_matrix",
    "phi_expand",
    "quadratic_kernel",
    "VARIANT_NAMES",
    "ZeroShotRegressor",
    "make_regressor",
    "sr_similarity",
    "ConvergenceWarning",
    "LinearWeights",
    "SvrConfig",
    "SvrModel",
    "extract_linear_weights",
]
