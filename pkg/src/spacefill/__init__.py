"""Space-filling designs for computer experiments, with a kriging testbed."""

__version__ = "0.1.0"

from .criteria import (  # noqa: E402
    CriterionSpec,
    DomainBox,
    Kind,
    ard,
    centered_l2_discrepancy,
    column_correlations,
    evaluate,
    fill_distance_estimate,
    lq_distance,
    maxpro,
    min_interpoint_distance,
    phi_p,
    star_discrepancy,
    uniform_projection,
)
from .design import (  # noqa: E402
    LatinHypercube,
    halton_sequence,
    random_latin_hypercube,
    realize,
    validate_latin_hypercube,
)
from .oa import (  # noqa: E402
    OrthogonalArray,
    oa_based_lhd,
    olh_factor_bound,
    parse_oa,
    projection_cell_counts,
    verify_strength,
)
from .optimize import AnnealSchedule, SearchResult, anneal, exchange_move, multi_restart  # noqa: E402
from .gp import FitConfig, GPModel, KernelSpec, fit, kernel_eval, predict_mean  # noqa: E402
from .testbed import BenchmarkConfig, eval_simulator, rmspe, run_benchmark  # noqa: E402
