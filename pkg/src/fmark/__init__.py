"""Summary characteristics for point patterns with function-valued marks.

The package covers the full analysis chain: a data model for planar
patterns whose points carry multivariate mark curves, kernel estimators
of the cross-function second-order characteristics and nearest-neighbour
indices, simulators for the reference point processes and the
growth-interaction mark scheme, Monte-Carlo rank envelopes for the
random-labeling and CSR nulls, and a CSV/CLI layer for reproducible runs.
"""

__version__ = "0.1.0"

from .errors import DomainError, SchemaError
from .patterns import (
    DistanceGrid,
    FunctionalMarkSet,
    PointPattern,
    TimeGrid,
    Window,
    default_distance_grid,
    distance_matrix,
    functional_mean,
    integrate_over_time,
    pairwise_distance,
    unit_torus,
)
from .testfuncs import (
    MultiTestFunctionSpec,
    TestFunction,
    eval_multifunction_testfn,
    eval_testfn,
    eval_testfn_integrated,
    pairwise_integral_matrix,
)
from .kernels import EstimationConfig, kernel_value, stoyan_bandwidth
from .estimators import (
    SummaryCurve,
    chat,
    estimate_kappa_generic,
    ground_product_density,
    mark_characteristic,
    mark_product_density,
    mark_weighted_k,
    mark_weighted_l,
    mark_weighted_pcf,
    u_function,
)
from .neighbours import IndexReport, knn_indices, nn_indices
from .simulate import (
    GrowthParams,
    SimulationSpec,
    sim_poisson,
    sim_strauss,
    sim_thomas,
    simulate_growth_marks,
    simulate_pattern,
)
from .envelopes import (
    EnvelopeBand,
    StatisticRequest,
    csr_envelope,
    parse_statistic,
    random_label_envelope,
)
from .dataio import (
    AnalysisConfig,
    load_pattern,
    parse_config_file,
    read_curve_csv,
    write_results,
)
