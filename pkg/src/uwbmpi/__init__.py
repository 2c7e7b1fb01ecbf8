"""Multipath interference power statistics for impulse-radio UWB systems
under the IEEE 802.15.4a clustered channel model.

The package pairs a closed-form chain (cluster-hit probabilities, path
counts, PDP approximation, Gamma-mixture interference law) with a
Monte-Carlo channel oracle used to validate it.
"""

from .cluster_stats import (
    chip_cluster_probabilities,
    cluster_arrival_pdf,
    j_bar_integral,
    j_integral,
    prob_chip_before_first_cluster,
    prob_chip_cluster_index,
    prob_chip_in_cluster,
    taylor_remainder,
)
from .compare import ComparisonReport, binned_tv_distance, build_comparison, tv_distance
from .errors import (
    BudgetError,
    NumericalError,
    ParameterLoadError,
    ParameterValidationError,
)
from .interference import (
    MixedDistribution,
    interference_distribution,
    interference_pdf_given_L,
    interference_pdf_given_n_L,
    last_cluster_delay_pdf,
    mean_pdp,
    path_power_pdf,
    pdp_approx,
    pdp_sampled,
    unit_energy_scale,
)
from .oracle import (
    ChannelRealization,
    McConditional,
    McEstimate,
    generate_realization,
    interference_power,
    interfering_path_count,
    mc_conditional,
    mc_interference,
)
from .params import (
    LOS,
    NLOS,
    ChannelParams,
    OracleExtras,
    default_params_path,
    fit_single_ray_rate,
    load_params,
    mean_nakagami_m,
)
from .path_counts import (
    DiscretePmf,
    path_count_pmf,
    prob_paths_given_L,
    prob_paths_given_k_L,
    prob_paths_in_cluster,
    prob_paths_over_clusters,
    prob_zero_paths,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
