"""roughmarket: probability-free trading constructions and variation
functionals on positive step price paths."""

from ._kernels import HAVE_NUMBA, default_backend
from ._version import __version__
from .experiments import (
    ExperimentConfig,
    RunReport,
    emit_plot_data,
    run_experiment,
    write_report,
)
from .mixtures import (
    GridLevel,
    GridStrategyMixture,
    Prop3Report,
    StrategyMixture,
    crossing_explosion_mixture,
    run_mixture,
    unboundedness_mixture,
    verify_prop3_bound,
    volatility_mixture,
)
from .paths import (
    GeneratorSpec,
    PricePath,
    discretize,
    generate,
    make_path,
    read_path,
    write_path,
)
from .strategies import (
    AtIndex,
    BorrowReport,
    CapitalTrace,
    HitAbove,
    HitBelow,
    SimpleStrategy,
    StoppingRule,
    borrowing_free_check,
    clairvoyant_strategy,
    doob_strategy,
    run_simple,
    upper_prob_singleton,
)
from .variation import (
    CrossingCount,
    VariationFunctional,
    brute_force_var_phi,
    crossings,
    grid_crossings,
    phi_admissible,
    psi,
    qvar_profile,
    var_p,
    var_phi,
    var_signed,
    variation_growth_profile,
)

__all__ = [
    "__version__",
    "HAVE_NUMBA",
    "default_backend",
    "PricePath",
    "GeneratorSpec",
    "make_path",
    "generate",
    "discretize",
    "read_path",
    "write_path",
    "VariationFunctional",
    "psi",
    "var_phi",
    "var_p",
    "brute_force_var_phi",
    "var_signed",
    "CrossingCount",
    "crossings",
    "grid_crossings",
    "phi_admissible",
    "qvar_profile",
    "variation_growth_profile",
    "StoppingRule",
    "HitBelow",
    "HitAbove",
    "AtIndex",
    "SimpleStrategy",
    "CapitalTrace",
    "run_simple",
    "doob_strategy",
    "clairvoyant_strategy",
    "upper_prob_singleton",
    "borrowing_free_check",
    "BorrowReport",
    "StrategyMixture",
    "GridLevel",
    "GridStrategyMixture",
    "run_mixture",
    "volatility_mixture",
    "Prop3Report",
    "verify_prop3_bound",
    "unboundedness_mixture",
    "crossing_explosion_mixture",
    "ExperimentConfig",
    "RunReport",
    "run_experiment",
    "emit_plot_data",
    "write_report",
]
