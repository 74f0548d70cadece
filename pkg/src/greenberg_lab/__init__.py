"""Filtration of p-class groups in cyclotomic towers: exact group arithmetic,
order formulas, Iwasawa fitting and bound audits, and a Monte Carlo model of
the filtration length with an exact Markov-chain oracle."""

from .filtration import (
    FiltrationTrace,
    GModule,
    InvalidModuleError,
    filtration_level,
    filtration_trace,
    verify_filtration_properties,
)
from .formulas import (
    FieldInstance,
    IwasawaFit,
    Layer,
    chevalley_order,
    check_greenberg_equivalences,
    check_theorem_bounds,
    genus_order,
    iwasawa_fit,
    rebase_invariants,
    stabilization_analysis,
    step_quotient_order,
)
from .io import parse_instance, parse_module
from .pgroup import (
    AbelianPGroup,
    Element,
    PHom,
    Subgroup,
    hom_kernel,
    order_valuation,
    quotient,
    smith_normal_form,
    subgroup_generated,
    uniform_element,
)
from .stochastic import (
    BACKEND,
    BDistribution,
    SimModel,
    draw_step,
    exact_expected_steps,
    make_model,
    monte_carlo,
    run_trial,
)

__version__ = "0.1.0"
