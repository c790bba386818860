"""Rate models and closed-form condition checkers."""

from .base import (
    ExclusionModel,
    ExclusionParams,
    LocalTableModel,
    RateModel,
    TableEntry,
    ZeroModel,
    as_fraction,
    conservative_table_model,
    constant_entry,
)
from .bdm import BDMModel, BDMParams, allee_params, bdm_rate, binomial_params, msdc_params
from .conditions import (
    binomial_closed_form,
    check_allee_attractive,
    check_bdm_attractive,
    check_bdm_comparability,
    check_exclusion_attractive,
    check_gs_conservative,
    check_msdc,
    check_msdc_attractive,
)
from .zoo import (
    nonconservative_example_rates,
    two_species_attractive,
    two_species_gamma,
    two_species_rates,
)
from .specfile import FAMILIES, ModelSpec, build_spec, closed_form, load, loads
