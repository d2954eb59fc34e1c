"""Weighted mean-oscillation (Campanato-type) norms on finite atom-tree
filtrations, the explicit extremal constructions, and empirical
certificates for the pointwise-multiplier characterization."""

from .filtration import (Atom, FiltrationTree, TreeSpecError, build_dyadic,
                         build_from_spec, chain_to_root, check_chain_gaps,
                         parse_tree_config, regularity_constant, truncate)
from .functions import (LeafFunction, MartingaleSequence, atom_average,
                        central_p_integral, conditional_expectation, constant,
                        expectation, indicator, linf_norm, lp_norm,
                        martingale_of, random_functions)
from .phi import (PhiSpec, almost_monotone_constants, classify_regime,
                  default_grid, doubling_constant, eval_phi,
                  int_condition_constant, int_condition_power_weight, one,
                  phi_report, phi_star, power, powerlog, psi, quotient_phi,
                  table)
from .norms import (NormResult, campanato_norm, campanato_seminorm,
                    chi_norm_closed_form, f_norm_exact, f_norm_lower)
from .constructions import (ChainConstruction, chain_through_leaf,
                            dyadic_h_closed_form, extremal_chain_function,
                            h_function, lipschitz_compose_check,
                            sin_h_multiplier)
from .multiplier import (MultiplierReport, capital_F, check_product_estimate,
                         conditional_multiplier_check, default_test_family,
                         linf_bound_check, op_norm_lower_bound,
                         theorem1_certificate)
from .report import Check, VerificationReport

__version__ = "0.1.0"
