"""Finite-dimensional experiments with C*-correspondences, Fock modules and Rokhlin towers."""
from .algebra import AlgElement, Automorphism, BlockMatrix, ScalarAlgebra, apply_automorphism, op_norm, sqrt_positive
from .correspondence import (Correspondence, TensorPowerCache, crossed_product_corr, direct_sum_corr, identity_corr,
                             random_fgp_corr, tensor, tensor_corr, twisted_free_corr)
from .dimcalc import CalculusConfig, explain, propagate
from .factorization import (CPMapSample, analytic_bound, certify_cpc_order_zero, incoming_map_sample, rho_band,
                            rho_map, row_gram_check, select_p, verify_factorization)
from .fock import (Band, DpAlgebra, DpElement, FockTruncation, GradedOperator, Tensor, bump, compression_norm_sweep,
                   creation, phi_compression, quasicentral_check)
from .modules import ModOperator, ModuleSpace, ModuleVector, inner, rank_one
from .rokhlin import (RokhlinTower, bump_sum_check, check_tower, exact_cyclic_tower, nonperiodicity_obstruction,
                      synthesize_cyclic_tower)

__version__ = "0.1.0"
