"""Critical groups of doubly regular tournaments and skew Hadamard matrices."""

from .algebra_core import AbelianGroup, Character, CyclotomicInt, FiniteField, make_cyclic, make_field
from .exact_linalg import GroupStructure, critical_group, local_snf, p_rank, rank, snf, snf_minor_gcd
from .hadamard import check_hadamard_snf, drt_to_hadamard, hadamard_to_drt
from .sdf import SkewDifferenceFamily, search_sdf, validate_sdf
from .theory import (counting_profile, predict_k1, predict_paley, predict_sz, predict_w, verify_prediction)
from .tournaments import (Tournament, build_cayley_drt, build_sz, build_w, dy_tournament, laplacian,
                          paley_tournament, validate_drt)

__version__ = "0.1.0"
