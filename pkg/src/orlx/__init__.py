"""Orlicz bumps, reverse Hölder weights, sparse domination and limited-range extrapolation on dyadic grids."""

from .dyadic import Cube, Grid, GridFunction, Partition, all_partitions, dilate3, load, shifted_grids, store
from .fractional import (bi_fractional_direct, bi_fractional_dyadic, bm_fractional_direct,
                         less_singular_fractional)
from .maximal import bisublinear_maximal, frac_maximal_bilinear, maximal, orlicz_maximal
from .orlicz import gen_holder, holder_pair, indicator_norm_formula, orlicz_norm, orlicz_norms
from .rubio import ExponentTriple, build_H, build_H_small_p, estimate_opnorm, exponents, rubio_iterate
from .sparse import (NotSparseError, SparseFamily, cz_stopping, czo_apply, sparse_apply, sparse_apply2,
                     sparse_check, sparse_dominate, stopping_sparse)
from .weights import (WeightReport, a1_characteristic, ainfty_condition, ap_characteristic, gen_a1,
                      gen_rhinf_ap_pair, rh_characteristic)
from .young import (BpVerdict, LogBump, NumericConjugate, Oscillatory, OuterRescale, Power, YoungFunction,
                    from_descriptor)

__version__ = "0.1.0"
