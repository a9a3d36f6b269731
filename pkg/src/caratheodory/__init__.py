"""Operator-valued Caratheodory functions: positive kernels, reproducing kernel
spaces, isometric realizations and Herglotz integral representations."""

from .operators import (DualityTag, NotPositiveError, cauchy_schwarz_check, factorize, hermitian,
                        is_positive, order_leq, pairing)
from .kernels import (IndefiniteKernelError, RationalFunction, SampleSet, TableFunction, cayley,
                      certify_positive_kernel, constant, gram_assemble, kernel_eval, mobius_atom,
                      negative_squares_estimate, point_mass_counterexample, rkhs_section)
from .stieltjes import IncreasingOperatorFunction, Partition, brod_bound_check, integrate, rs_sum
from .helly import MonotoneSequence, helly_select, pass_to_limit
from .realization import Realization, RelationDefectError, realize, synthesize
from .herglotz import HerglotzMeasure, NotCaratheodoryError, kernel_integral_check, recover, trig_moments

__version__ = "0.1.0"
