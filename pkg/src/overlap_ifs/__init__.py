"""Overlap numbers of self-similar IFS with overlaps, and the dimension
bounds they imply for projected Bernoulli measures on the line."""

__version__ = "0.1.0"

from .chains import (ChainCount, MultiplicityProfile, count_by_ones, count_chains,
                     count_chains_brute, count_chains_generic, count_chains_many,
                     default_fuzz, multiplicity_profile)
from .errors import (AlphabetError, BudgetError, ConfigError, FlaggedSampleError,
                     OverlapIfsError, UnsupportedSystemError)
from .estimator import (ConvergenceReport, OverlapEstimate, convergence_scan,
                        estimate_overlap_exact, estimate_overlap_mc)
from .ifs import (IfsSystem, Interval, ProbabilityVector, SimilarityMap, Word,
                  apply_word, attractor_hull, load_system, system_from_spec,
                  validate_system)
from .pressure import (DimensionBound, PressureParams, hd_bound_bernoulli_convolution,
                       hd_bound_biased, overlap_upper_from_hd, pressure, pressure_zero)
from .sampling import (CodedPoint, KsReport, LiftState, SampledWord, code_point,
                       code_points, ks_compare, lift_orbit_point, lift_step,
                       projection_equality_test, sample_word, sample_word_matrix)

__all__ = [name for name in dir() if not name.startswith("_")]
