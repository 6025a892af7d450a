"""Exact simulation of Brownian first passage times to ``+-(a + b t)``."""
from .distribution import (EvalBracket, ToleranceSpec, cdf, conditional_cdf, density, log_q, prob_finite,
                           q_bracket, std_normal_integral)
from .errors import (CalibrationFailure, DegenerateDifference, EmptySample, FptError, ProposalExhaustion,
                     UnresolvedComparison, UnsupportedBoundary)
from .kernels import BACKEND, available_backends
from .rng import RandomSource
from .sampler import (EnvelopeConfig, FptOutcome, SamplerStats, calibrate_envelope, conditional_sample,
                      conditional_samples, finiteness_trial, predicted_acceptance, sample, sample_many,
                      sample_sharded)
from .series import (Boundary, CompareOutcome, PartialSumSeries, SeriesKind, c_partial, decide_compare,
                     oscillation_ratio, oscillation_ratio_log, q_partial, tail_index_c, tail_index_q)
from .validation import (EmpiricalFpt, GofReport, OracleConfig, euler_fpt_oracle, goodness_of_fit, ks_statistic,
                         ks_threshold_99, verify_envelope, verify_left_tail, verify_right_tail)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
