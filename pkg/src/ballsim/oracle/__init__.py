"""Exact expectation oracles, drift verifiers, counterexamples and the tiny-instance DP."""

from .counterexamples import counterexample_config, smallest_holding_n, verify_counterexamples
from .exact import ExactGapDistribution, exact_gap_distribution, monte_carlo_gap_distribution, total_variation
from .expectation import (ExpectationResult, caching_two_step_expectation, lambda_alpha_limit,
                          one_step_expectation, outcomes, random_reachable_states, v_alpha_tilde,
                          verify_lambda_change, verify_phi_bound, verify_upsilon_drop, verify_v_drop,
                          worst_cache_two_step)

__all__ = [
    "ExactGapDistribution", "ExpectationResult", "caching_two_step_expectation", "counterexample_config",
    "exact_gap_distribution", "lambda_alpha_limit", "monte_carlo_gap_distribution", "one_step_expectation",
    "outcomes", "random_reachable_states", "smallest_holding_n", "total_variation", "v_alpha_tilde",
    "verify_counterexamples", "verify_lambda_change", "verify_phi_bound", "verify_upsilon_drop",
    "verify_v_drop", "worst_cache_two_step",
]
