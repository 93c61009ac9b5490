"""Delay-aware network-coding relay scheduling.

Online randomized schedulers with a worst-case cost guarantee, exact offline
oracles, threshold baselines and a slotted-time simulator for single relays
and relay lines.
"""

from .core import (ArrivalPattern, CostLedger, CostModel, Decision,
                   InvalidDecisionError, RelayQueues, drain_horizon,
                   effective_cost, queue_step, run_policy, slot_cost)
from .oracle import (ConstraintIntervals, ConstraintSetTrace,
                     InstanceTooLargeError, extract_intervals,
                     identify_constraints, lp_export, opt_one_sided,
                     opt_two_sided, opt_two_sided_bruteforce,
                     opt_two_sided_closed_form)
from .primaldual import (Normalizer, OneSidedPrimalDual, TwoSidedPrimalDual,
                         competitive_bound, compute_normalizer, run_one_sided,
                         run_two_sided)
from .scheduler import (OneSidedRandomizedPolicy, RoundingState,
                        TwoSidedRandomizedPolicy, WaitingCodingPolicy,
                        WaitingCodingQueues, spread_arrivals,
                        waiting_coding_route)
from .baselines import (ThresholdPolicy, c_threshold_policy,
                        optimize_thresholds, ski_rental_instance)
from .netsim import (LineNetwork, TrafficSpec, empirical_ratio,
                     gen_bernoulli_truncated_gaussian, run_line_network,
                     run_single_relay, sub_optimized_thresholds)

__all__ = [name for name in dir() if not name.startswith("_")]
