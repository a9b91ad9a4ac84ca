"""Quantum Moore/Mealy transducers, QOMDP value iteration and bounded witness search."""
from .channels import (Branch, Channel, ChannelReport, ConditionalChannel, Instrument, KrausMap,
                       apply_cp, compose_cp, instrument_outcomes, validate_channel)
from .classical import (ClassicalMoore, ClassicalPomdp, belief_update, embed_as_quantum, embed_pomdp,
                        forward, make_hmm, make_markov_chain, make_mdp, reachability_to_nonoccurrence)
from .estimator import QomdpValueIteration
from .exceptions import CapExceededError, ValidationError
from .search import SearchConfig, SearchResult, Witness, search_nonoccurrence, search_reachability
from .solver import (AlphaSet, Qomdp, StationaryPolicy, ValueIterationResult, bellman_backup,
                     greedy_action, iteration_bound, mc_policy_value, prune_dominated,
                     reduce_to_state_reward, value_at, value_distance, value_iteration)
from .transducers import (EquivalenceResult, QuantumMealyMachine, QuantumMooreMachine, RunResult,
                          acceptance, acceptance_marginal, iter_runs, machines_equivalent,
                          mealy_run, mealy_to_moore, moore_run, moore_to_mealy, output_mixture, run)

__version__ = "0.1.0"
