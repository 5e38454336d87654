"""Byzantine-resilient broadcast on planar networks: topologies, the relay
protocol, adversaries, a discrete-event simulator and bound checkers."""

from .adversary import (AdversaryStrategy, ConfigError, PlacementInfeasible, make_strategy,
                        place_byzantines, strategy_forge_flood, strategy_garbage,
                        strategy_mirror, strategy_silent)
from .graph import (Placement, Polygon, Topology, compute_Y, compute_Z,
                    critical_counterexample, diameter, enumerate_polygons, find_small_cut,
                    generate, is_k_connected, trace_faces)
from .protocol import Message, NodeState, handle_message, source_start, state_size_bits
from .sim import RunReport, Simulation, TimingModel, replay, run, run_flood_baseline
from .verify import (VerificationResult, assert_indistinguishable, assert_liveness,
                     assert_memory_bound, assert_safety, assert_time_bound,
                     check_lemma_correct_polygons)

__version__ = "0.1.0"
