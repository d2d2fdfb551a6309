"""Rate and fidelity analytics for satellite-assisted entanglement distribution.

Compares photonic time-bin qubit and qudit operation of a downlink
pair source feeding multiplexed ground-station quantum memories:
closed-form attempt statistics, storage-decoherence fidelity, memory
availability under heralding lockouts, an independent discrete-event
Monte Carlo oracle, and a constrained rate optimizer.
"""

from .analytics import (ProtocolMetrics, attempt_duration, avg_attempts_closed_form,
                        avg_attempts_sum_form, avg_fidelity_no_cutoff,
                        avg_fidelity_no_cutoff_mixture, distribution_rate,
                        entanglement_probability, mode_slots, p_approx)
from .availability import (AvailabilityChain, availability_pi00,
                           local_click_probability, lockout_attempt_count,
                           lone_click_probability, stationary_availability)
from .cutoff import (CutoffParams, avg_attempts_with_cutoff, avg_fidelity_with_cutoff,
                     avg_fidelity_with_cutoff_mixture, n_fail_and_p_fail, n_succ_and_p2p)
from .errors import (ConfigError, CutoffConsistencyWarning, DivergenceError,
                     InvalidCutoffError, ResourceLimitError, StationarySolveError,
                     UndefinedFidelityError)
from .io import CSV_HEADER, ResultRow, RunConfig, load_config, parse_config, render_config, write_results
from .link import (LinkConfig, SPEED_OF_LIGHT, heralding_time, interpolated_p_t,
                   p_t_at_distance, transmission_probability)
from .montecarlo import McSummary, RngSpec, TrialRecord, simulate_batch
from .optimizer import (OptimizeResult, PointEvaluation, SweepSpec,
                        evaluate_operating_point, optimize_point, sweep)
from .spdc import (ExpMixture, MemoryConfig, SourceConfig, bell_overlap_numerator,
                   fidelity_mixture, herald_trace, pair_fidelity)

__version__ = "0.1.0"
