"""Online bipartite edge coloring with a delta + q palette.

Offline nodes are known upfront; online nodes arrive one at a time and
every incident edge must be colored immediately and irrevocably.  The
core algorithm spreads each neighbor's remaining palette uniformly,
gates on the per-color total load, and samples an integral matching
with exactly those marginals; a greedy first-fit baseline, instance
generators, and a statistical verification harness round out the
package.
"""

from .engine import (GATE_EPS, ArrivalOutcome, DegreeOverflowError,
                     PaletteState, RunRecord, Verdict, color_online,
                     greedy_color, process_arrival, verify_coloring)
from .generators import GadgetParams, gen_gadget_instance, gen_random_regular
from .harness import (AggregateMetrics, ExperimentConfig, TraceSpec,
                      appendix_q, check_marginals, check_negative_dependence,
                      default_q, resolve_instance, resolve_q, run_trials)
from .instances import (OnlineInstance, ParseError, ValidationReport,
                        load_instance, make_instance, read_instance,
                        save_instance, validate, write_instance)
from .rounding import (SNAP_EPS, FractionalMatching, Matching, Rng,
                       column_sums, drift_unmatched, row_sums,
                       sample_matching, sample_matchings)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # instances
    "OnlineInstance", "ValidationReport", "ParseError", "make_instance",
    "validate", "read_instance", "write_instance", "load_instance",
    "save_instance",
    # rounding
    "SNAP_EPS", "Rng", "FractionalMatching", "Matching", "column_sums",
    "row_sums", "sample_matching", "sample_matchings", "drift_unmatched",
    # engine
    "GATE_EPS", "PaletteState", "ArrivalOutcome", "RunRecord", "Verdict",
    "DegreeOverflowError", "process_arrival", "color_online", "greedy_color",
    "verify_coloring",
    # generators
    "GadgetParams", "gen_gadget_instance", "gen_random_regular",
    # harness
    "default_q", "appendix_q", "TraceSpec", "ExperimentConfig",
    "AggregateMetrics", "resolve_instance", "resolve_q", "run_trials",
    "check_marginals", "check_negative_dependence",
]
