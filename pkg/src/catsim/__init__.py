"""catsim: simulation and exact analysis of chain activation and
transport (CAT) dynamics on the integer lattice.

The chain moves m points per step on a finite subset of Z^d — m
distance-weighted removals followed by m placements on the set's outer
boundary — and exhibits a critical set size n_c = 2m+2 separating
diameter collapse from unbounded growth.  The package provides exact
one-step enumeration, fast seeded simulation (numba with a numpy
fallback), the copycat multi-cluster approximation, and the detectors
and harnesses used to study the phase transition.
"""

__version__ = "0.1.0"

from .lattice import (Configuration, TranslationClass, boundary, components,
                      component_of, diameter, diameter_sq, distance,
                      distance_sq, is_e1_segment, lex_min, segment)
from .kernel import (ModelParams, RngStream, StepTrace, TrajectoryRecord,
                     cat_run, cat_step, enumerate_step_distribution,
                     mu_pmf, mu_sample, phi, transition_probability)
from .copycat import (TupleState, CopyStepTrace, copycat_step,
                      enumerate_copycat_step, in_tup_ab, lift_partition,
                      lifted_step, sep, sep_sq)
from .observables import (ProgWitness, RenewalSeries, can_persist,
                          derived_walk, event_add_to_ball,
                          event_deplete_small_comps, event_no_small_comp,
                          has_progressive_boundary, renewal_series,
                          verify_progressive_witness)
from .harness import (ExperimentSpec, InitialCondition, SweepResult,
                      copycat_run, enumerate_prog_classes,
                      load_experiment_config, reachability_bfs, run_ensemble,
                      spread_configuration, stationarity_check, sweep)

__all__ = [
    "__version__",
    "Configuration", "TranslationClass", "boundary", "components",
    "component_of", "diameter", "diameter_sq", "distance", "distance_sq",
    "is_e1_segment", "lex_min", "segment",
    "ModelParams", "RngStream", "StepTrace", "TrajectoryRecord",
    "cat_run", "cat_step", "enumerate_step_distribution",
    "mu_pmf", "mu_sample", "phi", "transition_probability",
    "TupleState", "CopyStepTrace", "copycat_step", "enumerate_copycat_step",
    "in_tup_ab", "lift_partition", "lifted_step", "sep", "sep_sq",
    "ProgWitness", "RenewalSeries", "can_persist", "derived_walk",
    "event_add_to_ball", "event_deplete_small_comps", "event_no_small_comp",
    "has_progressive_boundary", "renewal_series", "verify_progressive_witness",
    "ExperimentSpec", "InitialCondition", "SweepResult", "copycat_run",
    "enumerate_prog_classes", "load_experiment_config", "reachability_bfs",
    "run_ensemble", "spread_configuration", "stationarity_check", "sweep",
]
