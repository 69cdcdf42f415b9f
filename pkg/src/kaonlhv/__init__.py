"""kaonlhv: entangled neutral-kaon pair toolkit.

Quantum-mechanical predictions for the Hardy-type outcome set, entanglement
entropy of regenerated pair states, decay-window misidentification budgets,
minimum-efficiency falsification thresholds, and explicit local
hidden-variable ensembles that exploit the detection loophole below
threshold, with a reproducible Monte Carlo event generator.
"""

__version__ = "0.1.0"

from .constants import (
    BranchingEntry,
    ConstantsError,
    Parent,
    PhysicalConstants,
    TagClass,
    default_constants,
    load_constants,
    loads_constants,
    serialize_constants,
)
from .states import Basis, SingleKaonState, evolve, to_mass_basis, to_strangeness_basis
from .pairs import (
    RegenerationParams,
    Side,
    TwoKaonState,
    admixture_coefficients,
    build_regenerated_pair_mass,
    build_regenerated_pair_strangeness,
    build_singlet,
    change_basis,
    entropy_surface,
    reduced_density_matrix,
    validate_density_matrix,
    von_neumann_entropy,
)
from .decay import (
    MisidBudget,
    TaggingWindow,
    contamination_histogram,
    max_window_end,
    misid_budget,
    survival_fraction,
    untaggable_fraction,
)
from .predictions import (
    DetectionModel,
    Outcome,
    ProbabilitySet,
    ch_margin,
    joint_probability,
    measured_probabilities,
    min_efficiency_ch,
    min_efficiency_direct,
    qm_probability_set,
)
from .lhv import (
    DecaySpec,
    EvasionInfeasibleError,
    HardyReport,
    HiddenAssignment,
    HiddenVariableEnsemble,
    build_evading_ensemble,
    hardy_constraint_check,
    lhv_joint_probability,
    measured_mass_tag,
    measured_probability_set,
)
from .simulate import (
    EVENT_DTYPE,
    VerdictReport,
    count_events,
    falsification_verdict,
    monte_carlo_run,
    serialize_events,
    write_events,
)

__all__ = [name for name in dir() if not name.startswith("_")]
