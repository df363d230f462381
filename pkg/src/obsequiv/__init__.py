"""Deterministic systems, their coarse-grainings, and the stochastic processes they match.

The package simulates the baker's map and irrational rotations, observes
them through finite partitions, and checks the resulting symbol processes
against Bernoulli and Markov models, both exactly and statistically.
"""

__version__ = "0.1.0"

from .dynamics import (  # noqa: E402
    GOLDEN_ALPHA,
    ExactForm,
    PhasePoint,
    System,
    baker_step,
    baker_step_inverse,
    orbit,
    rotation_step,
    sample_invariant,
)
from .equivalence import (  # noqa: E402
    bernoulli_rejection_witness,
    epsilon_congruence_bound_check,
    markov_property_test,
    markov_replacement_certificate,
    mixing_correlation,
    nontriviality_verdict,
)
from .errors import *  # noqa: E402,F401,F403
from .partitions import (  # noqa: E402
    Box,
    Partition,
    cell_measure,
    coarse_grain,
    dyadic_partition,
    halves_partition,
    left_right_partition,
    observe,
)
from .processes import (  # noqa: E402
    MarkovModel,
    SymbolSequence,
    bernoulli_sample,
    empirical_transition_matrix,
    is_aperiodic,
    is_irreducible,
    markov_sample,
    period_of,
    stationarity_check,
)
from .shiftspace import (  # noqa: E402
    CylinderSpec,
    ShiftWindow,
    baker_to_shift,
    conjugacy_check,
    cylinder_measure_bernoulli,
    cylinder_measure_markov,
    finite_window_equivalence,
    ks_entropy_bernoulli,
    shift_left,
    shift_to_baker,
)
