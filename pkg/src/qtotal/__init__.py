"""Numerical checks of the law of total probability for sequential quantum measurements."""

from qtotal.measurement import (
    DensityOperator,
    OutcomeLabel,
    PovmElement,
    PovmSet,
    PureState,
    bayes_gap,
    born_probability,
    conditional_probability,
    post_measurement_state,
)
from qtotal.twotime import (
    Evolution,
    TwoTimeExperiment,
    check_theorem1,
    total_law_residual,
    two_time_conditional,
)
from qtotal.composite import CompositeSpace, EwfExperiment, check_corollary2, ewf_conditional, ewf_total_law_residual

__version__ = "0.1.0"

__all__ = [
    "CompositeSpace",
    "DensityOperator",
    "Evolution",
    "EwfExperiment",
    "OutcomeLabel",
    "PovmElement",
    "PovmSet",
    "PureState",
    "TwoTimeExperiment",
    "bayes_gap",
    "born_probability",
    "check_corollary2",
    "check_theorem1",
    "conditional_probability",
    "ewf_conditional",
    "ewf_total_law_residual",
    "post_measurement_state",
    "total_law_residual",
    "two_time_conditional",
]
