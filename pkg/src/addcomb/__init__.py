"""Desk-scale additive combinatorics: groups, Fourier analysis, Bohr sets,
graph counting, k-configurations, sifting and sum-free extraction."""

from .errors import (
    AddcombError,
    GroupMismatch,
    InvalidArgument,
    NumericalAnomaly,
    PreconditionViolation,
    ResourceLimit,
)
from .group import (
    Character,
    FiniteAbelianGroup,
    GroupElement,
    MultiplicationMap,
    add,
    compose_character_with_psi,
    eval_character,
    halve,
    make_group,
    neg,
    psi2_power,
    psi_apply,
)
from .harmonic import (
    DenseFunction,
    Measure,
    convolution_power,
    convolve,
    diff_convolve,
    fourier,
    inner,
    lp_norm,
    normalized_indicator,
    spectrum,
    translate,
)
from .bohr import (
    BohrSet,
    bohr_build,
    canonical_frequency_set,
    dilate,
    domination_check,
    find_regular_dilate,
    image_under,
    intersect,
    is_regular,
    size_bound_check,
    sumset_growth_check,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
