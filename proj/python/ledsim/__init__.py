"""Python interface to the ledsim decentralized optimization simulator."""

from ._ledsim import (
    MixingMatrix,
    Problem,
    algorithms,
    average_weights,
    default_stepsize,
    lazy_transform,
    logistic_problem,
    mixing_matrix,
    noise_floor,
    quadratic_problem,
    run,
    tune,
)

__all__ = [
    "MixingMatrix",
    "Problem",
    "algorithms",
    "average_weights",
    "default_stepsize",
    "lazy_transform",
    "logistic_problem",
    "mixing_matrix",
    "noise_floor",
    "quadratic_problem",
    "run",
    "tune",
]
