"""Momentum SGD as regularized leader-following, with baselines, a lower-bound
verifier and an experiment harness."""

from .errors import (AllRunsDivergedError, BoundViolation, ConfigurationError, ConstructionError,
                     HorizonExceededError, InvalidInputError, ParseError, SlopeUndefinedError, StateError)
from .optim import (SGDM, AdaGrad, AdaptiveCoordinate, AdaptiveGlobal, ConstantHorizon, Explicit, FTRLSGDM,
                    GradientSample, OnlineToBatchState, OptimizerState, Polynomial, SGDMAvg, StepsizeSchedule,
                    adagrad_step, ftrl_sgdm_step, o2b_ftrl_step, sgdm_step)
from .problems import (AbsDeviation, Dataset, Hinge, SampleOrder, SquaredHinge, StochasticOracle, from_dense,
                       full_objective, full_subgradient, loss_and_subgrad, synth_separable)
from .lower_bound import AdversarialInstance, eval_f, hvec, iter_z_sequence, verify_lower_bound, z_sequence
from .libsvm import load_libsvm, parse_libsvm, serialize_libsvm

__version__ = "0.1.0"
