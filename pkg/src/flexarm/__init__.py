"""Planar single-link flexible manipulator with large bending deformation.

Nonlinear one-mode dynamics, residual-vibration trajectory planning with a
constriction particle swarm, and augmented sliding-mode tracking.
"""
from .model import (BeamConfig, ModeShape, ModelCoefficients, build_model,
                    compute_coefficients, mode_shape, reference_beam,
                    solve_frequency_equation)

__version__ = "0.1.0"

__all__ = [
    "BeamConfig", "ModeShape", "ModelCoefficients", "build_model",
    "compute_coefficients", "mode_shape", "reference_beam",
    "solve_frequency_equation",
]
