"""Polynomial-chaos surrogates for non-Gaussian correlated (Gaussian-mixture) inputs."""

__version__ = "0.1.0"
