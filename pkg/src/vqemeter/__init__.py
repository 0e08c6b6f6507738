"""Measurement planning, costing and noisy simulation for molecular VQE Hamiltonians."""

__version__ = "0.1.0"
