"""Stochastic-Galerkin simulation of porous-medium tumour growth."""

__version__ = "0.1.0"
