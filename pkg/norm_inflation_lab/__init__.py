"""Norm Inflation Lab - numerical experiments on norm inflation for Boussinesq flows."""

__version__ = "0.1.0"
