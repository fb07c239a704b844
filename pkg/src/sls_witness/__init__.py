"""Signalling witness for two-branch dynamical state-reduction models."""
__version__ = "0.1.0"
