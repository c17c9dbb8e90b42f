"""Synthesis of Presburger-circuit Skolem functions for Presburger specifications."""
__version__ = "0.1.0"
