"""Skolem-function synthesis procedures."""
