"""Exact slow-to-start lattice traffic model."""
