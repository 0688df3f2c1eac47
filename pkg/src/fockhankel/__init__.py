"""Numerics for Hankel operators on Fock-Sobolev spaces."""
