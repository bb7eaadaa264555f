"""Braids traced by Hamiltonian flows on surfaces, and quasimorphism averages over them."""

__version__ = "0.1.0"
