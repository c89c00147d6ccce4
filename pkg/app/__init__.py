"""Quantum Markov chains on Cayley trees built from open quantum random walks."""

__version__ = "0.1.0"
