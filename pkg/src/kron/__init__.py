"""Exact non-archimedean norms, Drinfeld discriminants and Eisenstein series
over F_q(T), with executable checks of the Kronecker limit formulas."""

__version__ = "0.1.0"
