"""
Abelian Lab - exact computations for abelian groups.

Canonical forms of finitely generated groups, purity and pure closures,
heights, characteristics and types, Galois-type oracles, linear systems and
algebraic-compactness probes, finite limit-chain simulations and Butler-group
amalgamation. Every answer is either exact or labelled with the bound it was
checked to.
"""

__version__ = "0.4.0"
