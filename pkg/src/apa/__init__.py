"""Adaptive preference aggregation.

Learns, per user-embedding atom, the maximal lottery over a finite set of
alternatives from online pairwise comparisons, and checks itself against
exact social-choice solvers.
"""

from .social_choice import (
    borda_scores,
    borda_winner,
    brute_force_maximal,
    condorcet_winner,
    margin_matrix,
    maximal_lottery,
    verify_maximal,
)

__all__ = [
    "borda_scores",
    "borda_winner",
    "brute_force_maximal",
    "condorcet_winner",
    "margin_matrix",
    "maximal_lottery",
    "verify_maximal",
]

__version__ = "0.1.0"
