"""Personalized de-jargonizer for arXiv CS abstracts.

Harvests preprints, identifies jargon terms tailored to a reader profile,
generates definitions with abstract-only and retrieval-augmented context,
and evaluates the results (accuracy, blinded pairwise quality, and
nonparametric statistics).
"""

__version__ = "0.1.0"
