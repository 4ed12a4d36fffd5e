"""Relative discrepancy of random uniform hypergraphs: exact oracles, bounds and certifiers."""

from .bounds import classify_regime, predicted_disc_via_lambda, rate_lambda, upper_envelope
from .certifier import CertifierConfig, certify
from .errors import CertifierError, GuardError, InvalidInputError
from .hypergraph import Bijection, Hypergraph, VertexSubset, overlap, rank_subset, sample_hypergraph, unrank_subset
from .oracle import DiscrepancyReport, exact_disc_pair, exact_disc_subset, verify_reduction

__version__ = "0.1.0"

__all__ = [
    "Bijection", "CertifierConfig", "CertifierError", "DiscrepancyReport", "GuardError", "Hypergraph",
    "InvalidInputError", "VertexSubset", "certify", "classify_regime", "exact_disc_pair", "exact_disc_subset",
    "overlap", "predicted_disc_via_lambda", "rank_subset", "rate_lambda", "sample_hypergraph",
    "unrank_subset", "upper_envelope", "verify_reduction",
]
