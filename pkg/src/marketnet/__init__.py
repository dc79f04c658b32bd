"""Correlation-network, Markov-centrality and entropy-rate analysis of daily price panels."""

__version__ = "0.1.0"
