"""Decentralized personal-data marketplace: risk scoring, noise-based risk
modification, data licences, reputation, pricing and the transaction flow."""

__version__ = "0.1.0"
