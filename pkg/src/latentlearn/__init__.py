"""Latent-learning benchmark and training harness with oracle episodic retrieval."""

__version__ = "0.1.0"
