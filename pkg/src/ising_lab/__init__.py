"""Counting, sampling and hardness-reduction tools for the ferromagnetic Ising model at fixed magnetization."""

__version__ = "0.1.0"
