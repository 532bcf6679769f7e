"""Hybrid and dynamic policy gradients: multi-head-critic actor-critic learning
over vector rewards, with built-in environments and an experiment harness."""

__version__ = "0.1.0"
