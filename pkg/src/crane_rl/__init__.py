"""Data-driven control of a redundant hydraulic crane.

Analytic plant, synthetic data campaigns, numpy MLPs, DDPG with
forward-network action feedback, and trajectory-tracking evaluation.
"""

__version__ = "0.1.0"
