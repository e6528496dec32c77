"""Desk-scale lab for early-phase mixup scheduling.

Exposes the trainable classifier, dataset builders, the closed-form
gradient-interference oracles, training-dynamics metrics, scheduling
policies, and the config-driven experiment runner.
"""

__version__ = "0.1.0"

from .estimator import MixupMLPClassifier

__all__ = ["MixupMLPClassifier", "__version__"]
