"""Anti-pattern detection toolkit: God Class and Feature Envy detectors
aggregated by an MLP ensemble trained on a differentiable MCC surrogate."""

__version__ = "0.1.0"
