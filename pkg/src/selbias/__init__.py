"""Sample selection bias correction by reweighting."""

__version__ = "0.1.0"
