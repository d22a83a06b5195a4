"""Fine-grained, assertion-level regression test selection for MiniJ programs."""

__version__ = "0.1.0"
