"""chartforge: staged synthetic chart-figure QA dataset generation and evaluation."""

__version__ = "0.1.0"
