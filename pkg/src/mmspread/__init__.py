"""Three-factor bid-offer spread engine and backtester."""

__version__ = "0.1.0"
