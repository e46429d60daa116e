"""TIN coding schemes for the two-user interference channel."""

__version__ = "0.1.0"
