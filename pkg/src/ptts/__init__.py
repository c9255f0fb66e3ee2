"""Private token transfer simulator and balance-range attack toolkit."""

__version__ = "0.1.0"
