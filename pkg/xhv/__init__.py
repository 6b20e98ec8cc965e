"""The package contains the extreme-high-vacuum design and validation toolkit."""

__version__ = '0.1'
