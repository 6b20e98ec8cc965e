"""The package contains the tests for the toolkit."""
