"""The package contains the tests for the molecular-flow machinery."""
