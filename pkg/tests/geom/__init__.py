"""The package contains the tests for the scene model and the geometries."""
