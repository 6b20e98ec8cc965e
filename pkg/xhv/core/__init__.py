"""The package contains the low-level machinery of the molecular-flow kernel."""
