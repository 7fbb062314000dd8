"""Two-photon simulator for a silicon Bell-state chip."""

__version__ = "0.1.0"
