"""Statistical QoS analysis for finite-blocklength satellite-terrestrial links."""

__version__ = "0.1.0"
