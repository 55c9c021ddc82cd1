"""Model-based diagnosis, active reconfiguration and sensor placement."""
