"""Bus navigation engine with Wifi ride detection and a simulated city."""

__version__ = "0.1.0"
