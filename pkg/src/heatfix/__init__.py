"""Small-t asymptotics of deformed heat traces over fixed-point sets."""

__version__ = "0.1.0"
