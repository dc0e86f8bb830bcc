"""Border-ownership simulator with dorsal (MT) modulation and relaxation labeling."""

__version__ = "0.1.0"
