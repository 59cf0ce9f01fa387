"""Cat-code tele-correction and Yurke-Stoler ancilla simulator."""

__version__ = "0.1.0"
