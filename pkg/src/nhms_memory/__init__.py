"""Storage and manipulation of weak x-ray pulses by pulsed nuclear hyperfine splitting."""

__version__ = "0.1.0"
