"""refnet: extract in-text author references from a historical corpus and
analyze the resulting weighted directed reference networks."""

__version__ = "0.1.0"
