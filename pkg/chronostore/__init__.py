"""chronostore: an embeddable temporal property-graph store."""

__version__ = "0.1.0"
