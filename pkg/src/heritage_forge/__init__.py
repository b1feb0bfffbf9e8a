"""Turn museum catalog records into a validated CIDOC CRM knowledge graph."""

__version__ = "0.1.0"
