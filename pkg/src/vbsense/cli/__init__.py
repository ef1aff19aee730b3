"""Command-line toolkit: config loading, data ingestion and file outputs."""
