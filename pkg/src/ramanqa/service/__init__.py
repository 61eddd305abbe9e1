"""Operational shell: config, CLI subcommands, HTTP API, transcripts."""
