"""Command-line entry point (``aniflow``)."""
