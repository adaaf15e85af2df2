"""HTTP wrapper around the core scheduling library."""
