"""Bundled data files (ray-set coordinates)."""
