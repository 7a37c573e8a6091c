"""Visualization utilities (field snapshots)."""
