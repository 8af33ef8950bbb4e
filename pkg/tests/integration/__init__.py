"""Desk-scale training checks (slow)."""
