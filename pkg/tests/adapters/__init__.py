"""Tests for adapter modules."""
