"""Tests for the spectral analysis of weight updates."""
