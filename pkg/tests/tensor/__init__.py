"""Tests for the numeric substrate."""
