"""Tests for evaluation rollouts."""
