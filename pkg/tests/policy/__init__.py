"""Tests for the policy network."""
