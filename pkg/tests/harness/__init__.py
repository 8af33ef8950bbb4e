"""Tests for the experiment harness."""
