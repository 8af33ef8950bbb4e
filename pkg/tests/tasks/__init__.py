"""Tests for task generators and verifiers."""
