"""Tests for RLVR objectives and training."""
