"""Tests for the PEFT-RLVR lab."""
