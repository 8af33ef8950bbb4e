"""PEFT for RLVR desk lab."""
