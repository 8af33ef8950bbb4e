"""Configuration constants for the PEFT-RLVR lab."""

import logging
from typing import Final

# Output layout
OUTPUT_DIR: Final[str] = "runs"
CONFIGS_DIR: Final[str] = "configs"

ARTIFACT_FILES: Final[dict[str, str]] = {
    "CONFIG": "config.json",
    "METRICS": "metrics.csv",
    "CHECKPOINT_INITIAL": "checkpoint-initial.perl",
    "CHECKPOINT_FINAL": "checkpoint-final.perl",
    "EVAL_RECORDS": "eval-records.csv",
    "EVAL_SUMMARY": "eval-summary.csv",
    "SPECTRA": "spectra.csv",
    "SPECTRA_SUMMARY": "spectra-summary.csv",
    "FRONTIER": "frontier.csv",
}

# Environment variables that override the config file
ENV_OVERRIDES: Final[dict[str, str]] = {
    "SEED": "seed",
    "OUT_DIR": "output_dir",
}

# Reserved token ids. Task values are encoded from VALUE_BASE upward.
PAD_TOKEN: Final[int] = 0
BOS_TOKEN: Final[int] = 1
EOS_TOKEN: Final[int] = 2
ANSWER_TOKEN: Final[int] = 3
PLUS_TOKEN: Final[int] = 4
MOD_TOKEN: Final[int] = 5
SUM_TOKEN: Final[int] = 6
REVERSE_TOKEN: Final[int] = 7
VALUE_BASE: Final[int] = 8

# Desk-scale policy shape
DEFAULT_POLICY: Final[dict[str, int]] = {
    "vocab": 64,
    "d_model": 64,
    "n_layers": 2,
    "n_heads": 4,
    "d_ff": 128,
    "max_seq": 64,
}

# Projection names adapters attach to
TARGET_MODULES: Final[tuple[str, ...]] = (
    "q_proj",
    "k_proj",
    "v_proj",
    "o_proj",
    "gate_proj",
    "up_proj",
    "down_proj",
)

# IA3 rescales the key/value outputs and the FFN activation entering down_proj
IA3_OUTPUT_MODULES: Final[tuple[str, ...]] = ("k_proj", "v_proj")
IA3_INPUT_MODULES: Final[tuple[str, ...]] = ("down_proj",)

# Training recipe defaults; desk runs override lr and rank in configs/
DEFAULT_GROUP_SIZE: Final[int] = 8
DEFAULT_LEARNING_RATE: Final[float] = 1e-5
DEFAULT_RANK: Final[int] = 4
DEFAULT_ALPHA_PER_RANK: Final[float] = 2.0
DEFAULT_DROPOUT: Final[float] = 0.05
DEFAULT_LORA_PLUS_RATIO: Final[float] = 16.0
DEFAULT_EPS_LOW: Final[float] = 0.2
DEFAULT_EPS_HIGH_DAPO: Final[float] = 0.28
DEFAULT_STD_FLOOR: Final[float] = 1e-6
DEFAULT_MAX_GRAD_NORM: Final[float] = 1.0
DEFAULT_SEED: Final[int] = 42

ADAM_BETAS: Final[tuple[float, float]] = (0.9, 0.999)
ADAM_EPS: Final[float] = 1e-8

# Evaluation sampling
EVAL_TEMPERATURE: Final[float] = 0.6
EVAL_TOP_P: Final[float] = 0.95

# Numerics
SVD_MAX_SWEEPS: Final[int] = 100
SVD_TOLERANCE: Final[float] = 1e-12
NORM_GUARD: Final[float] = 1e-12
LAYER_NORM_EPS: Final[float] = 1e-5
BASE_INIT_STD: Final[float] = 0.02

# Task family parameters
MOD_ADD_MODULI: Final[tuple[int, ...]] = (5, 7, 11, 13, 17, 19, 23)
MAX_DIGIT_SUM_DIFFICULTY: Final[int] = 5
MAX_REVERSE_DIFFICULTY: Final[int] = 12

# Training redraws a prompt that falls in the held-out eval set at most this often
MAX_HELD_OUT_REDRAWS: Final[int] = 1000


def setup_logging() -> None:
    """Configure logging for the application."""
    logging.basicConfig(
        level=logging.INFO,
        format="%(asctime)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S",
    )
