"""Experiment configuration, checkpoints and the train/eval/spectra/compare runs."""

from .checkpoint import (
    MAGIC,
    VERSION,
    TensorRecord,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    net_records,
    save_checkpoint,
)
from .experiment_config import (
    AdaLoRASpec,
    EvalSpec,
    ExperimentConfig,
    RlvrSpec,
    TaskSpec,
    TrainSpec,
    config_from_dict,
    load_config,
    load_configs_dir,
)
from .network import build_network
from .runs import (
    FrontierRow,
    TrainResult,
    evaluate,
    expand_sweep,
    held_out_split,
    parse_axis,
    run_compare,
    run_eval,
    run_member,
    run_spectra,
    run_train,
    sweep_configs,
)

__all__ = [
    "MAGIC",
    "VERSION",
    "AdaLoRASpec",
    "EvalSpec",
    "ExperimentConfig",
    "FrontierRow",
    "RlvrSpec",
    "TaskSpec",
    "TensorRecord",
    "TrainResult",
    "TrainSpec",
    "build_network",
    "config_from_dict",
    "decode_checkpoint",
    "encode_checkpoint",
    "evaluate",
    "expand_sweep",
    "held_out_split",
    "load_checkpoint",
    "load_config",
    "load_configs_dir",
    "net_records",
    "parse_axis",
    "run_compare",
    "run_eval",
    "run_member",
    "run_spectra",
    "run_train",
    "save_checkpoint",
    "sweep_configs",
]
