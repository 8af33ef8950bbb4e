"""Shared desk-scale runs for the slow learning checks.

Each session-scoped fixture trains once into a temp dir; the modules read
the same runs instead of retraining per test.
"""

import copy
from types import SimpleNamespace

import pytest

from src.harness import config_from_dict, run_eval, run_spectra, run_train

DESK_EXPERIMENT = {
    "seed": 42,
    "adapter": {"kind": "LoRA", "rank": 4},
    "rlvr": {"variant": "DAPO"},
    "task": {"task": "ModAdd", "difficulty": 1},
    "train": {
        "steps": 80,
        "batch_size": 8,
        "group_size": 8,
        "learning_rate": 0.002,
        "max_new": 4,
        "log_every": 20,
    },
    "warmstart": {"steps": 150},
    "evaluation": {"instances": 12, "k": 4},
}


def desk_config(output_dir, name, **sections):
    data = copy.deepcopy(DESK_EXPERIMENT)
    data["name"] = name
    data["output_dir"] = str(output_dir)
    for key, value in sections.items():
        data[key] = value
    return config_from_dict(data, environ={})


def _train_and_measure(output_dir, name, **sections):
    config = desk_config(output_dir, name, **sections)
    result = run_train(config)
    initial = result.run_dir / "checkpoint-initial.perl"
    return SimpleNamespace(
        config=config,
        result=result,
        before=run_eval(initial, config, result.run_dir / "before"),
        after=run_eval(result.final_checkpoint, config),
        spectra=run_spectra(initial, result.final_checkpoint),
    )


@pytest.fixture(scope="session")
def desk_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("desk")
    return {
        "lora": _train_and_measure(root, "lora"),
        "full": _train_and_measure(root, "full", adapter={"kind": "Full", "rank": 4}),
        "ia3": _train_and_measure(root, "ia3", adapter={"kind": "IA3", "rank": 4}),
    }


@pytest.fixture(scope="session")
def long_runs(tmp_path_factory):
    root = tmp_path_factory.mktemp("long")
    train = {**DESK_EXPERIMENT["train"], "steps": 2000, "log_every": 200}
    return {
        "lora": run_train(desk_config(root, "lora-long", train=train)),
        "full": run_train(
            desk_config(
                root, "full-long", train=train, adapter={"kind": "Full", "rank": 4}
            )
        ),
    }
