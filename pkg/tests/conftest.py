import copy
import json
from pathlib import Path

import pytest

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def load_config(name: str) -> dict:
    with open(CONFIG_DIR / name) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def benchmark_config() -> dict:
    """The documented dim-8 diagonal benchmark configuration."""
    return load_config("run_diagonal_dim8.json")


@pytest.fixture()
def benchmark_config_copy(benchmark_config) -> dict:
    return copy.deepcopy(benchmark_config)
