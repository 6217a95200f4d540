import os
import shutil
import subprocess
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def cli():
    path = os.environ.get("SEGT_CLI") or shutil.which("segt")
    if not path:
        pytest.skip("segt executable not available")

    def run(*args, check=None):
        proc = subprocess.run([path, *map(str, args)], capture_output=True, text=True)
        if check is not None:
            assert proc.returncode == check, proc.stdout + proc.stderr
        return proc

    return run


@pytest.fixture(scope="session")
def synthetic_root(tmp_path_factory):
    import segt

    root = tmp_path_factory.mktemp("synthetic")
    segt.write_synthetic_dataset(root, 5, 64, 1)
    return root


TINY = """
data:
  base_size: 64
model:
  toy_widths: [8, 16, 16, 32]
  width: 8
train:
  learning_rate: 1.0e-3
  batch_size: 2
  epochs: 1
  max_steps: 3
  scales: [1.0]
  seed: 4
"""


@pytest.fixture
def tiny_yaml():
    return TINY


def write_config(directory: Path, root: Path) -> Path:
    path = directory / "tiny.yaml"
    text = TINY.replace("data:\n", f"data:\n  train_root: {root}\n")
    path.write_text(text)
    return path
