"""Shared fixtures: benchmark-data discovery and a tiny on-disk dataset.

Real benchmark directories are looked up under $FLOWGAD_DATA_DIR, falling
back to <repo>/data. Tests that need them skip with a pointer when the
files are absent, so the suite stays runnable on a fresh checkout.
"""

import os

import numpy as np
import pytest

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


def data_root() -> str:
    return os.environ.get("FLOWGAD_DATA_DIR",
                          os.path.join(REPO_ROOT, "data"))


def dataset_dir(name: str) -> str | None:
    path = os.path.join(data_root(), name)
    if os.path.isfile(os.path.join(path, f"{name}_A.txt")):
        return path
    return None


def require_dataset(name: str) -> str:
    path = dataset_dir(name)
    if path is None:
        pytest.skip(
            f"benchmark dataset {name} not found under {data_root()}; "
            f"place the TUDataset files in {os.path.join(data_root(), name)} "
            f"(scripts/fetch_datasets.sh downloads them on a networked machine)")
    return path


@pytest.fixture
def hand_fixture_dir(tmp_path):
    """Two graphs: a 2-node single-edge graph and an isolated node."""
    d = tmp_path / "TINY"
    d.mkdir()
    (d / "TINY_A.txt").write_text("1, 2\n2, 1\n")
    (d / "TINY_graph_indicator.txt").write_text("1\n1\n2\n")
    (d / "TINY_graph_labels.txt").write_text("0\n1\n")
    return str(d)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
