import os
from pathlib import Path

import pytest

import evidencenet as en

REPO_ROOT = Path(__file__).resolve().parents[1]
SHIPPED_MASTER_SEED = 38


@pytest.fixture(scope="session")
def data_path():
    path = os.environ.get("EVIDENCENET_DATA", str(REPO_ROOT / "data" / "housing.data"))
    if not os.path.exists(path):
        pytest.skip(f"housing table not found at {path}")
    return path


@pytest.fixture(scope="session")
def dataset(data_path):
    return en.whiten(en.load_table(data_path))


@pytest.fixture(scope="session")
def shipped_splits(dataset):
    return en.make_splits(dataset.n_rows, SHIPPED_MASTER_SEED, 10)
