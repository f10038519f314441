import json
from pathlib import Path

import pytest

DATA_DIR = Path(__file__).parent / "data"


def load_data(name: str):
    with open(DATA_DIR / name) as f:
        return json.load(f)


@pytest.fixture(scope="session")
def syllable_oracle():
    return load_data("syllable_oracle.json")


@pytest.fixture(scope="session")
def readability_fixtures():
    return load_data("readability_fixtures.json")
