import json
import pathlib

import pytest

DATA = pathlib.Path(__file__).parent / "data"
GOLDEN = pathlib.Path(__file__).parent / "golden"

CURATED = ["quadratic", "degenerate", "clamp", "corner", "omega_active", "simplex"]


def data_path(name):
    return DATA / f"{name}.json"


def load_doc(name):
    with open(data_path(name)) as fh:
        return json.load(fh)


@pytest.fixture
def curated_names():
    return list(CURATED)
