import copy
import json
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
REFERENCE_CONFIG = REPO_ROOT / "configs" / "reference.json"


@pytest.fixture(scope="session")
def reference_doc() -> dict:
    with open(REFERENCE_CONFIG, "r", encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture()
def small_doc(reference_doc) -> dict:
    """Reference scenario shrunk to a 2-station route for fast tests."""
    doc = copy.deepcopy(reference_doc)
    doc["route"]["stations_m"] = [0.0, 400.0]
    doc["route"]["total_length_m"] = 400.0
    doc["route"]["tunnel_segments_m"] = [[100.0, 400.0]]
    doc["profile"]["dwell_s"] = 4.0
    return doc
