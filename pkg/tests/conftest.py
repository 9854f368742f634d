import json
from pathlib import Path

import pytest

from thermosmc.harness import run_scenario, scenario_from_dict

REFERENCE = json.loads((Path(__file__).parent / "oracles" / "reference.json").read_text())
SCENARIOS = Path(__file__).resolve().parents[1] / "scenarios"


@pytest.fixture(scope="session")
def ref():
    return REFERENCE


@pytest.fixture(scope="session")
def scenario_dir():
    return SCENARIOS


@pytest.fixture(scope="session")
def mono_desk_run():
    return run_scenario(scenario_from_dict({"mode": "mono", "sensor": {"noise_std_K": 0.0}}))


@pytest.fixture(scope="session")
def bi_desk_run():
    return run_scenario(scenario_from_dict({"mode": "bi", "sensor": {"noise_std_K": 0.0}}))
