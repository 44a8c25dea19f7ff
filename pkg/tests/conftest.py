import json
from pathlib import Path

import pytest

from faultkit import load_model, load_specs, load_tfpg, load_node_map

CORPUS = Path(__file__).resolve().parent.parent / "corpus"


def corpus_path(name: str) -> Path:
    return CORPUS / name


def corpus_json(name: str):
    with open(CORPUS / name, encoding="utf-8") as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def battery():
    return load_model(CORPUS / "battery.json")


@pytest.fixture(scope="session")
def sensor_delay():
    return load_model(CORPUS / "sensor_delay.json")


@pytest.fixture(scope="session")
def intermittent():
    return load_model(CORPUS / "intermittent.json")


@pytest.fixture(scope="session")
def fully_obs():
    return load_model(CORPUS / "fully_obs.json")


@pytest.fixture(scope="session")
def unobservable():
    return load_model(CORPUS / "unobservable.json")


@pytest.fixture(scope="session")
def sensor_specs():
    return {s.name: s for s in load_specs(CORPUS / "alarms_sensor.json")}


@pytest.fixture(scope="session")
def intermittent_specs():
    return {s.name: s for s in load_specs(CORPUS / "alarms_intermittent.json")}


@pytest.fixture(scope="session")
def tfpg_power():
    return load_tfpg(CORPUS / "tfpg_power.json")


@pytest.fixture(scope="session")
def tfpg_modegap():
    return load_tfpg(CORPUS / "tfpg_modegap.json")


@pytest.fixture(scope="session")
def tfpg_battery():
    return load_tfpg(CORPUS / "tfpg_battery.json")


@pytest.fixture(scope="session")
def battery_map():
    return load_node_map(CORPUS / "battery_map.json")
