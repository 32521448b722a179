from dataclasses import fields, replace

import pytest

from geoclip.core.config import config
from geoclip.core.utils import make_rng, set_log_level

SEEDS = (0, 1, 2)


@pytest.fixture(params=SEEDS)
def seed(request):
    """Global seed; property tests run once per seed."""
    return request.param


@pytest.fixture
def rng(seed):
    return make_rng(seed, 99)


@pytest.fixture
def global_config():
    """The global config; every field is restored after the test."""
    saved = replace(config)
    yield config
    for f in fields(saved):
        setattr(config, f.name, getattr(saved, f.name))
    set_log_level(saved.log_level)


@pytest.fixture
def tmp_csv(tmp_path):
    """Write a CSV body and schema text; returns (csv_path, schema_path)."""
    def write(body, schema="target = target\ntask = regression\n", name="data"):
        csv_path = tmp_path / f"{name}.csv"
        schema_path = tmp_path / f"{name}.schema"
        csv_path.write_text(body, encoding="utf-8")
        schema_path.write_text(schema, encoding="utf-8")
        return csv_path, schema_path
    return write
