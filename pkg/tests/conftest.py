import pytest

from adsbench.benchmarks import load_benchmarks, load_ledger
from adsbench.config import default_config
from adsbench.ingest import classify, load_roster, prepare_records


@pytest.fixture(scope='session')
def config():
  return default_config()


@pytest.fixture(scope='session')
def classified(config):
  records = prepare_records(config)
  return classify(records, load_roster(), config).events


@pytest.fixture(scope='session')
def ledger():
  return load_ledger()


@pytest.fixture(scope='session')
def registry():
  return load_benchmarks()
