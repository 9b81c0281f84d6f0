import json
import shutil
from pathlib import Path

import pytest

ACCEPTANCE_CRITERIA = {
    "TestTfidfRankingOracle": "TF-IDF & ranking oracle",
    "TestUmbrellaQuestionEndToEnd": "Umbrella-question end-to-end",
    "TestClusteringOracle": "Clustering oracle",
    "TestFusionStateMachine": "Fusion state machine",
    "TestMetaProfileArithmetic": "Meta-profile arithmetic",
    "TestPersistenceAndService": "Persistence & service",
}

_acceptance_results: dict[str, bool] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance: release acceptance criterion")


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    parts = report.nodeid.split("::")
    if len(parts) < 2 or "test_acceptance" not in parts[0]:
        return
    criterion = ACCEPTANCE_CRITERIA.get(parts[1])
    if criterion is None:
        return
    passed = report.outcome == "passed"
    _acceptance_results[criterion] = _acceptance_results.get(criterion, True) and passed


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for name in ACCEPTANCE_CRITERIA.values():
        if name in _acceptance_results:
            verdict = "PASS" if _acceptance_results[name] else "FAIL"
            terminalreporter.write_line(f"{verdict}  {name}")

from corpuskg.config import ServiceConfig
from corpuskg.convo import LlmConfig
from corpuskg.kg import Kg
from corpuskg.store import Store

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "fixtures"


def fixture_config(data_dir: Path) -> ServiceConfig:
    cfg = ServiceConfig(
        data_dir=data_dir,
        embeddings_file=FIXTURES / "embeddings.txt",
        llm=LlmConfig(stub=True),
    )
    return cfg.validate()


def build_fixture_store(data_dir: Path) -> Store:
    """Ingest + index + kg init + cluster over the shipped fixture corpus."""
    store = Store(fixture_config(data_dir))
    store.ensure_layout()
    store.ingest_directory(FIXTURES / "corpus")
    store.fold()
    seed = json.loads((FIXTURES / "kg_seed.json").read_text("utf-8"))
    store.set_kg(Kg.init_seed(seed))
    seeds = json.loads((FIXTURES / "cluster_seeds.json").read_text("utf-8"))
    store.run_clustering(seeds)
    return store


@pytest.fixture(scope="session")
def fixture_store_template(tmp_path_factory) -> Path:
    """Built once; tests copy it for isolated mutation."""
    root = tmp_path_factory.mktemp("fixture-store")
    build_fixture_store(root / "data")
    return root / "data"


@pytest.fixture
def fixture_store(fixture_store_template, tmp_path) -> Store:
    data_dir = tmp_path / "data"
    shutil.copytree(fixture_store_template, data_dir)
    return Store(fixture_config(data_dir))


@pytest.fixture(scope="session")
def shared_store(fixture_store_template) -> Store:
    """Read-only store over the session template; do not mutate."""
    return Store(fixture_config(fixture_store_template))
