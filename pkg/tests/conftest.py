from __future__ import annotations

import json
from pathlib import Path

import pytest

from heritage_forge.mapping import MintContext, apply_rules, parse_rules
from heritage_forge.ontology import default_ontology
from heritage_forge.records import parse_record
from heritage_forge.store import parse_ntriples

DATA = Path(__file__).resolve().parents[1] / "src" / "heritage_forge" / "data"
FIXTURES = Path(__file__).parent / "fixtures"
BASE = "https://example.org/heritage/"


@pytest.fixture(scope="session")
def ont():
    return default_ontology()


@pytest.fixture(scope="session")
def versailles_rules(ont):
    return parse_rules(DATA / "versailles.rules.json", ont)


@pytest.fixture(scope="session")
def versailles_record():
    return parse_record(json.loads((DATA / "versailles.json").read_text(encoding="utf-8")))


@pytest.fixture(scope="session")
def versailles_ctx(versailles_record):
    return MintContext.for_record(BASE, versailles_record)


@pytest.fixture()
def versailles_graph(versailles_rules, versailles_record, versailles_ctx, ont):
    g, _ = apply_rules(versailles_rules, versailles_record, versailles_ctx, ont)
    return g


@pytest.fixture(scope="session")
def golden_graph():
    return parse_ntriples((FIXTURES / "versailles.golden.nt").read_text(encoding="utf-8"))


# -- acceptance reporting ------------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "acceptance(number, title): numbered acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    number, title = marker.args
    if rep.when == "call" or (rep.when == "setup" and rep.outcome != "passed"):
        _ACCEPTANCE[number] = (title, "PASS" if rep.passed else "FAIL")


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        title, verdict = _ACCEPTANCE[number]
        terminalreporter.write_line(f"[{verdict}] criterion {number}: {title}")
