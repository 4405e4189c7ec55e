from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from medens import medner, negex


@pytest.fixture(scope="session")
def lexicon():
    return medner.default_lexicon()


@pytest.fixture(scope="session")
def recognizer(lexicon):
    return medner.DictionaryRecognizer(lexicon)


@pytest.fixture(scope="session")
def rules():
    return negex.load_triggers()


def pytest_runtest_logreport(report):
    """One visible PASS/FAIL line per acceptance criterion."""
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1].replace("test_", "", 1)
    outcome = "PASS" if report.passed else "FAIL"
    print(f"\n[ACCEPTANCE] {name}: {outcome}")
