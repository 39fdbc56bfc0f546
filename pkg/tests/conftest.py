from __future__ import annotations

import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
DATA = TESTS / "data"
sys.path.insert(0, str(TESTS))

SCHEME_EXAMPLES = ["mestiere", "nice", "sottotitolo", "apostrofo", "boule"]


def conllu_files() -> list[Path]:
    return sorted(DATA.rglob("*.conllu"))


@pytest.fixture
def data_dir() -> Path:
    return DATA
