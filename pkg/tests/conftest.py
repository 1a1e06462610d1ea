import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

CORPUS = Path(__file__).parent.parent / "src" / "opsend" / "corpus"


@pytest.fixture
def corpus():
    def path(name: str) -> str:
        return str(CORPUS / name)
    return path
