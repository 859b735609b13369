from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from elastoplast.reference_elements import ElementType, Family  # noqa: E402

ALL_TYPES = [ElementType(f, d) for d in (2, 3) for f in Family]
TYPE_IDS = [str(t).replace("/", "-") for t in ALL_TYPES]

# acceptance lines collected during the session, printed at the end
ACCEPTANCE_LINES: dict[int, str] = {}


@pytest.fixture(params=ALL_TYPES, ids=TYPE_IDS)
def elem_type(request):
    return request.param


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
