import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).resolve().parent))

from trace_helpers import write_trace


@pytest.fixture
def small_trace(tmp_path):
    # two sources, two noise components, three rows
    rows = [
        [0, 55.0, 105.0, 5.0, 5.0, 0.9, 0.1, 1.0, 3.16, -700.0, 0.1],
        [1, 58.0, 102.0, 2.0, 2.0, 0.92, 0.08, 1.0, 3.9, -650.0, 1.5],
        [2, 59.5, 100.5, 0.5, 0.5, 0.94, 0.06, 1.0, 4.2, -640.0, 2.9],
    ]
    return write_trace(tmp_path / "small.csv", rows)
