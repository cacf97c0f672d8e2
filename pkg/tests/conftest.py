import sys
from pathlib import Path

import numpy as np
import pytest
from hypothesis import settings, strategies as st

sys.path.insert(0, str(Path(__file__).parent))

from finmetric import FiniteMetricSpace  # noqa: E402
from finmetric.verify import GeneratorConfig, gen_random_metric  # noqa: E402

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

ACCEPTANCE_LINES: dict[int, str] = {}


@st.composite
def spaces(draw, min_n=1, max_n=8, modes=("euclidean", "range12", "dendrogram", "grid")):
    """Random spaces from the package generators or small integer point clouds.

    Integer clouds (mode ``grid``) produce many tied distances.
    """
    n = draw(st.integers(min_n, max_n))
    kind = draw(st.sampled_from(modes))
    if kind == "grid":
        pts = draw(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)),
                            min_size=n, max_size=n, unique=True))
        return FiniteMetricSpace.from_points(np.array(pts, dtype=float), "euclidean")
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return gen_random_metric(GeneratorConfig(n, seed, kind))


@pytest.fixture
def tmp_json(tmp_path):
    def write(name, text):
        p = tmp_path / name
        p.write_text(text)
        return p
    return write


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[k])
