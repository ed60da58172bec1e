import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from pimsner_lab.algebra import ScalarAlgebra

settings.register_profile(
    "repo", deadline=None, max_examples=40, derandomize=True,
    suppress_health_check=[HealthCheck.too_slow, HealthCheck.function_scoped_fixture],
)
settings.load_profile("repo")

block_lists = st.lists(st.integers(1, 3), min_size=1, max_size=3)
seeds = st.integers(0, 2**31 - 1)


@st.composite
def algebras(draw):
    return ScalarAlgebra(tuple(draw(block_lists)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def c6():
    return ScalarAlgebra.commutative(6)


ACCEPTANCE: dict[int, tuple[bool, str]] = {}


def record(criterion: int, ok: bool, detail: str) -> None:
    ACCEPTANCE[criterion] = (ok, detail)
    print(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
