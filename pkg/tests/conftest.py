import numpy as np
import pytest
from hypothesis import settings

from tbcodes.codes import TBCodeSpec, named_code
from tbcodes.logicals import tb12_reference_basis

settings.register_profile("repo", max_examples=60, deadline=None)
settings.load_profile("repo")

# Check matrices of the [[12,2,3]] code, rows as printed (1 = support).
TB12_HZ = [
    "101000010100",
    "110000001010",
    "011000100001",
    "000101100010",
    "000110010001",
    "000011001100",
]
TB12_HX = [
    "001100110000",
    "100010011000",
    "010001101000",
    "100001000110",
    "010100000011",
    "001010000101",
]


def rows_to_array(rows):
    return np.array([[int(c) for c in r] for r in rows], dtype=np.uint8)


@pytest.fixture(scope="session")
def tb12():
    return named_code("tb12")


@pytest.fixture(scope="session")
def tb12_basis():
    return tb12_reference_basis()


@pytest.fixture(scope="session")
def tb12_spec():
    return TBCodeSpec.from_dict({"l": 2, "m": 3, "a": [["x", 1], ["y", 2]], "b": [["x", 2], ["z", 4]]})


@pytest.fixture(scope="session")
def surface3():
    return named_code("surface3")


_criteria: dict[str, str] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.rsplit("::", 1)[-1]
    if not name.startswith("test_criterion_"):
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        _criteria[name] = "PASS" if report.passed else "FAIL"


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(_criteria):
        number, _, label = name[len("test_criterion_"):].partition("_")
        terminalreporter.write_line(f"criterion {int(number):2d} {_criteria[name]}  {label.replace('_', ' ')}")
