import math

import pytest

from movestab.circlemap import anchor_conjugacy, birkhoff_conjugacy, boundary_map, rotation_number
from movestab.profiles import example1_profile

ALPHA, BETA = 0.5, -1.0 / 3.0
RHO_FORMULA = math.log(3.0) / math.log(6.0)


@pytest.fixture(scope="session")
def ex1():
    return example1_profile(ALPHA, BETA)


@pytest.fixture(scope="session")
def ex1_map(ex1):
    return boundary_map(ex1)


@pytest.fixture(scope="session")
def ex1_rotation(ex1_map):
    return rotation_number(ex1_map)


@pytest.fixture(scope="session")
def ex1_birkhoff(ex1_map, ex1_rotation):
    return birkhoff_conjugacy(ex1_map, ex1_rotation.rho)


@pytest.fixture(scope="session")
def ex1_anchored(ex1, ex1_birkhoff, ex1_rotation):
    return anchor_conjugacy(ex1_birkhoff, ex1, ex1_rotation.rho)


# acceptance criteria report: one line per criterion, printed after the run
ACCEPTANCE = {}


def record_acceptance(criterion, part, ok, detail):
    ACCEPTANCE.setdefault(criterion, {})[part] = (bool(ok), detail)
    print(f"{criterion}({part}) {'PASS' if ok else 'FAIL'}: {detail}")


def acceptance_lines():
    lines = []
    for crit in sorted(ACCEPTANCE, key=lambda c: int(c.split("-")[1])):
        parts = ACCEPTANCE[crit]
        status = "PASS" if all(ok for ok, _ in parts.values()) else "FAIL"
        body = "; ".join(f"({p}) {'PASS' if ok else 'FAIL'} {d}"
                         for p, (ok, d) in sorted(parts.items()))
        lines.append(f"{crit} {status}  {body}")
    return lines


def pytest_terminal_summary(terminalreporter):
    lines = acceptance_lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
