import math

import numpy as np
import pytest
from hypothesis import strategies as st

from eventeraser.messages import Message

# acceptance results, filled in by test_acceptance.py and printed at the end
ACCEPTANCE: dict[str, tuple[bool, str]] = {}


def record(criterion: str, ok: bool, detail: str) -> None:
    prev = ACCEPTANCE.get(criterion)
    if prev is not None:
        ok = ok and prev[0]
        detail = f"{prev[1]}; {detail}"
    ACCEPTANCE[criterion] = (ok, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: int(s.split()[0])):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  criterion {name}: {detail}")


angles = st.floats(min_value=-720.0, max_value=720.0, allow_nan=False)
pol_angles = st.floats(min_value=0.0, max_value=90.0, allow_nan=False)
unit_interval = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@st.composite
def messages(draw):
    """Arbitrary valid message: random clocks and polarization."""
    # angles on a 1e-9 degree lattice: a subnormal polarization weight carries too few
    # bits to renormalize, and no physical source produces one
    psi_h, psi_v, xi = (round(draw(a), 9) for a in (angles, angles, pol_angles))
    r = math.radians
    return Message((math.cos(r(psi_h)), math.sin(r(psi_h))),
                   (math.cos(r(psi_v)), math.sin(r(psi_v))),
                   (math.cos(r(xi)), math.sin(r(xi))))


def pair_angle(p) -> float:
    return math.degrees(math.atan2(p[1], p[0]))


def same_angle(a: float, b: float, tol: float = 1e-9) -> bool:
    d = (a - b + 180.0) % 360.0 - 180.0
    return abs(d) <= tol


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
