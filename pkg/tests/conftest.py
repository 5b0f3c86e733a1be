import pytest

from plans.dsl import Cond, Program, While
from plans.semantics import run_concrete
from plans.world import FRONT_IS_CLEAR, Action, Heading, WorldState

M, L, R, PICK, PUT, END = (
    Action.MOVE, Action.TURN_LEFT, Action.TURN_RIGHT, Action.PICK_MARKER, Action.PUT_MARKER, Action.END,
)
FRONT = Cond(FRONT_IS_CLEAR)
CORRIDOR_PROGRAM = Program((While(FRONT, (M,)),))


def corridor(length: int) -> WorldState:
    """1 x length strip, agent at the west end facing east."""
    return WorldState.empty(width=length, height=1, agent=(0, 0), heading=Heading.EAST)


def corridor_demo(length: int):
    return run_concrete(CORRIDOR_PROGRAM, corridor(length))


@pytest.fixture
def corridor_demos():
    return [corridor_demo(n) for n in (2, 3, 4)]


# ---------------------------------------------------------------- acceptance report

ACCEPTANCE: dict[int, str] = {}


class _Criterion:
    def __init__(self, number: int, title: str):
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        verdict = "PASS" if exc_type is None else "FAIL"
        line = f"criterion {self.number} [{verdict}] {self.title}: {self.detail}"
        ACCEPTANCE[self.number] = line
        print(line)
        return False


def criterion(number: int, title: str) -> _Criterion:
    return _Criterion(number, title)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[number])
