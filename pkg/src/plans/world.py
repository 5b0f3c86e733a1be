"""Karel grid world: immutable states, the action transition, and perceptions."""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from typing import Any

MARKER_CAP = 10
GRID_SIZE = 8


class InvalidAction(Exception):
    """Raised when an action cannot be applied in a state."""


class Heading(enum.Enum):
    NORTH = "N"
    EAST = "E"
    SOUTH = "S"
    WEST = "W"

    @property
    def delta(self) -> tuple[int, int]:
        return _DELTAS[self]

    def left(self) -> Heading:
        return _ORDER[(_ORDER.index(self) - 1) % 4]

    def right(self) -> Heading:
        return _ORDER[(_ORDER.index(self) + 1) % 4]


_ORDER = (Heading.NORTH, Heading.EAST, Heading.SOUTH, Heading.WEST)
_DELTAS = {
    Heading.NORTH: (-1, 0),
    Heading.EAST: (0, 1),
    Heading.SOUTH: (1, 0),
    Heading.WEST: (0, -1),
}


class Action(enum.Enum):
    MOVE = "move"
    TURN_LEFT = "turnLeft"
    TURN_RIGHT = "turnRight"
    PICK_MARKER = "pickMarker"
    PUT_MARKER = "putMarker"
    END = "end"

    @classmethod
    def from_name(cls, name: str) -> Action:
        return cls(name)


# The five non-terminal actions, in vocabulary order.
BASIC_ACTIONS = (
    Action.MOVE,
    Action.TURN_LEFT,
    Action.TURN_RIGHT,
    Action.PICK_MARKER,
    Action.PUT_MARKER,
)

PERCEPTIONS = (
    "frontIsClear",
    "leftIsClear",
    "rightIsClear",
    "markersPresent",
    "noMarkersPresent",
)
FRONT_IS_CLEAR, LEFT_IS_CLEAR, RIGHT_IS_CLEAR, MARKERS_PRESENT, NO_MARKERS_PRESENT = range(5)


@dataclass(frozen=True)
class WorldState:
    """A Karel grid. Cells outside the grid behave as walls.

    ``walls`` and ``markers`` are row-major tuples of rows.
    """

    width: int
    height: int
    walls: tuple[tuple[bool, ...], ...]
    markers: tuple[tuple[int, ...], ...]
    agent_row: int
    agent_col: int
    heading: Heading
    marker_cap: int = MARKER_CAP

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError("grid dimensions must be positive")
        if len(self.walls) != self.height or any(len(r) != self.width for r in self.walls):
            raise ValueError("walls shape does not match grid")
        if len(self.markers) != self.height or any(len(r) != self.width for r in self.markers):
            raise ValueError("markers shape does not match grid")
        if not self.in_grid(self.agent_row, self.agent_col):
            raise ValueError("agent outside grid")
        if self.walls[self.agent_row][self.agent_col]:
            raise ValueError("agent on a wall cell")
        for row in self.markers:
            for m in row:
                if m < 0 or m > self.marker_cap:
                    raise ValueError(f"marker count {m} outside [0, {self.marker_cap}]")

    @classmethod
    def empty(cls, width=GRID_SIZE, height=GRID_SIZE, agent=(0, 0), heading=Heading.EAST):
        return cls(
            width=width,
            height=height,
            walls=tuple((False,) * width for _ in range(height)),
            markers=tuple((0,) * width for _ in range(height)),
            agent_row=agent[0],
            agent_col=agent[1],
            heading=heading,
        )

    def in_grid(self, row: int, col: int) -> bool:
        return 0 <= row < self.height and 0 <= col < self.width

    def is_clear(self, row: int, col: int) -> bool:
        return self.in_grid(row, col) and not self.walls[row][col]

    def _clear_towards(self, heading: Heading) -> bool:
        dr, dc = heading.delta
        return self.is_clear(self.agent_row + dr, self.agent_col + dc)

    @property
    def markers_here(self) -> int:
        return self.markers[self.agent_row][self.agent_col]

    def _with_markers_here(self, count: int) -> WorldState:
        r, c = self.agent_row, self.agent_col
        row = self.markers[r]
        new_row = row[:c] + (count,) + row[c + 1:]
        return replace(self, markers=self.markers[:r] + (new_row,) + self.markers[r + 1:])

    def to_json(self) -> dict[str, Any]:
        return {
            "width": self.width,
            "height": self.height,
            "walls": [list(r) for r in self.walls],
            "markers": [list(r) for r in self.markers],
            "agent": [self.agent_row, self.agent_col],
            "heading": self.heading.value,
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> WorldState:
        return cls(
            width=obj["width"],
            height=obj["height"],
            walls=tuple(tuple(bool(v) for v in r) for r in obj["walls"]),
            markers=tuple(tuple(int(v) for v in r) for r in obj["markers"]),
            agent_row=obj["agent"][0],
            agent_col=obj["agent"][1],
            heading=Heading(obj["heading"]),
        )


def apply_action(state: WorldState, action: Action) -> WorldState:
    """Return the successor of ``state`` under ``action``.

    Raises InvalidAction for a blocked move, picking from an empty cell,
    putting onto a full cell, or the terminal ``end`` action.
    """
    if action is Action.MOVE:
        dr, dc = state.heading.delta
        r, c = state.agent_row + dr, state.agent_col + dc
        if not state.is_clear(r, c):
            raise InvalidAction(f"move blocked at ({state.agent_row},{state.agent_col})")
        return replace(state, agent_row=r, agent_col=c)
    if action is Action.TURN_LEFT:
        return replace(state, heading=state.heading.left())
    if action is Action.TURN_RIGHT:
        return replace(state, heading=state.heading.right())
    if action is Action.PICK_MARKER:
        if state.markers_here == 0:
            raise InvalidAction("pickMarker on an empty cell")
        return state._with_markers_here(state.markers_here - 1)
    if action is Action.PUT_MARKER:
        if state.markers_here >= state.marker_cap:
            raise InvalidAction("putMarker on a full cell")
        return state._with_markers_here(state.markers_here + 1)
    raise InvalidAction(f"{action.value} is not a transition")


def perceive(state: WorldState) -> tuple[bool, bool, bool, bool, bool]:
    """Evaluate the five perception primitives, in ``PERCEPTIONS`` order."""
    h = state.heading
    present = state.markers_here > 0
    return (
        state._clear_towards(h),
        state._clear_towards(h.left()),
        state._clear_towards(h.right()),
        present,
        not present,
    )
