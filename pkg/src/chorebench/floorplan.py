"""Grid floorplans: passability, fixture placement, loading and validation."""

from __future__ import annotations

import importlib.resources
import json
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path

from .catalog import FIXTURE_TYPES
from .errors import WorldError

ROOM_TYPES = ("kitchen", "livingroom", "bedroom", "bathroom")


@dataclass(frozen=True)
class Fixture:
    object_type: str
    cell: tuple


@dataclass
class Floorplan:
    floorplan_id: str
    room_type: str
    width: int
    height: int
    blocked: set = field(default_factory=set)
    fixtures: list = field(default_factory=list)

    def in_bounds(self, cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def fixture_cells(self) -> set:
        return {f.cell for f in self.fixtures}

    def passable(self, cell) -> bool:
        return (
            self.in_bounds(cell)
            and cell not in self.blocked
            and cell not in self.fixture_cells()
        )

    def passable_cells(self) -> list:
        return [
            (x, y)
            for y in range(self.height)
            for x in range(self.width)
            if self.passable((x, y))
        ]

    def validate(self):
        if self.room_type not in ROOM_TYPES:
            raise WorldError(f"{self.floorplan_id}: unknown room type {self.room_type!r}")
        seen_cells = set()
        for fixture in self.fixtures:
            if fixture.object_type not in FIXTURE_TYPES:
                raise WorldError(
                    f"{self.floorplan_id}: {fixture.object_type} is not a fixture type"
                )
            if not self.in_bounds(fixture.cell):
                raise WorldError(f"{self.floorplan_id}: fixture outside grid")
            # Faucets share their sink/bathtub cell; everything else is exclusive.
            if fixture.cell in seen_cells and fixture.object_type != "Faucet":
                raise WorldError(f"{self.floorplan_id}: two fixtures at {fixture.cell}")
            seen_cells.add(fixture.cell)
        passable = self.passable_cells()
        if not passable:
            raise WorldError(f"{self.floorplan_id}: no passable cells")
        # every fixture must be reachable from the passable region
        for fixture in self.fixtures:
            if not any(
                self.passable(n) for n in neighbors(fixture.cell)
            ):
                raise WorldError(
                    f"{self.floorplan_id}: fixture at {fixture.cell} has no adjacent floor"
                )
        # grid connectivity over passable cells
        start = passable[0]
        seen = {start}
        queue = deque([start])
        while queue:
            cell = queue.popleft()
            for n in neighbors(cell):
                if self.passable(n) and n not in seen:
                    seen.add(n)
                    queue.append(n)
        if len(seen) != len(passable):
            raise WorldError(f"{self.floorplan_id}: floor is not connected")

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "floorplan_id": self.floorplan_id,
            "room_type": self.room_type,
            "width": self.width,
            "height": self.height,
            "blocked": sorted(list(c) for c in self.blocked),
            "fixtures": [
                {"object_type": f.object_type, "cell": list(f.cell)}
                for f in self.fixtures
            ],
        }

    @classmethod
    def from_dict(cls, d) -> "Floorplan":
        plan = cls(
            floorplan_id=d["floorplan_id"],
            room_type=d["room_type"],
            width=d["width"],
            height=d["height"],
            blocked={tuple(c) for c in d.get("blocked", [])},
            fixtures=[Fixture(f["object_type"], tuple(f["cell"])) for f in d["fixtures"]],
        )
        plan.validate()
        return plan


def neighbors(cell):
    x, y = cell
    return ((x, y - 1), (x + 1, y), (x, y + 1), (x - 1, y))


def load_floorplan(path) -> Floorplan:
    with open(path, "r", encoding="utf-8") as fh:
        return Floorplan.from_dict(json.load(fh))


def load_floorplan_dir(root) -> dict:
    root = Path(root)
    plans = {}
    for path in sorted(root.glob("*.json")):
        plan = load_floorplan(path)
        plans[plan.floorplan_id] = plan
    if not plans:
        raise WorldError(f"no floorplans found in {root}")
    return plans


def shipped_floorplans() -> dict:
    node = importlib.resources.files("chorebench") / "data" / "floorplans"
    plans = {}
    for entry in sorted(node.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".json"):
            plan = Floorplan.from_dict(json.loads(entry.read_text(encoding="utf-8")))
            plans[plan.floorplan_id] = plan
    return plans
