#!/usr/bin/env python3
"""Regenerate the shipped floorplan JSON files.

Layouts are authored as ASCII maps; each letter places one fixture along
the walls of a rectangular room. Run from the repo root:

    python tools/make_floorplans.py
"""

import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from chorebench.floorplan import Floorplan, Fixture  # noqa: E402

LEGEND = {
    "C": "CounterTop",
    "S": "Sink",        # a Faucet is added on the same cell automatically
    "B": "StoveBurner",
    "F": "Fridge",
    "K": "Cabinet",
    "D": "Drawer",
    "M": "Microwave",
    "T": "Toaster",
    "E": "CoffeeMachine",
    "N": "DiningTable",
    "I": "SideTable",
    "O": "CoffeeTable",
    "W": "Desk",
    "H": "Shelf",
    "U": "Bathtub",
    "P": "HousePlant",
    "G": "GarbageCan",
    "#": None,          # blocked cell (interior wall)
}

# fmt: off
LAYOUTS = {
    ("kitchen_1", "kitchen"): [
        "CSCBTC....",
        "..........",
        "F........K",
        "M........D",
        "E........H",
        "..........",
        "..N....P..",
        "..........",
    ],
    ("kitchen_2", "kitchen"): [
        "KCSCC....F",
        ".........M",
        ".........E",
        "..........",
        "B...N.....",
        "B.........",
        "T........D",
        "C........H",
        "..........",
    ],
    ("kitchen_3", "kitchen"): [
        "FCCSCBT..",
        ".........",
        "K.......E",
        "D.......M",
        ".........",
        "...N.....",
        ".........",
        "H.......C",
    ],
    ("kitchen_4", "kitchen"): [
        "CCSB.....T.C",
        "............",
        "F..........K",
        "M..##......D",
        "E..##......H",
        "............",
        "....N...P...",
        "............",
        "G..........C",
    ],
    ("kitchen_5", "kitchen"): [
        "BCTSCE...",
        ".........",
        "F.......D",
        "K.......M",
        ".........",
        "..N......",
        ".........",
        "C.......H",
        ".........",
    ],
    ("kitchen_6", "kitchen"): [
        "CSCC...BT.",
        "..........",
        "E.........",
        "M........F",
        "..........",
        "K....N...D",
        "..........",
        "H........C",
    ],
    ("livingroom_1", "livingroom"): [
        "HI.....IH",
        ".........",
        "D.......P",
        ".........",
        "...OO....",
        ".........",
        "W........",
        ".....I...",
    ],
    ("livingroom_2", "livingroom"): [
        "PH.....I..",
        "..........",
        "I........D",
        "..........",
        "....O.....",
        "..........",
        "H........W",
        "..........",
    ],
    ("bedroom_1", "bedroom"): [
        "WI.....H",
        "........",
        "D......I",
        "........",
        "........",
        "H......D",
        "........",
    ],
    ("bedroom_2", "bedroom"): [
        "IDW......",
        ".........",
        "H........",
        "........I",
        ".........",
        "D.......H",
        ".........",
    ],
    ("bathroom_1", "bathroom"): [
        "SCK....",
        ".......",
        "D.....U",
        "......U",
        ".......",
        "H......",
    ],
    ("bathroom_2", "bathroom"): [
        "UU....S.",
        "........",
        "K......C",
        "........",
        "D......H",
        "........",
    ],
}
# fmt: on


def build(plan_id, room_type, rows):
    width = max(len(r) for r in rows)
    height = len(rows)
    blocked = set()
    fixtures = []
    for y, row in enumerate(rows):
        for x, ch in enumerate(row):
            if ch == ".":
                continue
            object_type = LEGEND[ch]
            if object_type is None:
                blocked.add((x, y))
                continue
            fixtures.append(Fixture(object_type, (x, y)))
            if object_type in ("Sink", "Bathtub"):
                fixtures.append(Fixture("Faucet", (x, y)))
    plan = Floorplan(plan_id, room_type, width, height, blocked, fixtures)
    plan.validate()
    return plan


def main():
    out_dir = Path(__file__).resolve().parent.parent / "src" / "chorebench" / "data" / "floorplans"
    out_dir.mkdir(parents=True, exist_ok=True)
    for (plan_id, room_type), rows in LAYOUTS.items():
        plan = build(plan_id, room_type, rows)
        path = out_dir / f"{plan_id}.json"
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(plan.to_dict(), fh, indent=2)
            fh.write("\n")
        print(f"wrote {path.name}: {plan.width}x{plan.height}, {len(plan.fixtures)} fixtures")


if __name__ == "__main__":
    main()
