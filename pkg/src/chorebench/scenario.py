"""Seeded scenario generation: initial worlds satisfying task preconditions."""

from __future__ import annotations

import random
from dataclasses import dataclass

from . import catalog
from .checker import evaluate_task
from .errors import ScenarioError
from .floorplan import Floorplan
from .library import TaskLibrary
from .tdl import Determiner, GroundTask, TaskRefComponent
from .world import AgentPose, WorldState, make_object, mint_object_id

MAX_ATTEMPTS = 1000

# Fixture types a condition implicitly depends on for solvability.
_FIXTURE_NEEDS = {
    "isDirty": ("Sink", "Faucet"),
    "isFilledWithLiquid": ("Faucet",),
    "isFilledWithCoffee": ("CoffeeMachine",),
    "isBoiled": ("StoveBurner", "Faucet"),
}

DISTRACTOR_TYPES = (
    "Book",
    "Pen",
    "Pencil",
    "KeyChain",
    "Watch",
    "Candle",
    "Statue",
    "Vase",
    "CellPhone",
)

# Where movable objects may start. Closed storage exercises the
# open-before-pickup logic in episodes.
_OPEN_SPOTS = ("CounterTop", "DiningTable", "SideTable", "CoffeeTable", "Desk", "Shelf")
_CLOSED_SPOTS = ("Fridge", "Cabinet", "Drawer")


@dataclass
class Scenario:
    floorplan_id: str
    task_name: str
    task_params: tuple
    seed: int
    world: WorldState

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "floorplan_id": self.floorplan_id,
            "task_name": self.task_name,
            "task_params": list(self.task_params),
            "seed": self.seed,
            "world": self.world.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> "Scenario":
        return cls(
            d["floorplan_id"],
            d["task_name"],
            tuple(d["task_params"]),
            d["seed"],
            WorldState.from_dict(d["world"]),
        )


@dataclass
class _Need:
    spawn_type: str | None   # movable type to create, None if fixtures suffice
    fixture_types: set       # fixture types any of which satisfies presence
    count: int               # 0 means "free amount" (determiner all)
    conditions: dict         # ground conditions of the owning component
    needs_slicing: bool = False


def _flatten_needs(ground: GroundTask, lib: TaskLibrary, outer: Determiner, out: list):
    """Concrete object types the task needs present, with counts."""
    h = lib.hierarchy
    for comp in ground.components.values():
        det = Determiner.parse(comp.determiner)
        if isinstance(comp, TaskRefComponent):
            if det.kind == "all":
                raise ScenarioError("cannot generate for 'all' over a task reference")
            eff = (
                det
                if outer.kind == "a"
                else Determiner.count(outer.n * (det.n if det.kind == "count" else 1))
            )
            _flatten_needs(lib.ground(comp.task_name, comp.task_params), lib, eff, out)
            continue
        if comp.instance_shareable or det.kind == "all" or outer.kind == "a":
            eff = det
        else:
            eff = Determiner.count(outer.n * (det.n if det.kind == "count" else 1))
        prop = comp.primary_condition
        desired = str(comp.conditions[prop])
        types = sorted(h.expand(desired)) if prop == "objectClass" else [desired]
        known = [t for t in types if t in catalog.CATALOG]
        movable = [t for t in known if catalog.CATALOG[t].pickupable]
        fixtures = {t for t in known if t in catalog.FIXTURE_TYPES}
        sources = sorted(catalog.SLICE_SOURCE[t] for t in types if t in catalog.SLICE_SOURCE)
        if sources:
            spawn = sources[0]
            slicing = True
        elif movable:
            spawn = movable[0]
            slicing = False
        elif fixtures:
            spawn = None
            slicing = False
        else:
            raise ScenarioError(f"no known object type satisfies {prop}={desired!r}")
        count = 0 if det.kind == "all" else eff.required()
        out.append(_Need(spawn, fixtures, count, dict(comp.conditions), slicing))


def _required_fixtures(needs: list) -> list:
    """(fixture_type_alternatives, reason) presence requirements."""
    wanted = []
    for need in needs:
        if need.spawn_type is None and need.fixture_types:
            wanted.append((need.fixture_types, "task component"))
        for prop in need.conditions:
            for fixture in _FIXTURE_NEEDS.get(prop, ()):
                wanted.append(({fixture}, f"condition {prop}"))
        if need.conditions.get("isCooked") == 1:
            target = str(need.conditions.get("objectType", ""))
            if target == "BreadSliced":
                wanted.append(({"Toaster"}, "toasting bread"))
            else:
                wanted.append(({"Microwave"}, "cooking"))
        if need.needs_slicing:
            wanted.append((set(), "knife"))  # movable; handled separately
    return [(alts, why) for alts, why in wanted if alts]


def _spawn_fixtures(plan: Floorplan) -> WorldState:
    world = WorldState(plan.floorplan_id, {}, AgentPose((0, 0)), AgentPose((0, 0)))
    for fixture in plan.fixtures:
        obj = make_object(
            fixture.object_type,
            cell=fixture.cell,
            object_id=mint_object_id(
                fixture.object_type, float(fixture.cell[0]),
                float(catalog.spec_for(fixture.object_type).height), float(fixture.cell[1]),
            ),
        )
        world.add_object(obj)
    return world


def _spot_pool(world: WorldState, rng: random.Random, allow_closed=True):
    open_spots = [
        o.object_id
        for o in sorted(world.objects.values(), key=lambda o: o.object_id)
        if o.object_type in _OPEN_SPOTS
    ]
    closed_spots = [
        o.object_id
        for o in sorted(world.objects.values(), key=lambda o: o.object_id)
        if o.object_type in _CLOSED_SPOTS
    ]
    if not allow_closed:
        closed_spots = []
    return open_spots, closed_spots


def _place_movable(world, rng, obj, open_spots, closed_spots, occupancy):
    pools = [open_spots] * 7 + [closed_spots] * 3 if closed_spots else [open_spots]
    pool = rng.choice(pools)
    candidates = [
        s for s in pool if occupancy.get(s, 0) < catalog.capacity(world.objects[s].object_type)
    ]
    if not candidates:
        candidates = [
            s
            for s in open_spots
            if occupancy.get(s, 0) < catalog.capacity(world.objects[s].object_type)
        ]
    if not candidates:
        raise ScenarioError("no receptacle space left for initial placement")
    spot = rng.choice(candidates)
    obj.properties["parentReceptacles"] = spot
    obj.properties["visibleHeight"] = world.objects[spot].get("visibleHeight", 1)
    obj.cell = None
    occupancy[spot] = occupancy.get(spot, 0) + 1
    world.add_object(obj)


def _initial_override(rng: random.Random, object_type: str, conditions: dict) -> dict:
    """Start task-target objects in a not-yet-satisfied state."""
    spec = catalog.spec_for(object_type)
    overrides = {}
    if conditions.get("isDirty") == 0 and spec.washable:
        overrides["isDirty"] = 1
    if "isFilledWithCoffee" in conditions and spec.washable:
        # a dirty or clean-but-empty mug both leave the task unsatisfied
        overrides["isDirty"] = rng.choice([0, 1])
    return overrides


def generate_scenario(
    task: GroundTask,
    plan: Floorplan,
    seed: int,
    lib: TaskLibrary,
) -> Scenario:
    """Seeded rejection sampling of an initial world for one task.

    Deterministic per (task, floorplan, seed); raises ScenarioError when the
    floorplan lacks a required fixture or sampling keeps failing.
    """
    needs: list[_Need] = []
    _flatten_needs(task, lib, Determiner.A, needs)
    plan_fixture_types = {f.object_type for f in plan.fixtures}
    for alternatives, why in _required_fixtures(needs):
        if not alternatives & plan_fixture_types:
            raise ScenarioError(
                f"{task.source_task_name} needs {'/'.join(sorted(alternatives))} "
                f"({why}); {plan.floorplan_id} has none"
            )
    knife_needed = any(n.needs_slicing for n in needs)

    rng = random.Random(f"{task.source_task_name}|{','.join(task.params)}|{plan.floorplan_id}|{seed}")
    for _ in range(MAX_ATTEMPTS):
        world = _spawn_fixtures(plan)
        open_spots, closed_spots = _spot_pool(world, rng)
        occupancy: dict[str, int] = {}
        for need in needs:
            if need.spawn_type is None:
                continue
            count = need.count if need.count else rng.randint(1, 3)
            for _i in range(count):
                overrides = _initial_override(rng, need.spawn_type, need.conditions)
                obj = make_object(need.spawn_type, **overrides)
                _place_movable(world, rng, obj, open_spots, closed_spots, occupancy)
        if knife_needed and not any(
            lib.hierarchy.is_member(o.object_type, "Knife") for o in world.objects.values()
        ):
            obj = make_object("Knife")
            _place_movable(world, rng, obj, open_spots, closed_spots, occupancy)
        target_types = {n.spawn_type for n in needs if n.spawn_type}
        n_distractors = rng.randint(2, 5)
        pool = [t for t in DISTRACTOR_TYPES if t not in target_types]
        for _i in range(n_distractors):
            obj = make_object(rng.choice(pool))
            _place_movable(world, rng, obj, open_spots, closed_spots, occupancy)
        cells = plan.passable_cells()
        world.follower = AgentPose(rng.choice(cells), rng.choice("NESW"))
        world.commander = AgentPose(rng.choice(cells), rng.choice("NESW"))
        world.validate()
        if not evaluate_task(world, task, lib).satisfied:
            return Scenario(
                floorplan_id=plan.floorplan_id,
                task_name=task.source_task_name,
                task_params=task.params,
                seed=seed,
                world=world,
            )
    raise ScenarioError(
        f"could not build an unsatisfied start state for {task.source_task_name} "
        f"on {plan.floorplan_id} after {MAX_ATTEMPTS} attempts"
    )


# Parameter variants used by the episode driver when a task takes parameters.
PARAM_CHOICES = {
    "Clean All X": [["Plate"], ["Bowl"], ["Mug"], ["Cup"], ["Fork"], ["Spoon"], ["Pot"], ["Pan"], ["Cloth"]],
    "Clean X": [["Plate"], ["Bowl"], ["Mug"], ["Pot"]],
    "Put All X On Y": [
        ["Fork", "on", "CounterTop"],
        ["Spoon", "on", "DiningTable"],
        ["Mug", "on", "CounterTop"],
        ["Fork", "in", "Sink"],
        ["Book", "on", "SideTable"],
        ["Pen", "on", "Desk"],
        ["Watch", "on", "SideTable"],
        ["RemoteControl", "on", "CoffeeTable"],
        ["Cup", "in", "Sink"],
        ["TissueBox", "on", "Shelf"],
    ],
    "Put All X In One Y": [
        ["Fork", "in", "Sink"],
        ["TissueBox", "on", "SideTable"],
        ["Spoon", "on", "Plate"],
        ["Pen", "on", "Desk"],
        ["Book", "on", "Shelf"],
        ["Mug", "on", "CounterTop"],
    ],
    "N Slices Of X In Y": [
        ["1", "Tomato", "Plate"],
        ["2", "Tomato", "Bowl"],
        ["2", "Lettuce", "Plate"],
        ["3", "Tomato", "Plate"],
        ["1", "Apple", "Bowl"],
        ["2", "Potato", "Plate"],
    ],
    "N Cooked Slices Of X In Y": [
        ["1", "Potato", "Plate"],
        ["2", "Potato", "Plate"],
        ["2", "Potato", "Bowl"],
    ],
    "Prepare Sandwich": [["Lettuce"], ["Tomato"]],
}

# Room types each task can run in; Put-All tasks run anywhere the target
# receptacle exists, which the fixture check enforces per plan.
TASK_ROOMS = {
    "Water Plant": ("kitchen", "livingroom"),
    "Make Coffee": ("kitchen",),
    "Clean All X": ("kitchen", "bathroom"),
    "Clean X": ("kitchen", "bathroom"),
    "Boil Potato": ("kitchen",),
    "Plate Of Toast": ("kitchen",),
    "Toast": ("kitchen",),
    "N Slices Of X In Y": ("kitchen",),
    "N Cooked Slices Of X In Y": ("kitchen",),
    "Prepare Sandwich": ("kitchen",),
    "Prepare Salad": ("kitchen",),
    "Prepare Breakfast": ("kitchen",),
    "Put All X On Y": ("kitchen", "livingroom", "bedroom", "bathroom"),
    "Put All X In One Y": ("kitchen", "livingroom", "bedroom", "bathroom"),
}


def pick_variant(task_name: str, plans: dict, seed: int, lib: TaskLibrary):
    """Deterministically choose parameters and a compatible floorplan."""
    rng = random.Random(f"variant|{task_name}|{seed}")
    rooms = TASK_ROOMS.get(task_name, ("kitchen",))
    compatible = sorted(
        pid for pid, plan in plans.items() if plan.room_type in rooms
    )
    if not compatible:
        raise ScenarioError(f"no floorplan compatible with {task_name}")
    choices = PARAM_CHOICES.get(task_name)
    for _ in range(50):
        params = rng.choice(choices) if choices else []
        plan = plans[rng.choice(compatible)]
        ground = lib.ground(task_name, params)
        try:
            needs: list[_Need] = []
            _flatten_needs(ground, lib, Determiner.A, needs)
            fixture_types = {f.object_type for f in plan.fixtures}
            if all(
                alternatives & fixture_types
                for alternatives, _why in _required_fixtures(needs)
            ):
                return ground, plan
        except ScenarioError:
            continue
    raise ScenarioError(f"no compatible (params, floorplan) pair for {task_name}")
