"""Deterministic grid-world household simulator.

step() validates an action fully before committing any change, so failed
actions leave the world untouched. After every successful state change the
transition-rule set runs to fixpoint (appliances cook, faucets wash, and so
on). One driver owns and mutates a live WorldState; snapshot() it first if
you need an immutable copy.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from . import catalog
from .actions import (
    COMMANDER,
    FOLLOWER,
    CameraMotion,
    Interact,
    Motion,
    ObjectSelector,
    ProgressCheck,
    SearchObject,
    Stop,
    Utterance,
)
from .catalog import SLICE_PRODUCT
from .errors import ChoreBenchError
from .floorplan import Floorplan
from .hierarchy import ClassHierarchy
from .world import (
    HEADING_VEC,
    HEADINGS,
    AgentPose,
    ObjectInstance,
    PropertyDelta,
    WorldState,
    make_object,
    mint_object_id,
)

VIEW_DISTANCE = 3
SELECT_TOLERANCE = 0.05
DEFAULT_SLICE_COUNT = 4

# machine-readable failure codes surfaced in ActionResult.error
E_COLLISION = "collision"
E_PITCH_LIMIT = "pitch_limit"
E_NOT_VISIBLE = "target_not_visible"
E_NO_TARGET = "no_target"
E_HAND_OCCUPIED = "hand_occupied"
E_HAND_EMPTY = "hand_empty"
E_FULL = "receptacle_full"
E_NOT_RECEPTACLE = "not_receptacle"
E_CLOSED = "receptacle_closed"
E_CLOSED_PARENT = "closed_parent"
E_NOT_OPENABLE = "not_openable"
E_NOT_TOGGLEABLE = "not_toggleable"
E_NOT_SLICEABLE = "not_sliceable"
E_NOT_PICKUPABLE = "not_pickupable"
E_NOT_FILLABLE = "not_fillable"
E_NO_KNIFE = "no_knife_held"
E_EMPTY_CONTAINER = "container_empty"
E_ALREADY = "already_in_state"
E_TOGGLED_ON = "toggled_on"
E_ROLE = "role_violation"
E_INVALID = "invalid_action"


@dataclass(frozen=True)
class ActionResult:
    success: bool
    error: Optional[str] = None
    message: str = ""

    def to_dict(self) -> dict:
        return {"success": self.success, "error": self.error, "message": self.message}


def _ok() -> ActionResult:
    return ActionResult(True)


def _fail(code: str, message: str) -> ActionResult:
    return ActionResult(False, code, message)


@dataclass
class SimConfig:
    slice_count: int = DEFAULT_SLICE_COUNT
    select_tolerance: float = SELECT_TOLERANCE


# ------------------------------------------------------------- visibility


def _closed_ancestor(world: WorldState, object_id: str) -> Optional[str]:
    for anc in world.ancestors(object_id):
        if anc.get("openable") and not anc.get("isOpen"):
            return anc.object_id
    return None


def _heading_axes(heading: str):
    fx, fy = HEADING_VEC[heading]
    # right-hand lateral axis (screen x grows rightward)
    rx, ry = -fy, fx
    return (fx, fy), (rx, ry)


def _relative(pose: AgentPose, cell) -> tuple[int, int]:
    (fx, fy), (rx, ry) = _heading_axes(pose.heading)
    dx = cell[0] - pose.cell[0]
    dy = cell[1] - pose.cell[1]
    forward = dx * fx + dy * fy
    lateral = dx * rx + dy * ry
    return forward, lateral


def _line_cells(a, b):
    """Cells strictly between a and b on a straight rasterized segment."""
    ax, ay = a
    bx, by = b
    steps = max(abs(bx - ax), abs(by - ay))
    out = []
    for i in range(1, steps):
        t = i / steps
        out.append((round(ax + (bx - ax) * t), round(ay + (by - ay) * t)))
    return [c for c in out if c != a and c != b]


def _los_clear(plan: Floorplan, world: WorldState, a, b) -> bool:
    fixture_cells = plan.fixture_cells()
    for cell in _line_cells(a, b):
        if cell in plan.blocked or cell in fixture_cells:
            return False
    return True


def _sibling_index(world: WorldState, obj: ObjectInstance) -> int:
    """Deterministic index among objects sharing the same effective cell."""
    cell = world.effective_cell(obj.object_id)
    peers = sorted(
        o.object_id
        for o in world.objects.values()
        if o.object_id != world.held_object
        and world.effective_cell(o.object_id) == cell
    )
    return peers.index(obj.object_id)


def project(world: WorldState, pose: AgentPose, object_id: str) -> Optional[tuple]:
    """Normalized (x, y) screen position of an object from a pose.

    Pure geometry over the grid: defined for any object with an effective
    cell in front of the pose, whether or not it is currently visible.
    """
    cell = world.effective_cell(object_id)
    if cell is None:
        return None
    forward, lateral = _relative(pose, cell)
    if forward < 1 or forward > VIEW_DISTANCE or abs(lateral) > forward:
        return None
    obj = world.objects[object_id]
    idx = _sibling_index(world, obj)
    x = 0.5 + 0.5 * (lateral / (forward + 0.15)) + 0.02 * idx
    height = obj.get("visibleHeight", 1)
    y = 0.85 - 0.22 * height - 0.07 * (forward - 1) + 0.15 * (pose.pitch / 30.0)
    y += 0.012 * (idx // 8)
    return (min(max(x, 0.01), 0.99), min(max(y, 0.01), 0.99))


def visible_ids(plan: Floorplan, world: WorldState, actor: str) -> list[str]:
    """Objects the actor can currently see, ordered by id.

    The Follower sees a 90-degree frustum out to VIEW_DISTANCE cells with
    line-of-sight blocking. The Commander has oracle knowledge (map plus
    search cameras) and sees every object.
    """
    out = []
    pose = world.follower if actor == FOLLOWER else world.commander
    if actor == COMMANDER:
        return sorted(world.objects)
    for object_id in sorted(world.objects):
        if world.held_object is not None and world.held_root(object_id):
            continue
        if _closed_ancestor(world, object_id) is not None:
            continue
        cell = world.effective_cell(object_id)
        if cell is None:
            continue
        forward, lateral = _relative(pose, cell)
        if forward < 1 or forward > VIEW_DISTANCE or abs(lateral) > forward:
            continue
        if not _los_clear(plan, world, pose.cell, cell):
            continue
        out.append(object_id)
    return out


VISIBLE_PROPERTIES = (
    "isOpen",
    "isToggled",
    "isDirty",
    "isCooked",
    "isBoiled",
    "isFilledWithLiquid",
    "isFilledWithCoffee",
    "receptacle",
    "openable",
    "toggleable",
    "pickupable",
    "sliceable",
    "fillable",
    "visibleHeight",
)


@dataclass
class VisibleObject:
    object_id: str
    object_type: str
    coord: Optional[tuple]
    distance: Optional[int]
    parent_id: Optional[str]
    properties: dict

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "object_type": self.object_type,
            "coord": list(self.coord) if self.coord else None,
            "distance": self.distance,
            "parent_id": self.parent_id,
            "properties": self.properties,
        }


@dataclass
class Observation:
    actor: str
    pose: AgentPose
    held_object: Optional[str]
    held_object_type: Optional[str]
    visible: list
    last_result: Optional[ActionResult] = None

    def to_dict(self) -> dict:
        return {
            "actor": self.actor,
            "pose": self.pose.to_dict(),
            "held_object": self.held_object,
            "held_object_type": self.held_object_type,
            "visible": [v.to_dict() for v in self.visible],
            "last_result": self.last_result.to_dict() if self.last_result else None,
        }


def observe(plan: Floorplan, world: WorldState, actor: str, last_result=None) -> Observation:
    pose = world.follower if actor == FOLLOWER else world.commander
    visible = []
    for object_id in visible_ids(plan, world, actor):
        obj = world.objects[object_id]
        cell = world.effective_cell(object_id)
        forward, _ = _relative(pose, cell) if cell else (None, None)
        visible.append(
            VisibleObject(
                object_id=object_id,
                object_type=obj.object_type,
                coord=project(world, pose, object_id),
                distance=forward,
                parent_id=obj.parent,
                properties={
                    k: obj.properties[k] for k in VISIBLE_PROPERTIES if k in obj.properties
                },
            )
        )
    held = world.held_object
    return Observation(
        actor=actor,
        pose=pose,
        held_object=held,
        held_object_type=world.objects[held].object_type if held else None,
        visible=visible,
        last_result=last_result,
    )


def resolve_selector(
    plan: Floorplan,
    world: WorldState,
    pose: AgentPose,
    sel: ObjectSelector,
    actor: str = FOLLOWER,
    tolerance: float = SELECT_TOLERANCE,
) -> tuple[Optional[str], Optional[ActionResult]]:
    """Resolve a selector to a visible object id, or a failure result."""
    ids = visible_ids(plan, world, actor)
    if sel.object_id is not None:
        if sel.object_id not in world.objects:
            return None, _fail(E_NO_TARGET, f"no such object: {sel.object_id}")
        if _closed_ancestor(world, sel.object_id) is not None:
            return None, _fail(
                E_CLOSED_PARENT, f"{sel.object_id} is inside a closed receptacle"
            )
        if sel.object_id not in ids:
            return None, _fail(E_NOT_VISIBLE, f"{sel.object_id} is not visible")
        return sel.object_id, None
    cx, cy = sel.coord
    best = None
    for object_id in ids:
        proj = project(world, pose, object_id)
        if proj is None:
            continue
        dx, dy = abs(proj[0] - cx), abs(proj[1] - cy)
        if dx > tolerance or dy > tolerance:
            continue
        dist2 = dx * dx + dy * dy
        cell = world.effective_cell(object_id)
        forward, _ = _relative(pose, cell)
        key = (dist2, forward, object_id)
        if best is None or key < best[0]:
            best = (key, object_id)
    if best is None:
        return None, _fail(E_NOT_VISIBLE, f"nothing selectable at ({cx:.2f}, {cy:.2f})")
    return best[1], None


# ------------------------------------------------------------- search


@dataclass
class SearchHit:
    object_id: str
    object_type: str
    parent_id: Optional[str]
    cell: Optional[tuple]
    location: str

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "object_type": self.object_type,
            "parent_id": self.parent_id,
            "cell": list(self.cell) if self.cell else None,
            "location": self.location,
        }


def search_object(world: WorldState, query: str) -> list[SearchHit]:
    """The Commander's oracle: substring type search or direct id lookup."""
    hits = []
    if query in world.objects:
        matches = [world.objects[query]]
    else:
        needle = query.lower()
        matches = [
            o
            for o in sorted(world.objects.values(), key=lambda o: o.object_id)
            if needle in o.object_type.lower()
        ]
    for obj in matches:
        if world.held_root(obj.object_id):
            location = "follower hand"
            cell = None
        elif obj.parent is not None:
            location = f"in {obj.parent}"
            cell = world.effective_cell(obj.object_id)
        else:
            cell = obj.cell
            location = f"at cell {cell}"
        hits.append(SearchHit(obj.object_id, obj.object_type, obj.parent, cell, location))
    return hits


# ------------------------------------------------------- transition rules


@dataclass(frozen=True)
class TransitionRule:
    name: str
    fn: object  # fn(world) -> list[(object_id, prop, value)]


def _rule_toaster(world: WorldState):
    writes = []
    for obj in world.objects.values():
        if obj.object_type == "Toaster" and obj.get("isToggled"):
            for child in world.contents(obj.object_id):
                if child.object_type == "BreadSliced" and not child.get("isCooked"):
                    writes.append((child.object_id, "isCooked", 1))
    return writes


def _rule_stove(world: WorldState):
    writes = []
    for burner in world.objects.values():
        if burner.object_type != "StoveBurner" or not burner.get("isToggled"):
            continue
        for pot in world.contents(burner.object_id):
            if pot.object_type != "Pot" or not pot.get("isFilledWithLiquid"):
                continue
            for item in world.contents(pot.object_id):
                if item.object_type in ("Potato", "PotatoSliced") and not item.get("isBoiled"):
                    writes.append((item.object_id, "isBoiled", 1))
    return writes


def _rule_coffee(world: WorldState):
    writes = []
    for machine in world.objects.values():
        if machine.object_type != "CoffeeMachine" or not machine.get("isToggled"):
            continue
        for mug in world.contents(machine.object_id):
            if (
                mug.object_type == "Mug"
                and not mug.get("isDirty")
                and not mug.get("isFilledWithCoffee")
            ):
                writes.append((mug.object_id, "isFilledWithCoffee", 1))
    return writes


def _rule_faucet(world: WorldState):
    writes = []
    basins = {}
    for obj in world.objects.values():
        if obj.object_type in ("Sink", "Bathtub") and obj.cell is not None:
            basins.setdefault(obj.cell, []).append(obj)
    for faucet in world.objects.values():
        if faucet.object_type != "Faucet" or not faucet.get("isToggled"):
            continue
        for basin in basins.get(faucet.cell, []):
            for item in world.transitive_contents(basin.object_id):
                if item.get("isDirty"):
                    writes.append((item.object_id, "isDirty", 0))
                if item.get("fillable") and not item.get("isFilledWithLiquid"):
                    writes.append((item.object_id, "isFilledWithLiquid", 1))
    return writes


def _rule_microwave(world: WorldState):
    writes = []
    for micro in world.objects.values():
        if (
            micro.object_type != "Microwave"
            or not micro.get("isToggled")
            or micro.get("isOpen")
        ):
            continue
        for item in world.transitive_contents(micro.object_id):
            if catalog.spec_for(item.object_type).cookable and not item.get("isCooked"):
                writes.append((item.object_id, "isCooked", 1))
    return writes


SHIPPED_RULES = (
    TransitionRule("toaster_cooks_bread", _rule_toaster),
    TransitionRule("stove_boils_potato", _rule_stove),
    TransitionRule("coffee_machine_fills_mug", _rule_coffee),
    TransitionRule("faucet_washes_and_fills", _rule_faucet),
    TransitionRule("microwave_cooks_contents", _rule_microwave),
)

_MAX_RULE_PASSES = 50


def apply_transition_rules(world: WorldState, rules=SHIPPED_RULES):
    """Run rules to fixpoint; returns the property deltas they caused."""
    deltas = []
    for _ in range(_MAX_RULE_PASSES):
        writes = []
        for rule in rules:
            writes.extend(rule.fn(world))
        changed = False
        for object_id, prop, value in writes:
            obj = world.objects.get(object_id)
            if obj is None or obj.properties.get(prop) == value:
                continue
            before = obj.get(prop)
            obj.properties[prop] = value
            deltas.append(PropertyDelta(object_id, prop, before, value))
            changed = True
        if not changed:
            return world, deltas
    raise ChoreBenchError("transition rules did not reach a fixpoint")


def check_rules_confluent(rules, probe_worlds) -> None:
    """Reject a rule set whose quiescent result depends on application order."""
    import itertools

    for world in probe_worlds:
        baseline = None
        for perm in itertools.permutations(rules):
            trial = world.snapshot()
            apply_transition_rules(trial, rules=perm)
            h = trial.state_hash()
            if baseline is None:
                baseline = h
            elif h != baseline:
                raise ChoreBenchError(
                    "non-confluent rule set: order changes the fixpoint"
                )


# ------------------------------------------------------------------ step


def _move(plan, world, pose: AgentPose, dx_forward: int, dx_lateral: int):
    (fx, fy), (rx, ry) = _heading_axes(pose.heading)
    target = (
        pose.cell[0] + fx * dx_forward + rx * dx_lateral,
        pose.cell[1] + fy * dx_forward + ry * dx_lateral,
    )
    if not plan.passable(target):
        return None
    return target


def _step_motion(plan, world, pose: AgentPose, name: str, collide: bool) -> ActionResult:
    if name in ("TurnLeft", "TurnRight"):
        i = HEADINGS.index(pose.heading)
        pose.heading = HEADINGS[(i - 1) % 4] if name == "TurnLeft" else HEADINGS[(i + 1) % 4]
        return _ok()
    if name in ("LookUp", "LookDown"):
        delta = 30 if name == "LookUp" else -30
        new_pitch = pose.pitch + delta
        if new_pitch < -30 or new_pitch > 30:
            return _fail(E_PITCH_LIMIT, "camera pitch limit reached")
        pose.pitch = new_pitch
        return _ok()
    moves = {
        "Forward": (1, 0),
        "Backward": (-1, 0),
        "StrafeLeft": (0, -1),
        "StrafeRight": (0, 1),
    }
    df, dl = moves[name]
    if collide:
        target = _move(plan, world, pose, df, dl)
        if target is None:
            return _fail(E_COLLISION, f"{name} blocked")
    else:
        (fx, fy), (rx, ry) = _heading_axes(pose.heading)
        target = (pose.cell[0] + fx * df + rx * dl, pose.cell[1] + fy * df + ry * dl)
        if not plan.in_bounds(target):
            return _fail(E_COLLISION, "camera would leave the floorplan")
    pose.cell = target
    return _ok()


def _openable_closed(obj) -> bool:
    return bool(obj.get("openable")) and not obj.get("isOpen")


def _do_pickup(world, target):
    obj = world.objects[target]
    if world.held_object is not None:
        return _fail(E_HAND_OCCUPIED, f"already holding {world.held_object}")
    if not obj.get("pickupable"):
        return _fail(E_NOT_PICKUPABLE, f"{obj.object_type} cannot be picked up")
    obj.properties.pop("parentReceptacles", None)
    obj.cell = None
    world.held_object = target
    return _ok()


def _do_place(world, target, config: SimConfig):
    held_id = world.held_object
    if held_id is None:
        return _fail(E_HAND_EMPTY, "nothing in hand to place")
    recep = world.objects[target]
    if not recep.get("receptacle"):
        return _fail(E_NOT_RECEPTACLE, f"{recep.object_type} is not a receptacle")
    if target == held_id or world.held_root(target):
        return _fail(E_INVALID, "cannot place an object into itself")
    if _openable_closed(recep):
        return _fail(E_CLOSED, f"{recep.object_type} is closed")
    if len(world.contents(target)) >= catalog.capacity(recep.object_type):
        return _fail(
            E_FULL,
            f"the {recep.object_type} is too full; remove something first",
        )
    held = world.objects[held_id]
    held.properties["parentReceptacles"] = target
    held.properties["visibleHeight"] = recep.get("visibleHeight", 1)
    held.cell = None
    world.held_object = None
    return _ok()


def _do_open(world, target, want_open: bool):
    obj = world.objects[target]
    if not obj.get("openable"):
        return _fail(E_NOT_OPENABLE, f"{obj.object_type} cannot be opened")
    if obj.get("toggleable") and obj.get("isToggled") and want_open:
        return _fail(E_TOGGLED_ON, f"{obj.object_type} is running; toggle it off first")
    if bool(obj.get("isOpen")) == want_open:
        state = "open" if want_open else "closed"
        return _fail(E_ALREADY, f"{obj.object_type} is already {state}")
    obj.properties["isOpen"] = 1 if want_open else 0
    return _ok()


def _do_toggle(world, target, want_on: bool):
    obj = world.objects[target]
    if not obj.get("toggleable"):
        return _fail(E_NOT_TOGGLEABLE, f"{obj.object_type} cannot be toggled")
    if obj.get("openable") and obj.get("isOpen") and want_on:
        return _fail(E_INVALID, f"close the {obj.object_type} before toggling it on")
    if bool(obj.get("isToggled")) == want_on:
        state = "on" if want_on else "off"
        return _fail(E_ALREADY, f"{obj.object_type} is already {state}")
    obj.properties["isToggled"] = 1 if want_on else 0
    return _ok()


def _do_slice(world, target, hierarchy: ClassHierarchy, config: SimConfig):
    obj = world.objects[target]
    held_id = world.held_object
    if held_id is None or not hierarchy.is_member(
        world.objects[held_id].object_type, "Knife"
    ):
        return _fail(E_NO_KNIFE, "slicing requires holding a knife")
    if not obj.get("sliceable"):
        return _fail(E_NOT_SLICEABLE, f"{obj.object_type} cannot be sliced")
    product = SLICE_PRODUCT[obj.object_type]
    parent = obj.parent
    cell = obj.cell
    base_cell = world.effective_cell(target) or (0, 0)
    height = obj.get("visibleHeight", 1)
    inherit = {}
    for prop in ("isCooked", "isBoiled"):
        if prop in obj.properties:
            inherit[prop] = obj.properties[prop]
    del world.objects[target]
    for k in range(config.slice_count):
        slice_obj = make_object(
            product,
            cell=None,
            object_id=mint_object_id(
                product, float(base_cell[0]), float(height), float(base_cell[1]) + 0.01 * (k + 1)
            ),
            **inherit,
        )
        slice_obj.properties["visibleHeight"] = height
        if parent is not None:
            slice_obj.properties["parentReceptacles"] = parent
            slice_obj.cell = None
        else:
            slice_obj.cell = cell
        world.add_object(slice_obj)
    return _ok()


def _do_pour(world, target):
    held_id = world.held_object
    if held_id is None:
        return _fail(E_HAND_EMPTY, "nothing in hand to pour from")
    held = world.objects[held_id]
    if not held.get("fillable") or not held.get("isFilledWithLiquid"):
        return _fail(E_EMPTY_CONTAINER, f"the held {held.object_type} holds no water")
    obj = world.objects[target]
    if obj.object_type in ("Sink", "Bathtub"):
        held.properties["isFilledWithLiquid"] = 0
        return _ok()
    if not obj.get("fillable"):
        return _fail(E_NOT_FILLABLE, f"{obj.object_type} cannot be filled")
    if obj.get("isFilledWithLiquid"):
        return _fail(E_ALREADY, f"{obj.object_type} is already filled")
    obj.properties["isFilledWithLiquid"] = 1
    held.properties["isFilledWithLiquid"] = 0
    return _ok()


def step(
    plan: Floorplan,
    world: WorldState,
    action,
    actor: str,
    hierarchy: ClassHierarchy = None,
    config: SimConfig = None,
) -> tuple[WorldState, ActionResult]:
    """Apply one action. Mutates `world` on success; no-ops on failure."""
    config = config or SimConfig()
    if isinstance(action, (Utterance, Stop)):
        return world, _ok()
    if isinstance(action, (ProgressCheck, SearchObject)):
        if actor != COMMANDER:
            return world, _fail(E_ROLE, f"only the Commander may {type(action).__name__}")
        return world, _ok()
    if isinstance(action, CameraMotion):
        if actor != COMMANDER:
            return world, _fail(E_ROLE, "only the Commander moves the free camera")
        result = _step_motion(plan, world, world.commander, action.name, collide=False)
        if result.success:
            world.tick += 1
        return world, result
    if isinstance(action, Motion):
        if actor != FOLLOWER:
            return world, _fail(E_ROLE, "only the Follower moves in the world")
        result = _step_motion(plan, world, world.follower, action.name, collide=True)
        if result.success:
            world.tick += 1
        return world, result
    if isinstance(action, Interact):
        if actor != FOLLOWER:
            return world, _fail(E_ROLE, "only the Follower interacts with objects")
        target, failure = resolve_selector(
            plan, world, world.follower, action.target, tolerance=config.select_tolerance
        )
        if failure is not None:
            return world, failure
        if hierarchy is None:
            from .library import default_hierarchy

            hierarchy = default_hierarchy()
        handler = {
            "Pickup": lambda: _do_pickup(world, target),
            "Place": lambda: _do_place(world, target, config),
            "Open": lambda: _do_open(world, target, True),
            "Close": lambda: _do_open(world, target, False),
            "ToggleOn": lambda: _do_toggle(world, target, True),
            "ToggleOff": lambda: _do_toggle(world, target, False),
            "Slice": lambda: _do_slice(world, target, hierarchy, config),
            "Pour": lambda: _do_pour(world, target),
        }[action.verb]
        result = handler()
        if result.success:
            world.tick += 1
            apply_transition_rules(world)
        return world, result
    return world, _fail(E_INVALID, f"unknown action: {action!r}")
