"""Rule-based Commander: problem-key-dispatched subgoal policies.

On every help request the Commander runs a Progress Check, picks the first
unsolved problem key in report order, and drives a hand-written policy for
that key's property. Policies re-derive their next step from the live world
each turn (labels follow the navigation_1 / interaction_1_1 / step_completed
scheme), and instruction batches are validated by simulating them on a
snapshot so emitted coordinates match the Follower's pose at execution time.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from ..actions import FOLLOWER, interaction_token, parse_token
from ..checker import ProgressReport
from ..errors import ChoreBenchError, PlanningError
from ..floorplan import Floorplan
from ..library import TaskLibrary
from ..sim import E_FULL, SimConfig, project, resolve_selector, step
from ..tdl import GroundTask
from ..world import WorldState
from .planner import plan_path

DONE = "done"
FAIL = "fail"

SOLVABLE_KEYS = (
    "parentReceptacles",
    "isDirty",
    "isFilledWithLiquid",
    "isFilledWithCoffee",
    "isBoiled",
    "isCooked",
    "objectType",  # slicing, desired value "<Type>Sliced"
)

_STASH_ORDER = (
    "CounterTop",
    "DiningTable",
    "Desk",
    "SideTable",
    "CoffeeTable",
    "Shelf",
    "Bathtub",
)
_CONTAINER_ORDER = ("Cup", "Mug", "Bowl", "Pot")


class BatchError(ChoreBenchError):
    def __init__(self, code, message):
        self.code = code
        super().__init__(message)


@dataclass
class AgentConfig:
    partial_policy_coverage: bool = False   # drop isBoiled and bread-toasting policies
    max_recoveries: int = 4


class BatchBuilder:
    """Accumulates one instruction batch, simulating it on a world snapshot
    so every interaction coordinate is computed for the pose and world the
    Follower will actually have when executing that token."""

    def __init__(self, plan: Floorplan, lib: TaskLibrary, world: WorldState):
        self.plan = plan
        self.lib = lib
        self.world = world.snapshot()
        self.tokens: list[str] = []
        self.config = SimConfig()

    def navigate(self, target_id: str):
        tokens = plan_path(self.plan, self.world, self.world.follower, target_id)
        for token in tokens:
            _, result = step(
                self.plan, self.world, parse_token(token), FOLLOWER,
                hierarchy=self.lib.hierarchy, config=self.config,
            )
            if not result.success:
                raise BatchError(result.error, f"navigation step failed: {result.message}")
        self.tokens.extend(tokens)
        return bool(tokens)

    def interact(self, verb: str, target_id: str):
        obj = self.world.objects[target_id]
        coord = project(self.world, self.world.follower, target_id)
        if coord is None:
            raise BatchError("not_projectable", f"{target_id} not in view after batch prefix")
        token = interaction_token(verb, obj.object_type, coord[0], coord[1])
        action = parse_token(token)
        resolved, failure = resolve_selector(
            self.plan, self.world, self.world.follower, action.target
        )
        if failure is not None:
            raise BatchError(failure.error, failure.message)
        if resolved != target_id:
            raise BatchError("selector_ambiguity", f"coordinate resolves to {resolved}")
        _, result = step(
            self.plan, self.world, action, FOLLOWER,
            hierarchy=self.lib.hierarchy, config=self.config,
        )
        if not result.success:
            raise BatchError(result.error, result.message)
        self.tokens.append(token)


@dataclass
class PolicyState:
    object_id: str
    property_name: str
    desired: object
    step: str = "navigation_1"


class KeyPolicy:
    """Base class: shared fetch/stash/clear building blocks."""

    def __init__(self, commander: "RuleCommander", state: PolicyState):
        self.cmd = commander
        self.state = state
        self.clearing: Optional[str] = None
        self.recoveries = 0

    # -- world lookups ----------------------------------------------------

    def obj(self, world) -> Optional[object]:
        return world.objects.get(self.state.object_id)

    def _first_of_type(self, world, *types) -> Optional[str]:
        for wanted in types:
            ids = sorted(
                o.object_id for o in world.objects.values() if o.object_type == wanted
            )
            if ids:
                return ids[0]
        return None

    def _stash_spot(self, world) -> Optional[str]:
        from .. import catalog

        for wanted in _STASH_ORDER:
            for oid in sorted(
                o.object_id for o in world.objects.values() if o.object_type == wanted
            ):
                if len(world.contents(oid)) < catalog.capacity(wanted):
                    return oid
        return None

    def _closed_ancestor(self, world, object_id) -> Optional[object]:
        for anc in world.ancestors(object_id):
            if anc.get("openable") and not anc.get("isOpen"):
                return anc
        return None

    # -- batch fragments ---------------------------------------------------

    def _batch(self, world) -> BatchBuilder:
        return BatchBuilder(self.cmd.plan, self.cmd.lib, world)

    def stash_held(self, world) -> list[str]:
        spot = self._stash_spot(world)
        if spot is None:
            raise BatchError("no_stash", "no free receptacle to park the held object")
        b = self._batch(world)
        b.navigate(spot)
        b.interact("Place", spot)
        self.state.step = "stash_1"
        return b.tokens

    def fetch(self, world, object_id: str) -> Optional[list[str]]:
        """Batch moving toward holding object_id; None when already held."""
        if world.held_object == object_id:
            return None
        if world.held_object is not None:
            return self.stash_held(world)
        b = self._batch(world)
        if b.navigate(object_id):
            self.state.step = "navigation_1"
            return b.tokens
        parent = self._closed_ancestor(world, object_id)
        if parent is not None:
            if parent.get("toggleable") and parent.get("isToggled"):
                b.interact("ToggleOff", parent.object_id)
            b.interact("Open", parent.object_id)
            self.state.step = "interaction_1_1"
            return b.tokens
        b.interact("Pickup", object_id)
        inside = world.objects[object_id].parent
        if inside is not None:
            container = world.objects[inside]
            if container.get("openable") and container.get("isOpen"):
                b.interact("Close", inside)
                self.state.step = "interaction_1_2"
                return b.tokens
        self.state.step = "interaction_1_1"
        return b.tokens

    def put_held(self, world, target_id: str) -> list[str]:
        """Batch placing the held object into target_id, clearing if full."""
        b = self._batch(world)
        if b.navigate(target_id):
            self.state.step = "navigation_2"
            return b.tokens
        ancestor = self._closed_ancestor(world, target_id)
        if ancestor is not None:
            if ancestor.get("toggleable") and ancestor.get("isToggled"):
                b.interact("ToggleOff", ancestor.object_id)
            b.interact("Open", ancestor.object_id)
            self.state.step = "interaction_2_1"
            return b.tokens
        target = world.objects[target_id]
        if target.get("openable") and not target.get("isOpen"):
            if target.get("toggleable") and target.get("isToggled"):
                b.interact("ToggleOff", target_id)
            b.interact("Open", target_id)
            self.state.step = "interaction_2_1"
            return b.tokens
        try:
            b.interact("Place", target_id)
        except BatchError as err:
            if err.code == E_FULL:
                blockers = world.contents(target_id)
                if blockers and self.recoveries < self.cmd.config.max_recoveries:
                    self.recoveries += 1
                    self.clearing = blockers[0].object_id
                    return self.stash_held(world)
            raise
        self.state.step = "interaction_2_2"
        return b.tokens

    def clear_target(self, world) -> Optional[list[str]]:
        """Batch relocating the blocker chosen by a failed place; None if clear."""
        blocker = self.clearing
        if blocker is None:
            return None
        if blocker not in world.objects:
            self.clearing = None
            return None
        if world.held_object == blocker:
            tokens = self.stash_held(world)
            self.clearing = None
            return tokens
        if world.held_object is not None:
            return self.stash_held(world)
        return self.fetch(world, blocker)

    def wash_flow(self, world, object_id: str) -> Optional[list[str]]:
        """Batches that get object_id clean via the sink; None when clean."""
        obj = world.objects[object_id]
        if not obj.get("isDirty"):
            return None
        basin = self._first_of_type(world, "Sink", "Bathtub")
        if basin is None:
            raise BatchError("no_sink", "no basin available for washing")
        if obj.parent != basin:
            batch = self.fetch(world, object_id)
            if batch:
                return batch
            return self.put_held(world, basin)
        faucet = self._faucet_for(world, basin)
        if faucet is None:
            raise BatchError("no_faucet", "basin has no faucet")
        b = self._batch(world)
        b.navigate(faucet)
        b.interact("ToggleOn", faucet)
        b.interact("ToggleOff", faucet)
        self.state.step = "interaction_wash"
        return b.tokens

    def fill_flow(self, world, object_id: str) -> Optional[list[str]]:
        """Batches that get a fillable object filled with water; None when full."""
        obj = world.objects[object_id]
        if obj.get("isFilledWithLiquid"):
            return None
        basin = self._first_of_type(world, "Sink", "Bathtub")
        if basin is None:
            raise BatchError("no_sink", "no basin available for filling")
        if obj.parent != basin:
            batch = self.fetch(world, object_id)
            if batch:
                return batch
            return self.put_held(world, basin)
        faucet = self._faucet_for(world, basin)
        b = self._batch(world)
        b.navigate(faucet)
        b.interact("ToggleOn", faucet)
        b.interact("ToggleOff", faucet)
        self.state.step = "interaction_fill"
        return b.tokens

    def _faucet_for(self, world, basin_id) -> Optional[str]:
        basin = world.objects[basin_id]
        for obj in sorted(world.objects.values(), key=lambda o: o.object_id):
            if obj.object_type == "Faucet" and obj.cell == basin.cell:
                return obj.object_id
        return None

    # -- protocol ----------------------------------------------------------

    def solved(self, world) -> bool:
        raise NotImplementedError

    def next_batch(self, world) -> Optional[list[str]]:
        raise NotImplementedError

    def step_once(self, world):
        """Returns a token batch, DONE, or FAIL."""
        if self.solved(world):
            self.state.step = "step_completed"
            return DONE
        try:
            pending = self.clear_target(world)
            if pending:
                return pending
            batch = self.next_batch(world)
        except (BatchError, PlanningError):
            return FAIL
        if batch is None or not batch:
            return DONE if self.solved(world) else FAIL
        return batch


class ParentReceptaclePolicy(KeyPolicy):
    def solved(self, world) -> bool:
        obj = self.obj(world)
        target = self.state.desired
        return obj is None or target not in world.objects or obj.parent == target

    def next_batch(self, world):
        batch = self.fetch(world, self.state.object_id)
        if batch:
            return batch
        return self.put_held(world, self.state.desired)


class IsDirtyPolicy(KeyPolicy):
    def solved(self, world) -> bool:
        obj = self.obj(world)
        if obj is None:
            return True
        basin = self._first_of_type(world, "Sink", "Bathtub")
        # washed and retrieved out of the basin
        return not obj.get("isDirty") and obj.parent != basin

    def next_batch(self, world):
        obj = self.obj(world)
        if obj.get("isDirty"):
            return self.wash_flow(world, self.state.object_id)
        # retrieve: pick it back up and park it
        batch = self.fetch(world, self.state.object_id)
        if batch:
            return batch
        return self.stash_held(world)


class IsFilledWithLiquidPolicy(KeyPolicy):
    def solved(self, world) -> bool:
        obj = self.obj(world)
        return obj is None or bool(obj.get("isFilledWithLiquid"))

    def _pick_container(self, world) -> Optional[str]:
        held = world.held_object
        if held is not None and world.objects[held].get("fillable"):
            return held
        return self._first_of_type(world, *_CONTAINER_ORDER)

    def next_batch(self, world):
        obj = self.obj(world)
        if obj.get("pickupable"):
            return self.fill_flow(world, self.state.object_id)
        # watering something rooted in place: carry water to it
        container = self._pick_container(world)
        if container is None:
            raise BatchError("no_container", "nothing fillable to carry water in")
        cobj = world.objects[container]
        if not cobj.get("isFilledWithLiquid"):
            return self.fill_flow(world, container)
        batch = self.fetch(world, container)
        if batch:
            return batch
        b = self._batch(world)
        b.navigate(self.state.object_id)
        b.interact("Pour", self.state.object_id)
        self.state.step = "interaction_pour"
        return b.tokens


class IsFilledWithCoffeePolicy(KeyPolicy):
    def solved(self, world) -> bool:
        obj = self.obj(world)
        return obj is None or bool(obj.get("isFilledWithCoffee"))

    def next_batch(self, world):
        mug = self.obj(world)
        washing = self.wash_flow(world, self.state.object_id)
        if washing:
            return washing
        machine = self._first_of_type(world, "CoffeeMachine")
        if machine is None:
            raise BatchError("no_machine", "no coffee machine in this scene")
        if mug.parent != machine:
            batch = self.fetch(world, self.state.object_id)
            if batch:
                return batch
            return self.put_held(world, machine)
        b = self._batch(world)
        b.navigate(machine)
        b.interact("ToggleOn", machine)
        b.interact("ToggleOff", machine)
        self.state.step = "interaction_brew"
        return b.tokens


class IsBoiledPolicy(KeyPolicy):
    def solved(self, world) -> bool:
        obj = self.obj(world)
        return obj is None or bool(obj.get("isBoiled"))

    def next_batch(self, world):
        pot_id = self._first_of_type(world, "Pot")
        burner = self._first_of_type(world, "StoveBurner")
        if pot_id is None or burner is None:
            raise BatchError("no_equipment", "boiling needs a pot and a stove burner")
        pot = world.objects[pot_id]
        potato = self.obj(world)
        if not pot.get("isFilledWithLiquid"):
            return self.fill_flow(world, pot_id)
        if pot.parent != burner:
            batch = self.fetch(world, pot_id)
            if batch:
                return batch
            return self.put_held(world, burner)
        if potato.parent != pot_id:
            batch = self.fetch(world, self.state.object_id)
            if batch:
                return batch
            return self.put_held(world, pot_id)
        b = self._batch(world)
        b.navigate(burner)
        b.interact("ToggleOn", burner)
        b.interact("ToggleOff", burner)
        self.state.step = "interaction_boil"
        return b.tokens


class IsCookedPolicy(KeyPolicy):
    def solved(self, world) -> bool:
        obj = self.obj(world)
        return obj is None or bool(obj.get("isCooked"))

    def next_batch(self, world):
        obj = self.obj(world)
        if obj.object_type == "BreadSliced":
            return self._toaster_flow(world, obj)
        return self._microwave_flow(world, obj)

    def _toaster_flow(self, world, obj):
        toaster = self._first_of_type(world, "Toaster")
        if toaster is None:
            raise BatchError("no_toaster", "no toaster in this scene")
        if obj.parent != toaster:
            batch = self.fetch(world, obj.object_id)
            if batch:
                return batch
            return self.put_held(world, toaster)
        b = self._batch(world)
        b.navigate(toaster)
        b.interact("ToggleOn", toaster)
        b.interact("ToggleOff", toaster)
        self.state.step = "interaction_toast"
        return b.tokens

    def _microwave_flow(self, world, obj):
        micro_id = self._first_of_type(world, "Microwave")
        if micro_id is None:
            raise BatchError("no_microwave", "no microwave in this scene")
        micro = world.objects[micro_id]
        if obj.parent != micro_id:
            batch = self.fetch(world, obj.object_id)
            if batch:
                return batch
            return self.put_held(world, micro_id)
        b = self._batch(world)
        b.navigate(micro_id)
        if micro.get("isOpen"):
            b.interact("Close", micro_id)
        b.interact("ToggleOn", micro_id)
        b.interact("ToggleOff", micro_id)
        self.state.step = "interaction_cook"
        return b.tokens


class SlicePolicy(KeyPolicy):
    def solved(self, world) -> bool:
        return self.state.object_id not in world.objects

    def _find_knife(self, world) -> Optional[str]:
        h = self.cmd.lib.hierarchy
        held = world.held_object
        if held is not None and h.is_member(world.objects[held].object_type, "Knife"):
            return held
        ids = sorted(
            o.object_id
            for o in world.objects.values()
            if h.is_member(o.object_type, "Knife") and o.get("pickupable")
        )
        return ids[0] if ids else None

    def next_batch(self, world):
        knife = self._find_knife(world)
        if knife is None:
            raise BatchError("no_knife", "no knife in this scene")
        if world.held_object != knife:
            return self.fetch(world, knife)
        target = self.state.object_id
        b = self._batch(world)
        if b.navigate(target):
            self.state.step = "navigation_2"
            return b.tokens
        parent = self._closed_ancestor(world, target)
        if parent is not None:
            if parent.get("toggleable") and parent.get("isToggled"):
                b.interact("ToggleOff", parent.object_id)
            b.interact("Open", parent.object_id)
            self.state.step = "interaction_2_1"
            return b.tokens
        b.interact("Slice", target)
        self.state.step = "interaction_slice"
        return b.tokens


def _key_signature(object_id: str, key: dict) -> tuple:
    return (
        object_id,
        key["property_name"],
        json.dumps(key["desired_property_value"], sort_keys=True),
    )


class RuleCommander:
    """Dispatches Progress Check problem keys to hand-written policies."""

    def __init__(
        self,
        lib: TaskLibrary,
        ground: GroundTask,
        plan: Floorplan,
        config: AgentConfig = None,
    ):
        self.lib = lib
        self.ground = ground
        self.plan = plan
        self.config = config or AgentConfig()
        self.active: Optional[KeyPolicy] = None
        self.skipped: set = set()
        self._last_emit = None

    # policy dispatch table, in the order the seven keys are documented
    def _make_policy(self, object_id: str, key: dict, world) -> Optional[KeyPolicy]:
        prop = key["property_name"]
        desired = key["desired_property_value"]
        state = PolicyState(object_id, prop, desired)
        if prop == "parentReceptacles":
            if not isinstance(desired, str) or desired not in world.objects:
                return None
            return ParentReceptaclePolicy(self, state)
        if prop == "isDirty" and desired == 0:
            return IsDirtyPolicy(self, state)
        if prop == "isFilledWithLiquid" and desired == 1:
            return IsFilledWithLiquidPolicy(self, state)
        if prop == "isFilledWithCoffee" and desired == 1:
            return IsFilledWithCoffeePolicy(self, state)
        if prop == "isBoiled" and desired == 1:
            if self.config.partial_policy_coverage:
                return None
            return IsBoiledPolicy(self, state)
        if prop == "isCooked" and desired == 1:
            obj = world.objects.get(object_id)
            if obj is None:
                return None
            if self.config.partial_policy_coverage and obj.object_type == "BreadSliced":
                return None
            return IsCookedPolicy(self, state)
        if prop == "objectType" and isinstance(desired, str) and desired.endswith("Sliced"):
            return SlicePolicy(self, state)
        return None

    def _pick_key(self, world, report: ProgressReport) -> Optional[KeyPolicy]:
        for object_id, key in report.iter_problem_keys():
            sig = _key_signature(object_id, key)
            if sig in self.skipped:
                continue
            policy = self._make_policy(object_id, key, world)
            if policy is None:
                self.skipped.add(sig)
                continue
            policy.signature = sig
            return policy
        return None

    def decide(self, world: WorldState, report: ProgressReport) -> Optional[list[str]]:
        """Next instruction token batch, or None when nothing actionable remains."""
        for _ in range(64):
            if self.active is None:
                self.active = self._pick_key(world, report)
                if self.active is None:
                    return None
            outcome = self.active.step_once(world)
            if outcome == DONE:
                self.active = None
                continue
            if outcome == FAIL:
                self.skipped.add(self.active.signature)
                self.active = None
                continue
            emit = (self.active.signature, world.state_hash(), tuple(outcome))
            if emit == self._last_emit:
                # identical batch against an identical world: no progress
                self.skipped.add(self.active.signature)
                self.active = None
                continue
            self._last_emit = emit
            return outcome
        return None
