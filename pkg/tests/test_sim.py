import random

import pytest

from chorebench.actions import (
    COMMANDER,
    FOLLOWER,
    CameraMotion,
    Interact,
    Motion,
    ObjectSelector,
    ProgressCheck,
)
from chorebench.sim import (
    E_COLLISION,
    E_FULL,
    E_NO_KNIFE,
    E_ROLE,
    SHIPPED_RULES,
    SimConfig,
    apply_transition_rules,
    check_rules_confluent,
    observe,
    project,
    resolve_selector,
    search_object,
    step,
    visible_ids,
)
from chorebench.world import AgentPose, make_object
from conftest import build_world, fuzz_world


def sel(object_id):
    return ObjectSelector(object_id=object_id)


def contain(obj, recep):
    obj.properties["parentReceptacles"] = recep.object_id
    obj.cell = None
    return obj


@pytest.fixture
def plan(plans):
    return plans["kitchen_1"]


def fresh_world(plan, objects, follower=(4, 4), heading="N"):
    world = build_world(objects, floorplan_id=plan.floorplan_id, follower=follower, heading=heading)
    return world


# ----------------------------------------------------------------- motion


def test_forward_into_wall_is_atomic(plan, lib):
    world = fresh_world(plan, [], follower=(1, 1), heading="N")
    world.follower.cell = (1, 1)
    before = world.state_hash()
    world, result = step(plan, world, Motion("Forward"), FOLLOWER, lib.hierarchy)
    # (1,0) holds a fixture on kitchen_1, so Forward collides
    assert not result.success and result.error == E_COLLISION
    assert world.state_hash() == before


def test_turns_and_pitch(plan, lib):
    world = fresh_world(plan, [], follower=(4, 4), heading="N")
    world, r = step(plan, world, Motion("TurnRight"), FOLLOWER, lib.hierarchy)
    assert r.success and world.follower.heading == "E"
    world, r = step(plan, world, Motion("LookUp"), FOLLOWER, lib.hierarchy)
    assert r.success and world.follower.pitch == 30
    world, r = step(plan, world, Motion("LookUp"), FOLLOWER, lib.hierarchy)
    assert not r.success and world.follower.pitch == 30


def test_role_enforcement(plan, lib):
    world = fresh_world(plan, [])
    world.commander = AgentPose((4, 4), "S")
    _, r = step(plan, world, Motion("Forward"), COMMANDER, lib.hierarchy)
    assert not r.success and r.error == E_ROLE
    _, r = step(plan, world, ProgressCheck(), FOLLOWER, lib.hierarchy)
    assert not r.success and r.error == E_ROLE
    world, r = step(plan, world, CameraMotion("Forward"), COMMANDER, lib.hierarchy)
    assert r.success and world.commander.cell == (4, 5)


# ------------------------------------------------------------ interaction


def test_pickup_from_open_fridge(plan, lib):
    fridge = make_object("Fridge", cell=(3, 3), isOpen=1)
    mug = contain(make_object("Mug", isDirty=1), fridge)
    world = fresh_world(plan, [fridge, mug], follower=(3, 4), heading="N")
    world, r = step(plan, world, Interact("Pickup", sel(mug.object_id)), FOLLOWER, lib.hierarchy)
    assert r.success
    assert world.held_object == mug.object_id
    assert world.objects[mug.object_id].parent is None


def test_pickup_inside_closed_fridge_fails(plan, lib):
    fridge = make_object("Fridge", cell=(3, 3))
    mug = contain(make_object("Mug"), fridge)
    world = fresh_world(plan, [fridge, mug], follower=(3, 4), heading="N")
    before = world.state_hash()
    world, r = step(plan, world, Interact("Pickup", sel(mug.object_id)), FOLLOWER, lib.hierarchy)
    assert not r.success and r.error == "closed_parent"
    assert world.state_hash() == before


def test_place_receptacle_full(plan, lib):
    sink = make_object("Sink", cell=(3, 3))
    fill = [contain(make_object("Plate", object_id=f"Plate|{i}"), sink) for i in range(3)]
    pot = make_object("Pot")
    pot.cell = None
    world = fresh_world(plan, [sink, pot] + fill, follower=(3, 4), heading="N")
    world.held_object = pot.object_id
    before = world.state_hash()
    world, r = step(plan, world, Interact("Place", sel(sink.object_id)), FOLLOWER, lib.hierarchy)
    assert not r.success and r.error == E_FULL
    assert world.state_hash() == before
    assert "full" in r.message


def test_slice_requires_knife(plan, lib):
    counter = make_object("CounterTop", cell=(3, 3))
    bread = contain(make_object("Bread"), counter)
    world = fresh_world(plan, [counter, bread], follower=(3, 4), heading="N")
    world, r = step(plan, world, Interact("Slice", sel(bread.object_id)), FOLLOWER, lib.hierarchy)
    assert not r.success and r.error == E_NO_KNIFE


def test_slice_replaces_object(plan, lib):
    counter = make_object("CounterTop", cell=(3, 3))
    bread = contain(make_object("Bread"), counter)
    knife = make_object("Knife")
    knife.cell = None
    world = fresh_world(plan, [counter, bread, knife], follower=(3, 4), heading="N")
    world.held_object = knife.object_id
    n_before = len(world.objects)
    world, r = step(plan, world, Interact("Slice", sel(bread.object_id)), FOLLOWER, lib.hierarchy)
    assert r.success
    assert bread.object_id not in world.objects
    slices = [o for o in world.objects.values() if o.object_type == "BreadSliced"]
    assert len(slices) == SimConfig().slice_count
    assert all(s.parent == counter.object_id for s in slices)
    assert len(world.objects) == n_before - 1 + len(slices)


def test_conservation_only_slice_changes_count(plan, lib):
    rng = random.Random(5)
    counter = make_object("CounterTop", cell=(3, 3))
    mug = contain(make_object("Mug"), counter)
    world = fresh_world(plan, [counter, mug], follower=(3, 4), heading="N")
    n = len(world.objects)
    actions = [Motion("TurnLeft"), Motion("TurnRight"), Interact("Pickup", sel(mug.object_id)),
               Interact("Place", sel(counter.object_id)), Motion("Forward"), Motion("Backward")]
    for _ in range(60):
        action = rng.choice(actions)
        world, _ = step(plan, world, action, FOLLOWER, lib.hierarchy)
        assert len(world.objects) == n
        world.validate()


def test_pour_waters_plant(plan, lib):
    plant = make_object("HousePlant", cell=(3, 3))
    cup = make_object("Cup", isFilledWithLiquid=1)
    cup.cell = None
    world = fresh_world(plan, [plant, cup], follower=(3, 4), heading="N")
    world.held_object = cup.object_id
    world, r = step(plan, world, Interact("Pour", sel(plant.object_id)), FOLLOWER, lib.hierarchy)
    assert r.success
    assert world.objects[plant.object_id].get("isFilledWithLiquid") == 1
    assert world.objects[cup.object_id].get("isFilledWithLiquid") == 0


# -------------------------------------------------------- transition rules


def test_toaster_cooks_bread(plan, lib):
    toaster = make_object("Toaster", cell=(3, 3))
    slice_ = contain(make_object("BreadSliced"), toaster)
    world = fresh_world(plan, [toaster, slice_], follower=(3, 4), heading="N")
    world, r = step(plan, world, Interact("ToggleOn", sel(toaster.object_id)), FOLLOWER, lib.hierarchy)
    assert r.success
    assert world.objects[slice_.object_id].get("isCooked") == 1


def test_coffee_machine_fills_clean_mug_only(plan, lib):
    machine = make_object("CoffeeMachine", cell=(3, 3))
    mug = contain(make_object("Mug", isDirty=1), machine)
    world = fresh_world(plan, [machine, mug], follower=(3, 4), heading="N")
    world, _ = step(plan, world, Interact("ToggleOn", sel(machine.object_id)), FOLLOWER, lib.hierarchy)
    assert world.objects[mug.object_id].get("isFilledWithCoffee") == 0
    mug.properties["isDirty"] = 0
    _, deltas = apply_transition_rules(world)
    assert world.objects[mug.object_id].get("isFilledWithCoffee") == 1
    assert any(d.prop == "isFilledWithCoffee" and d.after == 1 for d in deltas)


def test_faucet_washes_and_fills(plan, lib):
    sink = make_object("Sink", cell=(3, 3))
    faucet = make_object("Faucet", cell=(3, 3))
    plate = contain(make_object("Plate", isDirty=1), sink)
    pot = contain(make_object("Pot", isDirty=1), sink)
    world = fresh_world(plan, [sink, faucet, plate, pot], follower=(3, 4), heading="N")
    world, r = step(plan, world, Interact("ToggleOn", sel(faucet.object_id)), FOLLOWER, lib.hierarchy)
    assert r.success
    assert world.objects[plate.object_id].get("isDirty") == 0
    assert world.objects[pot.object_id].get("isFilledWithLiquid") == 1


def test_stove_boils_potato(plan, lib):
    burner = make_object("StoveBurner", cell=(3, 3))
    pot = contain(make_object("Pot", isFilledWithLiquid=1), burner)
    potato = contain(make_object("Potato"), pot)
    world = fresh_world(plan, [burner, pot, potato], follower=(3, 4), heading="N")
    world, _ = step(plan, world, Interact("ToggleOn", sel(burner.object_id)), FOLLOWER, lib.hierarchy)
    assert world.objects[potato.object_id].get("isBoiled") == 1


def test_empty_world_rules_noop(plan):
    world = fresh_world(plan, [])
    _, deltas = apply_transition_rules(world)
    assert deltas == []


def test_rules_confluent():
    probes = []
    rng = random.Random(3)
    for _ in range(8):
        world = fuzz_world(rng)
        for obj in world.objects.values():
            if obj.get("toggleable"):
                obj.properties["isToggled"] = 1
        probes.append(world)
    check_rules_confluent(SHIPPED_RULES, probes)


# ------------------------------------------------------ observe / selector


def test_observe_facing_counter(plan, lib):
    counter = make_object("CounterTop", cell=(3, 3))
    knife = contain(make_object("Knife"), counter)
    world = fresh_world(plan, [counter, knife], follower=(3, 4), heading="N")
    obs = observe(plan, world, FOLLOWER)
    ids = [v.object_id for v in obs.visible]
    assert knife.object_id in ids and counter.object_id in ids
    knife_vis = next(v for v in obs.visible if v.object_id == knife.object_id)
    assert knife_vis.coord is not None and knife_vis.distance == 1


def test_closed_fridge_hides_contents(plan, lib):
    fridge = make_object("Fridge", cell=(3, 3))
    mug = contain(make_object("Mug"), fridge)
    world = fresh_world(plan, [fridge, mug], follower=(3, 4), heading="N")
    obs = observe(plan, world, FOLLOWER)
    ids = [v.object_id for v in obs.visible]
    assert mug.object_id not in ids
    fridge.properties["isOpen"] = 1
    ids = [v.object_id for v in observe(plan, world, FOLLOWER).visible]
    assert mug.object_id in ids


def test_held_object_listed_without_coords(plan, lib):
    mug = make_object("Mug")
    mug.cell = None
    world = fresh_world(plan, [mug], follower=(3, 4), heading="N")
    world.held_object = mug.object_id
    obs = observe(plan, world, FOLLOWER)
    assert obs.held_object == mug.object_id
    assert obs.held_object_type == "Mug"
    assert mug.object_id not in [v.object_id for v in obs.visible]


def test_resolve_selector_by_coordinate(plan, lib):
    counter = make_object("CounterTop", cell=(3, 3))
    mug = contain(make_object("Mug"), counter)
    world = fresh_world(plan, [counter, mug], follower=(3, 4), heading="N")
    coord = project(world, world.follower, mug.object_id)
    got, failure = resolve_selector(plan, world, world.follower, ObjectSelector(coord=coord))
    assert failure is None and got == mug.object_id


def test_resolve_selector_empty_space(plan, lib):
    world = fresh_world(plan, [], follower=(4, 4), heading="S")
    got, failure = resolve_selector(plan, world, world.follower, ObjectSelector(coord=(0.5, 0.5)))
    assert got is None and failure is not None


def test_resolve_selector_nearest_then_id(plan, lib):
    counter = make_object("CounterTop", cell=(3, 3))
    a = contain(make_object("Fork", object_id="Fork|a"), counter)
    b = contain(make_object("Fork", object_id="Fork|b"), counter)
    world = fresh_world(plan, [counter, a, b], follower=(3, 4), heading="N")
    pa = project(world, world.follower, "Fork|a")
    got, _ = resolve_selector(plan, world, world.follower, ObjectSelector(coord=pa))
    assert got == "Fork|a"
    pb = project(world, world.follower, "Fork|b")
    got, _ = resolve_selector(plan, world, world.follower, ObjectSelector(coord=pb))
    assert got == "Fork|b"
    # exact midpoint: equal projection distance, equal range, lex id wins
    mid = (round((pa[0] + pb[0]) / 2, 10), round((pa[1] + pb[1]) / 2, 10))
    got, _ = resolve_selector(plan, world, world.follower, ObjectSelector(coord=mid))
    assert got == "Fork|a"


# ----------------------------------------------------------------- search


def test_search_by_name(plan, lib):
    sink = make_object("Sink", cell=(3, 3))
    world = fresh_world(plan, [sink])
    hits = search_object(world, "sink")
    assert len(hits) == 1 and hits[0].object_id == sink.object_id
    assert hits[0].cell == (3, 3)


def test_search_held_object(plan, lib):
    mug = make_object("Mug")
    mug.cell = None
    world = fresh_world(plan, [mug])
    world.held_object = mug.object_id
    hits = search_object(world, "mug")
    assert hits[0].location == "follower hand"


def test_search_two_forks(plan, lib):
    counter = make_object("CounterTop", cell=(3, 3))
    a = contain(make_object("Fork", object_id="Fork|a"), counter)
    b = contain(make_object("Fork", object_id="Fork|b"), counter)
    world = fresh_world(plan, [counter, a, b])
    hits = search_object(world, "fork")
    assert [h.object_id for h in hits] == ["Fork|a", "Fork|b"]
    assert all(h.parent_id == counter.object_id for h in hits)


def test_search_no_match_empty(plan, lib):
    world = fresh_world(plan, [])
    assert search_object(world, "unicorn") == []


# ------------------------------------------------------- random-action invariants


def test_random_action_sequences_keep_invariants(plan, lib):
    rng = random.Random(17)
    counter = make_object("CounterTop", cell=(3, 3))
    sink = make_object("Sink", cell=(5, 2))
    mug = contain(make_object("Mug", isDirty=1), counter)
    fork = contain(make_object("Fork"), counter)
    world = fresh_world(plan, [counter, sink, mug, fork], follower=(3, 4), heading="N")
    motions = ["Forward", "Backward", "TurnLeft", "TurnRight", "StrafeLeft", "StrafeRight"]
    for i in range(200):
        if rng.random() < 0.6:
            action = Motion(rng.choice(motions))
        else:
            target = rng.choice(list(world.objects))
            verb = rng.choice(["Pickup", "Place", "Open", "Close", "ToggleOn", "ToggleOff", "Pour"])
            action = Interact(verb, sel(target))
        before = world.state_hash()
        world, result = step(plan, world, action, FOLLOWER, lib.hierarchy)
        if not result.success:
            assert world.state_hash() == before, f"failed action mutated state: {action}"
        world.validate()
        held = [world.held_object] if world.held_object else []
        assert len(held) <= 1
