import random

import pytest

from chorebench.floorplan import shipped_floorplans
from chorebench.library import shipped_library
from chorebench.world import AgentPose, WorldState, make_object


@pytest.fixture(scope="session")
def lib():
    return shipped_library()


@pytest.fixture(scope="session")
def plans():
    return shipped_floorplans()


@pytest.fixture(scope="session")
def kitchen(plans):
    return plans["kitchen_1"]


def build_world(objects, floorplan_id="test", follower=(1, 1), heading="N"):
    world = WorldState(
        floorplan_id, {}, AgentPose(follower, heading), AgentPose((0, 0))
    )
    for obj in objects:
        world.add_object(obj)
    world.validate()
    return world


# Object pool for fuzzed worlds: receptacles plus task-relevant movables in
# assorted states.
_FUZZ_RECEPTACLES = ("CounterTop", "Sink", "Plate", "Toaster", "CoffeeMachine", "StoveBurner", "Fridge", "Bowl", "Pot")
_FUZZ_MOVABLES = ("Mug", "Fork", "Spoon", "Knife", "Bread", "BreadSliced", "Potato", "PotatoSliced", "TomatoSliced", "LettuceSliced", "Plate", "Bowl", "Pot", "Cup", "HousePlant")
_FUZZ_FLAGS = ("isDirty", "isCooked", "isBoiled", "isFilledWithLiquid", "isFilledWithCoffee")


def fuzz_world(rng: random.Random, max_objects: int = 8) -> WorldState:
    """Random small world with valid containment, for oracle equivalence."""
    from chorebench import catalog

    world = WorldState("fuzz", {}, AgentPose((0, 0)), AgentPose((0, 0)))
    n_recep = rng.randint(1, 3)
    receptacles = []
    for i in range(n_recep):
        obj = make_object(rng.choice(_FUZZ_RECEPTACLES), cell=(i, 0))
        obj = world.add_object(obj)
        receptacles.append(obj)
    n_movable = rng.randint(0, max_objects - n_recep)
    for i in range(n_movable):
        object_type = rng.choice(_FUZZ_MOVABLES)
        obj = make_object(object_type, cell=(i, 1))
        spec = catalog.spec_for(object_type)
        for flag in _FUZZ_FLAGS:
            if flag in obj.properties and rng.random() < 0.5:
                obj.properties[flag] = rng.choice((0, 1))
        obj = world.add_object(obj)
        if rng.random() < 0.6 and receptacles:
            recep = rng.choice(receptacles)
            if recep.object_id != obj.object_id:
                obj.properties["parentReceptacles"] = recep.object_id
                obj.cell = None
    world.validate()
    return world
