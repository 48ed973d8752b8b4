"""Closed object-type catalog: affordances, receptacle capacities, heights.

The simulator and checker only ever touch properties from PROPERTY_SET; the
catalog rows provide per-type defaults for the affordance flags.
"""

from __future__ import annotations

from dataclasses import dataclass

# Every property an ObjectInstance may carry. "objectClass" is derived via the
# class hierarchy and never stored.
PROPERTY_SET = frozenset(
    {
        "objectType",
        "isDirty",
        "isCooked",
        "isBoiled",
        "isFilledWithLiquid",
        "isFilledWithCoffee",
        "parentReceptacles",
        "receptacle",
        "openable",
        "isOpen",
        "toggleable",
        "isToggled",
        "pickupable",
        "sliceable",
        "fillable",
        "visibleHeight",
    }
)

BOOL_PROPERTIES = frozenset(
    {
        "isDirty",
        "isCooked",
        "isBoiled",
        "isFilledWithLiquid",
        "isFilledWithCoffee",
        "receptacle",
        "openable",
        "isOpen",
        "toggleable",
        "isToggled",
        "pickupable",
        "sliceable",
        "fillable",
    }
)


@dataclass(frozen=True)
class TypeSpec:
    object_type: str
    pickupable: bool = False
    receptacle: bool = False
    capacity: int = 0
    openable: bool = False
    toggleable: bool = False
    sliceable: bool = False
    fillable: bool = False
    cookable: bool = False      # microwave/toaster can set isCooked
    washable: bool = False      # may spawn dirty; faucet can clean
    height: int = 1             # 0 floor, 1 counter, 2 high shelf


def _t(name, **kw):
    return TypeSpec(name, **kw)


_SPECS = [
    # fixtures
    _t("CounterTop", receptacle=True, capacity=8),
    _t("Sink", receptacle=True, capacity=3),
    _t("Faucet", toggleable=True),
    _t("StoveBurner", receptacle=True, capacity=1, toggleable=True),
    _t("Fridge", receptacle=True, capacity=6, openable=True),
    _t("Cabinet", receptacle=True, capacity=4, openable=True, height=2),
    _t("Drawer", receptacle=True, capacity=3, openable=True),
    _t("Microwave", receptacle=True, capacity=2, openable=True, toggleable=True),
    _t("Toaster", receptacle=True, capacity=1, toggleable=True),
    _t("CoffeeMachine", receptacle=True, capacity=1, toggleable=True),
    _t("DiningTable", receptacle=True, capacity=6),
    _t("SideTable", receptacle=True, capacity=4),
    _t("CoffeeTable", receptacle=True, capacity=4, height=0),
    _t("Desk", receptacle=True, capacity=4),
    _t("Shelf", receptacle=True, capacity=4, height=2),
    _t("Bathtub", receptacle=True, capacity=4, height=0),
    _t("GarbageCan", receptacle=True, capacity=4, height=0),
    _t("HousePlant", fillable=True, height=0),
    # movable containers
    _t("Plate", pickupable=True, receptacle=True, capacity=4, washable=True),
    _t("Bowl", pickupable=True, receptacle=True, capacity=2, fillable=True, washable=True),
    _t("Pot", pickupable=True, receptacle=True, capacity=2, fillable=True, washable=True),
    _t("Pan", pickupable=True, receptacle=True, capacity=2, washable=True),
    _t("Mug", pickupable=True, fillable=True, washable=True),
    _t("Cup", pickupable=True, fillable=True, washable=True),
    # silverware and tools
    _t("Fork", pickupable=True, washable=True),
    _t("Spoon", pickupable=True, washable=True),
    _t("Knife", pickupable=True, washable=True),
    _t("ButterKnife", pickupable=True, washable=True),
    _t("Spatula", pickupable=True, washable=True),
    # food
    _t("Bread", pickupable=True, sliceable=True),
    _t("BreadSliced", pickupable=True, cookable=True),
    _t("Potato", pickupable=True, sliceable=True, cookable=True),
    _t("PotatoSliced", pickupable=True, cookable=True),
    _t("Tomato", pickupable=True, sliceable=True),
    _t("TomatoSliced", pickupable=True),
    _t("Lettuce", pickupable=True, sliceable=True),
    _t("LettuceSliced", pickupable=True),
    _t("Apple", pickupable=True, sliceable=True),
    _t("AppleSliced", pickupable=True),
    _t("Egg", pickupable=True, cookable=True),
    # clutter used by Put-All variants and as distractors
    _t("Cloth", pickupable=True, washable=True),
    _t("SoapBar", pickupable=True, washable=True),
    _t("TissueBox", pickupable=True),
    _t("Book", pickupable=True),
    _t("Pen", pickupable=True),
    _t("Pencil", pickupable=True),
    _t("KeyChain", pickupable=True),
    _t("Watch", pickupable=True),
    _t("RemoteControl", pickupable=True),
    _t("CellPhone", pickupable=True),
    _t("Candle", pickupable=True),
    _t("Statue", pickupable=True),
    _t("Vase", pickupable=True),
]

CATALOG: dict[str, TypeSpec] = {spec.object_type: spec for spec in _SPECS}

# Slicing turns one source object into SLICE_COUNT new "<Type>Sliced" objects.
SLICE_PRODUCT = {
    t.object_type: t.object_type + "Sliced"
    for t in _SPECS
    if t.sliceable
}
SLICE_SOURCE = {v: k for k, v in SLICE_PRODUCT.items()}

FIXTURE_TYPES = frozenset(s.object_type for s in _SPECS if not s.pickupable)


def spec_for(object_type: str) -> TypeSpec:
    try:
        return CATALOG[object_type]
    except KeyError:
        raise KeyError(f"unknown object type: {object_type}") from None


def capacity(object_type: str) -> int:
    return spec_for(object_type).capacity


DEFAULT_CLASSES = {
    "Silverware": ["Fork", "Spoon", "Knife"],
    "Knife": ["ButterKnife"],
    "Tableware": ["Plate", "Bowl", "Cup", "Mug"],
    "Dishware": ["Plate", "Bowl"],
    "Drinkware": ["Mug", "Cup"],
    "Cookware": ["Pot", "Pan"],
    "FillableContainer": ["Cup", "Mug", "Bowl", "Pot"],
    "SmallHandheldObjects": [
        "Fork", "Spoon", "Knife", "Pen", "Pencil", "KeyChain",
        "Watch", "RemoteControl", "CellPhone",
    ],
    "Food": [
        "Bread", "BreadSliced", "Potato", "PotatoSliced", "Tomato",
        "TomatoSliced", "Lettuce", "LettuceSliced", "Apple", "AppleSliced", "Egg",
    ],
    "Vegetables": ["Potato", "Tomato", "Lettuce"],
    "Fruit": ["Apple", "Tomato"],
    "Tables": ["DiningTable", "SideTable", "CoffeeTable", "Desk"],
    "Furniture": ["Tables", "Shelf"],
    "Utensils": ["Silverware", "Spatula"],
}
