"""World state: object instances, containment, agent poses, diffs, snapshots."""

from __future__ import annotations

import copy
import hashlib
import json
from dataclasses import dataclass, field
from typing import Iterable, Optional

from . import catalog
from .catalog import BOOL_PROPERTIES, PROPERTY_SET
from .errors import WorldError
from .hierarchy import ClassHierarchy

# Reserved before/after value for objects created or removed between two states.
ABSENT = "<absent>"

HEADINGS = ("N", "E", "S", "W")
HEADING_VEC = {"N": (0, -1), "E": (1, 0), "S": (0, 1), "W": (-1, 0)}
PITCHES = (-30, 0, 30)


def format_coord(v: float) -> str:
    """Render one object-id coordinate: sign or leading space, two decimals."""
    return f"{v: 06.2f}" if v >= 0 else f"{v:06.2f}"


def mint_object_id(object_type: str, x: float, y: float, z: float) -> str:
    return f"{object_type}|{format_coord(x)}|{format_coord(y)}|{format_coord(z)}"


@dataclass
class ObjectInstance:
    object_id: str
    object_type: str
    cell: Optional[tuple[int, int]] = None       # None while contained or held
    properties: dict = field(default_factory=dict)

    def get(self, name: str, default=0):
        if name == "objectType":
            return self.object_type
        if name == "parentReceptacles":
            return self.properties.get("parentReceptacles")
        if name not in PROPERTY_SET:
            raise WorldError(f"unknown property: {name}")
        return self.properties.get(name, default)

    @property
    def parent(self) -> Optional[str]:
        return self.properties.get("parentReceptacles")

    def view(self) -> dict:
        """Canonical property view used for diffs and serialization."""
        out = {"objectType": self.object_type}
        for key in sorted(self.properties):
            if key == "parentReceptacles":
                continue
            out[key] = self.properties[key]
        out["parentReceptacles"] = self.properties.get("parentReceptacles")
        return out


def make_object(object_type: str, cell=None, object_id=None, **overrides) -> ObjectInstance:
    """Instantiate a catalog type with default affordances applied."""
    spec = catalog.spec_for(object_type)
    props = {
        "visibleHeight": spec.height,
    }
    for flag in ("pickupable", "receptacle", "openable", "toggleable", "sliceable", "fillable"):
        if getattr(spec, flag):
            props[flag] = 1
    if spec.openable:
        props["isOpen"] = 0
    if spec.toggleable:
        props["isToggled"] = 0
    if spec.washable:
        props["isDirty"] = 0
    if spec.cookable:
        props["isCooked"] = 0
    if spec.fillable:
        props["isFilledWithLiquid"] = 0
    if object_type == "Mug":
        props["isFilledWithCoffee"] = 0
    if object_type in ("Potato", "PotatoSliced"):
        props["isBoiled"] = 0
    for key, value in overrides.items():
        if key not in PROPERTY_SET:
            raise WorldError(f"unknown property: {key}")
        props[key] = value
    if object_id is None:
        x, z = (cell if cell is not None else (0, 0))
        object_id = mint_object_id(object_type, float(x), float(spec.height), float(z))
    return ObjectInstance(object_id, object_type, cell, props)


@dataclass
class AgentPose:
    cell: tuple[int, int]
    heading: str = "N"
    pitch: int = 0

    def to_dict(self) -> dict:
        return {"cell": list(self.cell), "heading": self.heading, "pitch": self.pitch}

    @classmethod
    def from_dict(cls, d) -> "AgentPose":
        return cls(tuple(d["cell"]), d["heading"], d["pitch"])


@dataclass
class WorldState:
    """All object instances plus both agent poses.

    Mutable: one session driver owns and mutates a live world; snapshot()
    produces an independent copy for anything that must not change.
    """

    floorplan_id: str
    objects: dict[str, ObjectInstance]
    follower: AgentPose
    commander: AgentPose
    held_object: Optional[str] = None
    tick: int = 0

    def snapshot(self) -> "WorldState":
        return copy.deepcopy(self)

    def add_object(self, obj: ObjectInstance) -> ObjectInstance:
        base = obj.object_id
        bump = 0
        while obj.object_id in self.objects:
            bump += 1
            t, x, y, z = base.split("|")
            obj.object_id = mint_object_id(
                obj.object_type, float(x) + 0.01 * bump, float(y), float(z)
            )
        self.objects[obj.object_id] = obj
        return obj

    def contents(self, receptacle_id: str) -> list[ObjectInstance]:
        """Direct children, ordered by object id."""
        return sorted(
            (o for o in self.objects.values() if o.parent == receptacle_id),
            key=lambda o: o.object_id,
        )

    def transitive_contents(self, receptacle_id: str) -> list[ObjectInstance]:
        out = []
        for child in self.contents(receptacle_id):
            out.append(child)
            out.extend(self.transitive_contents(child.object_id))
        return out

    def effective_cell(self, object_id: str) -> Optional[tuple[int, int]]:
        """Grid cell of the object or of the root of its containment chain."""
        seen = set()
        obj = self.objects[object_id]
        while True:
            if obj.object_id in seen:
                raise WorldError(f"containment cycle at {obj.object_id}")
            seen.add(obj.object_id)
            if obj.object_id == self.held_object:
                return None
            if obj.parent is None:
                return obj.cell
            parent = self.objects.get(obj.parent)
            if parent is None:
                raise WorldError(f"{obj.object_id} contained in missing {obj.parent}")
            obj = parent

    def ancestors(self, object_id: str) -> list[ObjectInstance]:
        out = []
        obj = self.objects[object_id]
        while obj.parent is not None:
            obj = self.objects[obj.parent]
            out.append(obj)
            if len(out) > len(self.objects):
                raise WorldError("containment cycle")
        return out

    def held_root(self, object_id: str) -> bool:
        """True if the object is the held object or contained in it."""
        if self.held_object is None:
            return False
        if object_id == self.held_object:
            return True
        return any(a.object_id == self.held_object for a in self.ancestors(object_id))

    def validate(self):
        if self.held_object is not None:
            held = self.objects.get(self.held_object)
            if held is None:
                raise WorldError("held object missing from world")
            if held.parent is not None or held.cell is not None:
                raise WorldError("held object must have no parent and no cell")
        for obj in self.objects.values():
            if not obj.object_id.startswith(obj.object_type + "|"):
                raise WorldError(f"id prefix mismatch: {obj.object_id}")
            parent = obj.parent
            if parent is not None:
                target = self.objects.get(parent)
                if target is None:
                    raise WorldError(f"{obj.object_id}: parent {parent} missing")
                if not target.get("receptacle"):
                    raise WorldError(f"{obj.object_id}: parent {parent} not a receptacle")
            for key, value in obj.properties.items():
                if key not in PROPERTY_SET:
                    raise WorldError(f"{obj.object_id}: unknown property {key}")
                if key in BOOL_PROPERTIES and value not in (0, 1):
                    raise WorldError(f"{obj.object_id}: {key} must be 0/1, got {value!r}")
            self.effective_cell(obj.object_id)  # raises on containment cycles

    def to_dict(self) -> dict:
        return {
            "version": 1,
            "floorplan_id": self.floorplan_id,
            "tick": self.tick,
            "follower": self.follower.to_dict(),
            "commander": self.commander.to_dict(),
            "held_object": self.held_object,
            "objects": [
                {
                    "object_id": o.object_id,
                    "object_type": o.object_type,
                    "cell": list(o.cell) if o.cell is not None else None,
                    "properties": o.view(),
                }
                for o in sorted(self.objects.values(), key=lambda o: o.object_id)
            ],
        }

    @classmethod
    def from_dict(cls, d) -> "WorldState":
        objects = {}
        for row in d["objects"]:
            props = {
                k: v
                for k, v in row["properties"].items()
                if k != "objectType" and not (k == "parentReceptacles" and v is None)
            }
            objects[row["object_id"]] = ObjectInstance(
                row["object_id"],
                row["object_type"],
                tuple(row["cell"]) if row["cell"] is not None else None,
                props,
            )
        return cls(
            floorplan_id=d["floorplan_id"],
            objects=objects,
            follower=AgentPose.from_dict(d["follower"]),
            commander=AgentPose.from_dict(d["commander"]),
            held_object=d["held_object"],
            tick=d["tick"],
        )

    def state_hash(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def matches_condition(obj: ObjectInstance, prop: str, desired, h: ClassHierarchy) -> bool:
    """Does one object property match a task condition value?

    objectType compares literally, objectClass through the hierarchy, every
    other property literally against the closed property set.
    """
    if prop == "objectClass":
        return h.is_member(obj.object_type, str(desired))
    if prop == "objectType":
        return obj.object_type == desired
    if prop not in PROPERTY_SET:
        raise WorldError(f"unknown property: {prop}")
    return obj.get(prop) == desired


@dataclass(frozen=True)
class PropertyDelta:
    object_id: str
    prop: str
    before: object
    after: object

    def to_dict(self) -> dict:
        return {
            "object_id": self.object_id,
            "property": self.prop,
            "before": self.before,
            "after": self.after,
        }

    @classmethod
    def from_dict(cls, d) -> "PropertyDelta":
        return cls(d["object_id"], d["property"], d["before"], d["after"])


def diff_states(before: WorldState, after: WorldState) -> frozenset[PropertyDelta]:
    """One delta per (object, property) whose value differs.

    Objects present on only one side contribute a delta per property with
    ABSENT on the missing side, which is how slicing (object replacement)
    shows up in expected-state-change sets.
    """
    deltas = []
    ids = set(before.objects) | set(after.objects)
    for object_id in sorted(ids):
        b = before.objects.get(object_id)
        a = after.objects.get(object_id)
        bv = b.view() if b is not None else {}
        av = a.view() if a is not None else {}
        for prop in sorted(set(bv) | set(av)):
            old = bv.get(prop, ABSENT)
            new = av.get(prop, ABSENT)
            if old != new:
                deltas.append(PropertyDelta(object_id, prop, old, new))
    return frozenset(deltas)


def apply_deltas(deltas: Iterable[PropertyDelta], world: WorldState) -> WorldState:
    """Patch a snapshot of `world` so its property view matches the deltas."""
    out = world.snapshot()
    for delta in sorted(deltas, key=lambda d: (d.object_id, d.prop)):
        if delta.after == ABSENT:
            out.objects.pop(delta.object_id, None)
            continue
        obj = out.objects.get(delta.object_id)
        if obj is None:
            object_type = delta.object_id.split("|", 1)[0]
            obj = ObjectInstance(delta.object_id, object_type, None, {})
            out.objects[delta.object_id] = obj
        if delta.prop == "objectType":
            obj.object_type = delta.after
        elif delta.prop == "parentReceptacles" and delta.after is None:
            obj.properties.pop("parentReceptacles", None)
        else:
            obj.properties[delta.prop] = delta.after
    return out
