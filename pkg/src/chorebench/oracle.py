"""Exhaustive task-satisfaction oracle for small worlds.

Deliberately written as a flat brute-force search, independent of the
recursive evaluator in checker.py: the task tree is flattened into atomic
condition sets and relations, component satisfaction is decided by scanning
every object, and shared-tail relations try every object in the world as
the tail. Intended for equivalence testing only.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ChoreBenchError, DefinitionError
from .tdl import Determiner, GroundTask, TaskRefComponent
from .world import WorldState, matches_condition

MAX_ORACLE_OBJECTS = 10


@dataclass
class _FlatComp:
    path: str
    det: Determiner
    conditions: dict
    primary: str


@dataclass
class _FlatRel:
    heads: list       # paths of terminal atomic head comps
    head_dets: list
    tails: list
    shared: bool


def _multiply(outer: Determiner, inner: Determiner, shareable: bool) -> Determiner:
    if shareable:
        return inner
    if inner.kind == "all":
        return Determiner.ALL
    if outer.kind == "a":
        return inner
    if outer.kind == "all":
        raise DefinitionError("cannot multiply 'all' over a task reference")
    return Determiner.count(outer.n * (inner.n if inner.kind == "count" else 1))


def _flatten(ground: GroundTask, lib, prefix: str, outer: Determiner, comps, rels, anchors):
    """Fill comps/rels with fully cascaded atomic constraints.

    anchors maps each component path to the path of its terminal atomic
    anchor component (itself for atomic components).
    """
    local_anchor = {}
    for key, comp in ground.components.items():
        path = f"{prefix}/{key}"
        det = Determiner.parse(comp.determiner)
        if isinstance(comp, TaskRefComponent):
            eff = _multiply(outer, det, False)
            sub = lib.ground(comp.task_name, comp.task_params)
            sub_anchor_key = sub.definition.task_anchor_object
            sub_anchors = _flatten(sub, lib, path, eff, comps, rels, anchors)
            if sub_anchor_key is not None:
                local_anchor[key] = sub_anchors[sub_anchor_key]
        else:
            eff = _multiply(outer, det, comp.instance_shareable)
            comps.append(_FlatComp(path, eff, dict(comp.conditions), comp.primary_condition))
            local_anchor[key] = path
        anchors[path] = local_anchor.get(key)
    for rel in ground.relations:
        heads, head_dets, tails = [], [], []
        for key, det in zip(rel.head_entity_list, rel.head_determiner_list):
            anchor = local_anchor.get(key)
            if anchor is None:
                raise DefinitionError(f"relation head {key!r} has no anchor")
            heads.append(anchor)
            head_dets.append(_multiply(outer, Determiner.parse(det), False))
        for key in rel.tail_entity_list:
            anchor = local_anchor.get(key)
            if anchor is None:
                raise DefinitionError(f"relation tail {key!r} has no anchor")
            tails.append(anchor)
        shared = any(
            Determiner.parse(d, tail=True).kind == "the"
            for d in rel.tail_determiner_list
        )
        rels.append(_FlatRel(heads, head_dets, tails, shared))
    return local_anchor


def oracle_check(world: WorldState, ground: GroundTask, lib) -> bool:
    """Brute-force satisfiability of a ground task against a small world."""
    if len(world.objects) > MAX_ORACLE_OBJECTS:
        raise ChoreBenchError(
            f"oracle limited to {MAX_ORACLE_OBJECTS} objects, world has {len(world.objects)}"
        )
    h = lib.hierarchy
    comps: list[_FlatComp] = []
    rels: list[_FlatRel] = []
    _flatten(ground, lib, "", Determiner.A, comps, rels, {})

    sat: dict[str, set] = {}
    for comp in comps:
        matching = set()
        primary_matching = set()
        for obj in world.objects.values():
            if matches_condition(obj, comp.primary, comp.conditions[comp.primary], h):
                primary_matching.add(obj.object_id)
            if all(
                matches_condition(obj, prop, want, h)
                for prop, want in comp.conditions.items()
            ):
                matching.add(obj.object_id)
        sat[comp.path] = matching
        if comp.det.kind == "all":
            if not primary_matching or primary_matching != matching:
                return False
        elif len(matching) < comp.det.required():
            return False

    def heads_placed(head_path, det, tail_ids):
        placed = [
            oid for oid in sat[head_path] if world.objects[oid].parent in tail_ids
        ]
        if det.kind == "all":
            return bool(sat[head_path]) and len(placed) == len(sat[head_path])
        return len(placed) >= det.required()

    for rel in rels:
        tail_ids = set()
        for tail_path in rel.tails:
            tail_ids |= sat[tail_path]
        if rel.shared:
            ok = any(
                all(
                    heads_placed(hp, det, {tail})
                    for hp, det in zip(rel.heads, rel.head_dets)
                )
                for tail in sorted(tail_ids)
            )
        else:
            ok = all(
                heads_placed(hp, det, tail_ids)
                for hp, det in zip(rel.heads, rel.head_dets)
            )
        if not ok:
            return False
    return True
