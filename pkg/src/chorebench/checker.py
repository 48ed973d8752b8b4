"""Task completion checking and Progress Check report generation.

Semantics implemented here:

* Every component must have determiner-many instances satisfying all of its
  conditions; task-reference components are checked recursively with their
  determiner cascaded onto the sub-task's components ("a" multiplies as 1,
  instance_shareable components do not multiply).
* Relations are then checked over the satisfying objects of each component.
  Head determiners quantify how many satisfying head objects must sit in a
  legal tail; a tail determiner of "the" forces one tail object shared by
  every head object across all head entities, while "a" lets each head pick
  any tail.
* "all" over zero primary-condition candidates is unsatisfied, not vacuous.

Report shape mirrors the on-the-wire Progress Check response: one subgoal
per chosen candidate instance of each reportable (failure-describable)
component; step_successes lists precondition component flags first, then one
flag per failure-describable condition, then flags for any active relation.
Problem keys are emitted for failing conditions of chosen candidates and,
once every involved component is satisfied, for missing relation placements.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from .catalog import SLICE_SOURCE
from .errors import DefinitionError
from .hierarchy import ClassHierarchy
from .library import TaskLibrary
from .tdl import (
    AtomicComponent,
    Determiner,
    GroundTask,
    Relation,
    TaskRefComponent,
)
from .world import WorldState, matches_condition


def cascade_determiner(outer: Determiner, inner: Determiner, shareable: bool) -> Determiner:
    """Combine an outer (task-reference) determiner with an inner component's.

    Shareable components are preconditions whose required count never
    multiplies; "all" absorbs any outer count; otherwise counts multiply
    with "a" treated as 1.
    """
    if shareable:
        return inner
    if inner.kind == "all":
        return Determiner.ALL
    if outer.kind == "a":
        return inner
    if outer.kind == "all":
        raise DefinitionError("determiner 'all' cannot cascade over a task reference")
    n = outer.n * (inner.n if inner.kind == "count" else 1)
    return Determiner.count(n)


def _slice_source_types(h: ClassHierarchy, prop: str, desired) -> set[str]:
    """Object types that could become `desired` via slicing."""
    if prop == "objectType":
        targets = {str(desired)}
    elif prop == "objectClass":
        targets = set(h.expand(str(desired)))
    else:
        return set()
    return {SLICE_SOURCE[t] for t in targets if t in SLICE_SOURCE}


def find_candidates(world: WorldState, comp: AtomicComponent, h: ClassHierarchy) -> list[str]:
    """Objects matching the primary condition, plus slice sources for sliced
    targets, ordered lexicographically by object id."""
    prop = comp.primary_condition
    desired = comp.conditions[prop]
    out = set()
    sources = _slice_source_types(h, prop, desired)
    for obj in world.objects.values():
        if matches_condition(obj, prop, desired, h):
            out.add(obj.object_id)
        elif obj.object_type in sources:
            out.add(obj.object_id)
    return sorted(out)


@dataclass
class CompEval:
    key: str
    comp: object
    eff_det: Determiner
    precondition: bool
    satisfied: bool
    primary_cands: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    satisfying: list = field(default_factory=list)
    chosen: list = field(default_factory=list)
    sub: Optional["TaskEval"] = None
    anchor: Optional["CompEval"] = None  # terminal atomic comp (self if atomic)


@dataclass
class RelEval:
    relation: Relation
    head_keys: list
    head_dets: list
    tail_keys: list
    shared: bool
    active: bool
    satisfied: bool
    # placements still needed, only meaningful while active:
    missing: list = field(default_factory=list)  # (head_key, head_obj_id, tail_obj_id)
    valid_tails: list = field(default_factory=list)


@dataclass
class TaskEval:
    ground: GroundTask
    comps: dict
    rels: list
    satisfied: bool


@dataclass
class Binding:
    """Chosen satisfying objects per component key."""

    chosen: dict

    def for_key(self, key: str) -> list:
        return self.chosen.get(key, [])


def _condition_count(world, obj_id, comp: AtomicComponent, h) -> int:
    obj = world.objects[obj_id]
    return sum(
        1 for prop, want in comp.conditions.items() if matches_condition(obj, prop, want, h)
    )


def _eval_atomic(world, key, comp: AtomicComponent, eff: Determiner, h) -> CompEval:
    prop = comp.primary_condition
    desired = comp.conditions[prop]
    primary = sorted(
        o.object_id
        for o in world.objects.values()
        if matches_condition(o, prop, desired, h)
    )
    candidates = find_candidates(world, comp, h)
    satisfying = [
        oid
        for oid in primary
        if _condition_count(world, oid, comp, h) == len(comp.conditions)
    ]
    if eff.kind == "all":
        satisfied = bool(primary) and len(satisfying) == len(primary)
        chosen = list(primary)
    else:
        need = eff.required()
        satisfied = len(satisfying) >= need
        ranked = sorted(
            candidates, key=lambda oid: (-_condition_count(world, oid, comp, h), oid)
        )
        chosen = ranked[:need]
    ce = CompEval(
        key=key,
        comp=comp,
        eff_det=eff,
        precondition=not comp.condition_failure_descs,
        satisfied=satisfied,
        primary_cands=primary,
        candidates=candidates,
        satisfying=satisfying,
        chosen=chosen,
    )
    ce.anchor = ce
    return ce


def _resolve_anchor(sub: "TaskEval") -> Optional[CompEval]:
    anchor_key = sub.ground.definition.task_anchor_object
    if anchor_key is None:
        return None
    ce = sub.comps[anchor_key]
    return ce.anchor


def evaluate_task(
    world: WorldState,
    ground: GroundTask,
    lib: TaskLibrary,
    outer: Determiner = Determiner.A,
) -> TaskEval:
    h = lib.hierarchy
    comps: dict[str, CompEval] = {}
    for key, comp in ground.components.items():
        det = Determiner.parse(comp.determiner)
        if isinstance(comp, TaskRefComponent):
            eff = cascade_determiner(outer, det, False)
            sub_ground = lib.ground(comp.task_name, comp.task_params)
            sub = evaluate_task(world, sub_ground, lib, outer=eff)
            anchor = _resolve_anchor(sub)
            ce = CompEval(
                key=key,
                comp=comp,
                eff_det=eff,
                precondition=False,
                satisfied=sub.satisfied,
                satisfying=list(anchor.satisfying) if anchor else [],
                sub=sub,
                anchor=anchor,
            )
            comps[key] = ce
        else:
            eff = cascade_determiner(outer, det, comp.instance_shareable)
            comps[key] = _eval_atomic(world, key, comp, eff, h)
    rels = [
        _eval_relation(world, rel, comps, outer) for rel in ground.relations
    ]
    satisfied = all(c.satisfied for c in comps.values()) and all(
        r.satisfied for r in rels
    )
    return TaskEval(ground=ground, comps=comps, rels=rels, satisfied=satisfied)


def _head_need(det: Determiner, sat_heads: list) -> Optional[int]:
    """How many placed heads this determiner demands; None means 'all of them'."""
    if det.kind == "all":
        return None
    return det.required()


def _heads_ok(det: Determiner, sat_heads: list, placed: list) -> bool:
    if det.kind == "all":
        return bool(sat_heads) and len(placed) == len(sat_heads)
    return len(placed) >= det.required()


def _eval_relation(world, rel: Relation, comps: dict, outer: Determiner) -> RelEval:
    head_dets = [
        cascade_determiner(outer, Determiner.parse(d), False)
        for d in rel.head_determiner_list
    ]
    tail_dets = [Determiner.parse(d, tail=True) for d in rel.tail_determiner_list]
    shared = any(d.kind == "the" for d in tail_dets)
    involved = list(rel.head_entity_list) + list(rel.tail_entity_list)
    for key in involved:
        if comps[key].anchor is None:
            raise DefinitionError(
                f"component {key!r} has no anchor object and cannot appear in a relation"
            )
    active = all(comps[key].satisfied for key in involved)
    valid_tails = sorted(
        {oid for key in rel.tail_entity_list for oid in comps[key].anchor.satisfying}
    )
    head_sets = [comps[key].anchor.satisfying for key in rel.head_entity_list]

    def placed_in(heads, tails):
        tails = set(tails)
        return [oid for oid in heads if world.objects[oid].parent in tails]

    missing: list = []
    if shared:
        satisfied = False
        best_tail = None
        best_placed = -1
        for tail in valid_tails:
            placed_lists = [placed_in(heads, [tail]) for heads in head_sets]
            if all(
                _heads_ok(det, heads, placed)
                for det, heads, placed in zip(head_dets, head_sets, placed_lists)
            ):
                satisfied = True
                best_tail = tail
                break
            total = sum(len(p) for p in placed_lists)
            if total > best_placed:
                best_placed = total
                best_tail = tail
        if not satisfied and best_tail is not None:
            for key, det, heads in zip(rel.head_entity_list, head_dets, head_sets):
                placed = placed_in(heads, [best_tail])
                unplaced = [oid for oid in heads if oid not in placed]
                need = _head_need(det, heads)
                wanted = len(unplaced) if need is None else max(0, need - len(placed))
                for oid in unplaced[:wanted]:
                    missing.append((key, oid, best_tail))
    else:
        ok = True
        for key, det, heads in zip(rel.head_entity_list, head_dets, head_sets):
            placed = placed_in(heads, valid_tails)
            if not _heads_ok(det, heads, placed):
                ok = False
                unplaced = [oid for oid in heads if oid not in placed]
                need = _head_need(det, heads)
                wanted = len(unplaced) if need is None else max(0, need - len(placed))
                for oid in unplaced[:wanted]:
                    tail = _pick_tail(world, valid_tails, oid)
                    if tail is not None:
                        missing.append((key, oid, tail))
        satisfied = ok
    return RelEval(
        relation=rel,
        head_keys=list(rel.head_entity_list),
        head_dets=head_dets,
        tail_keys=list(rel.tail_entity_list),
        shared=shared,
        active=active,
        satisfied=satisfied,
        missing=missing,
        valid_tails=valid_tails,
    )


def _pick_tail(world, valid_tails, head_oid):
    """Lexicographically smallest tail that is not the head or inside it."""
    for tail in valid_tails:
        if tail == head_oid:
            continue
        if any(a.object_id == head_oid for a in world.ancestors(tail)):
            continue
        return tail
    return None


def check_relation(world: WorldState, rel: Relation, bindings: Binding, lib: TaskLibrary):
    """Check a single relation over an explicit binding of component keys to
    satisfying object sets. Returns (flag, failure_steps)."""
    comps = {}
    for key in list(rel.head_entity_list) + list(rel.tail_entity_list):
        ce = CompEval(
            key=key,
            comp=None,
            eff_det=Determiner.A,
            precondition=False,
            satisfied=True,
            satisfying=list(bindings.for_key(key)),
        )
        ce.anchor = ce
        comps[key] = ce
    ev = _eval_relation(world, rel, comps, Determiner.A)
    steps = []
    if not ev.satisfied:
        for key, oid, tail in ev.missing or [(rel.head_entity_list[0], None, None)]:
            obj = world.objects.get(oid) if oid else None
            steps.append(
                {
                    "success": 0,
                    "objectId": oid,
                    "objectType": obj.object_type if obj else None,
                    "desc": rel.failure_desc,
                }
            )
    return ev.satisfied, steps


# ---------------------------------------------------------------- reporting


@dataclass
class ProgressReport:
    """Progress Check response record plus typed accessors."""

    data: dict

    @property
    def success(self) -> int:
        return self.data["success"]

    @property
    def subgoals(self) -> list:
        return self.data["subgoals"]

    def to_dict(self) -> dict:
        return self.data

    def to_json(self) -> str:
        return json.dumps(self.data, indent=4, ensure_ascii=False)

    def iter_problem_keys(self):
        """Yield (object_id, key_record) pairs in report order."""
        for subgoal in self.data["subgoals"]:
            for object_id, keys in subgoal["problem_keys"].items():
                for key in keys:
                    yield object_id, key


def _collect_preconditions(ev: TaskEval) -> list:
    """Precondition comp evals of this task level, definition order."""
    return [ce for ce in ev.comps.values() if ce.precondition]


class _SubgoalBuilder:
    def __init__(self, world, h):
        self.world = world
        self.h = h
        self.subgoals = []
        # comp identity -> list of subgoal indices holding its instances
        self.instance_slot: dict = {}
        self.comp_slots: dict = {}

    def add(self, ce: CompEval, description: str, level_pre: list):
        anchor = ce.anchor
        instances = anchor.chosen if (anchor and anchor.chosen) else [None]
        for inst in instances:
            sg = {
                "representative_obj_id": inst,
                "step_successes": [],
                "success": 1 if ce.satisfied else 0,
                "description": description,
                "steps": [],
                "problem_keys": {},
            }
            idx = len(self.subgoals)
            self.subgoals.append(sg)
            if inst is not None:
                self.instance_slot[inst] = idx
            self.comp_slots.setdefault(id(ce), []).append(idx)
            for pre in level_pre:
                sg["step_successes"].append(1 if pre.satisfied else 0)
                self._emit_condition_keys(sg, pre)
            self._fill(sg, ce, inst)

    def _fill(self, sg, ce: CompEval, inst):
        if ce.sub is not None:
            sub = ce.sub
            for pre in _collect_preconditions(sub):
                sg["step_successes"].append(1 if pre.satisfied else 0)
                self._emit_condition_keys(sg, pre)
            for sub_ce in sub.comps.values():
                if sub_ce.precondition:
                    continue
                self._fill(sg, sub_ce, inst if sub_ce.anchor is ce.anchor else None)
            for rel_ev in sub.rels:
                self._emit_relation(sg, rel_ev, sub)
            return
        comp: AtomicComponent = ce.comp
        targets = [inst] if (inst is not None and ce.anchor is ce) else ce.chosen or [None]
        for target in targets:
            obj = self.world.objects.get(target) if target else None
            for prop, desc in comp.condition_failure_descs.items():
                want = comp.conditions[prop]
                ok = bool(obj) and matches_condition(obj, prop, want, self.h)
                sg["step_successes"].append(1 if ok else 0)
                sg["steps"].append(
                    {
                        "success": 1 if ok else 0,
                        "objectId": target,
                        "objectType": obj.object_type if obj else None,
                        "desc": desc,
                    }
                )
            if obj is not None:
                self._emit_keys_for(sg, ce, target)

    def _emit_condition_keys(self, sg, ce: CompEval):
        for target in ce.chosen:
            if target in self.world.objects:
                self._emit_keys_for(sg, ce, target)

    def _emit_keys_for(self, sg, ce: CompEval, object_id: str):
        comp: AtomicComponent = ce.comp
        obj = self.world.objects[object_id]
        keys = []
        for prop, want in comp.conditions.items():
            if not matches_condition(obj, prop, want, self.h):
                keys.append(
                    {
                        "objectType": obj.object_type,
                        "determiner": ce.eff_det.render(),
                        "property_name": prop,
                        "desired_property_value": want,
                    }
                )
        if keys:
            sg["problem_keys"].setdefault(object_id, []).extend(keys)

    def _emit_relation(self, sg_default, rel_ev: RelEval, ev: TaskEval):
        if not rel_ev.active:
            return
        rel = rel_ev.relation
        first_head = rel.head_entity_list[0]
        if rel_ev.satisfied:
            sg_default["step_successes"].append(1)
            rep = ev.comps[first_head].anchor
            rep_id = rep.chosen[0] if rep and rep.chosen else None
            sg_default["steps"].append(
                {
                    "success": 1,
                    "objectId": rep_id,
                    "objectType": self.world.objects[rep_id].object_type if rep_id else None,
                    "desc": rel.failure_desc,
                }
            )
            return
        for key, head_oid, tail_oid in rel_ev.missing:
            slot = self.instance_slot.get(head_oid)
            if slot is None:
                slots = self.comp_slots.get(id(ev.comps[key]), [])
                slot = slots[0] if slots else None
            sg = self.subgoals[slot] if slot is not None else sg_default
            head = self.world.objects[head_oid]
            det = rel_ev.head_dets[rel_ev.head_keys.index(key)]
            sg["step_successes"].append(0)
            sg["steps"].append(
                {
                    "success": 0,
                    "objectId": head_oid,
                    "objectType": head.object_type,
                    "desc": rel.failure_desc,
                }
            )
            sg["problem_keys"].setdefault(head_oid, []).append(
                {
                    "objectType": head.object_type,
                    "determiner": det.render(),
                    "property_name": rel.property,
                    "desired_property_value": tail_oid,
                }
            )


def check_task(world: WorldState, ground: GroundTask, lib: TaskLibrary) -> ProgressReport:
    """Evaluate a fully substituted task and build its Progress Check report.

    Deterministic: equal worlds produce byte-identical reports.
    """
    ev = evaluate_task(world, ground, lib)
    builder = _SubgoalBuilder(world, lib.hierarchy)
    level_pre = _collect_preconditions(ev)
    for ce in ev.comps.values():
        if ce.precondition:
            continue
        if ce.sub is not None:
            description = ce.sub.ground.desc
        else:
            description = ground.desc
        builder.add(ce, description, level_pre)
    # subgoal for preconditions only if nothing else exists (degenerate tasks)
    if not builder.subgoals:
        builder.subgoals.append(
            {
                "representative_obj_id": None,
                "step_successes": [1 if p.satisfied else 0 for p in level_pre],
                "success": 1 if ev.satisfied else 0,
                "description": ground.desc,
                "steps": [],
                "problem_keys": {},
            }
        )
    for rel_ev in ev.rels:
        first_head = rel_ev.relation.head_entity_list[0]
        slots = builder.comp_slots.get(id(ev.comps[first_head]), [])
        sg_default = builder.subgoals[slots[0]] if slots else builder.subgoals[0]
        builder._emit_relation(sg_default, rel_ev, ev)
    data = {
        "task_desc": ground.desc,
        "success": 1 if ev.satisfied else 0,
        "subgoals": builder.subgoals,
    }
    return ProgressReport(data)
