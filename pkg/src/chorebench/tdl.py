"""Task definition language: parsing, validation, parameter substitution.

A task is a JSON record with components (condition sets or references to
other tasks), relations between components, and "#k" parameter slots that
are resolved by plain text replacement before any semantic processing.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import TdlError

PARAM_RE = re.compile(r"#(\d+)")

TASK_FIELDS = (
    "task_id",
    "task_name",
    "task_nparams",
    "task_anchor_object",
    "desc",
    "components",
    "relations",
)
ATOMIC_FIELDS = (
    "determiner",
    "primary_condition",
    "instance_shareable",
    "conditions",
    "condition_failure_descs",
)
TASKREF_FIELDS = ("determiner", "task_name", "task_params")
RELATION_FIELDS = (
    "property",
    "head_entity_list",
    "head_determiner_list",
    "tail_entity_list",
    "tail_determiner_list",
    "failure_desc",
)


@dataclass(frozen=True)
class Determiner:
    """Cardinality qualifier: a | all | the | count(n)."""

    kind: str
    n: int = 1

    A = None  # filled in below
    ALL = None
    THE = None

    @classmethod
    def count(cls, n: int) -> "Determiner":
        if n < 1:
            raise ValueError("count determiner requires n >= 1")
        return cls("count", n)

    @classmethod
    def parse(cls, raw, tail: bool = False) -> "Determiner":
        """Parse a determiner token. Tail positions allow a/the only."""
        if isinstance(raw, bool):
            raise TdlError(f"unknown determiner token: {raw!r}")
        if isinstance(raw, int):
            return cls.count(raw)
        if isinstance(raw, str):
            if raw == "a":
                return cls.A
            if tail and raw == "the":
                return cls.THE
            if not tail and raw == "all":
                return cls.ALL
            if not tail and raw.isdigit() and int(raw) >= 1:
                return cls.count(int(raw))
        raise TdlError(f"unknown determiner token: {raw!r}")

    def required(self) -> int:
        """Minimum satisfying-instance count; 'all' has no fixed number."""
        if self.kind == "count":
            return self.n
        if self.kind == "a":
            return 1
        raise ValueError(f"determiner {self.kind!r} has no fixed count")

    def render(self) -> str:
        return str(self.n) if self.kind == "count" else self.kind


Determiner.A = Determiner("a")
Determiner.ALL = Determiner("all")
Determiner.THE = Determiner("the")


def _is_slot(raw) -> bool:
    return isinstance(raw, str) and PARAM_RE.fullmatch(raw) is not None


def _check_determiner_token(raw, tail: bool, where: str):
    if _is_slot(raw):
        return
    try:
        Determiner.parse(raw, tail=tail)
    except TdlError:
        raise TdlError(f"unknown determiner token {raw!r} in {where}") from None


@dataclass(frozen=True)
class AtomicComponent:
    determiner: Union[str, int]
    primary_condition: str
    instance_shareable: bool
    conditions: dict
    condition_failure_descs: dict

    def to_record(self) -> dict:
        return {
            "determiner": self.determiner,
            "primary_condition": self.primary_condition,
            "instance_shareable": self.instance_shareable,
            "conditions": dict(self.conditions),
            "condition_failure_descs": dict(self.condition_failure_descs),
        }

    def __eq__(self, other):
        return (
            isinstance(other, AtomicComponent)
            and self.to_record() == other.to_record()
        )

    def __hash__(self):
        return hash(json.dumps(self.to_record(), sort_keys=True))


@dataclass(frozen=True)
class TaskRefComponent:
    determiner: Union[str, int]
    task_name: str
    task_params: tuple

    def to_record(self) -> dict:
        return {
            "determiner": self.determiner,
            "task_name": self.task_name,
            "task_params": list(self.task_params),
        }


Component = Union[AtomicComponent, TaskRefComponent]


@dataclass(frozen=True)
class Relation:
    property: str
    head_entity_list: tuple
    head_determiner_list: tuple
    tail_entity_list: tuple
    tail_determiner_list: tuple
    failure_desc: str

    def to_record(self) -> dict:
        return {
            "property": self.property,
            "tail_entity_list": list(self.tail_entity_list),
            "tail_determiner_list": list(self.tail_determiner_list),
            "head_entity_list": list(self.head_entity_list),
            "head_determiner_list": list(self.head_determiner_list),
            "failure_desc": self.failure_desc,
        }


@dataclass(frozen=True)
class TaskDefinition:
    task_id: int
    task_name: str
    task_nparams: int
    task_anchor_object: Optional[str]
    desc: str
    components: dict
    relations: tuple

    def to_record(self) -> dict:
        return {
            "task_id": self.task_id,
            "task_name": self.task_name,
            "task_nparams": self.task_nparams,
            "task_anchor_object": self.task_anchor_object,
            "desc": self.desc,
            "components": {k: c.to_record() for k, c in self.components.items()},
            "relations": [r.to_record() for r in self.relations],
        }

    def __eq__(self, other):
        return isinstance(other, TaskDefinition) and self.to_record() == other.to_record()

    def __hash__(self):
        return hash(serialize_task_definition(self))


@dataclass(frozen=True)
class GroundTask:
    """A TaskDefinition with every #k slot replaced by a concrete string."""

    definition: TaskDefinition
    source_task_name: str
    params: tuple

    @property
    def desc(self) -> str:
        return self.definition.desc

    @property
    def components(self) -> dict:
        return self.definition.components

    @property
    def relations(self) -> tuple:
        return self.definition.relations


def _reject_duplicate_keys(pairs):
    d = {}
    for key, value in pairs:
        if key in d:
            raise ValueError(f"duplicate key: {key!r}")
        d[key] = value
    return d


def _check_fields(record: dict, allowed, required, what: str, lenient: bool):
    missing = [f for f in required if f not in record]
    if missing:
        raise TdlError(f"{what}: missing required field(s) {', '.join(missing)}")
    if not lenient:
        extras = [f for f in record if f not in allowed]
        if extras:
            raise TdlError(f"{what}: unknown field(s) {', '.join(extras)}")


def _parse_component(key: str, record, lenient: bool) -> Component:
    if not isinstance(record, dict):
        raise TdlError(f"component {key!r}: expected an object")
    is_ref = "task_name" in record
    is_atomic = "conditions" in record
    if is_ref and is_atomic:
        raise TdlError(f"component {key!r}: has both task_name and conditions")
    if not is_ref and not is_atomic:
        raise TdlError(f"component {key!r}: needs task_name or conditions")
    if is_ref:
        _check_fields(record, TASKREF_FIELDS, TASKREF_FIELDS, f"component {key!r}", lenient)
        _check_determiner_token(record["determiner"], False, f"component {key!r}")
        params = record["task_params"]
        if not isinstance(params, list) or not all(isinstance(p, (str, int)) for p in params):
            raise TdlError(f"component {key!r}: task_params must be a list of strings")
        return TaskRefComponent(
            determiner=record["determiner"],
            task_name=record["task_name"],
            task_params=tuple(str(p) for p in params),
        )
    _check_fields(record, ATOMIC_FIELDS, ATOMIC_FIELDS, f"component {key!r}", lenient)
    _check_determiner_token(record["determiner"], False, f"component {key!r}")
    conditions = record["conditions"]
    descs = record["condition_failure_descs"]
    if not isinstance(conditions, dict) or not conditions:
        raise TdlError(f"component {key!r}: conditions must be a non-empty object")
    if not isinstance(descs, dict):
        raise TdlError(f"component {key!r}: condition_failure_descs must be an object")
    primary = record["primary_condition"]
    if primary not in conditions:
        raise TdlError(
            f"component {key!r}: primary_condition {primary!r} not among conditions"
        )
    for prop in descs:
        if prop not in conditions:
            raise TdlError(
                f"component {key!r}: failure desc for {prop!r} which is not a condition"
            )
    if not isinstance(record["instance_shareable"], bool):
        raise TdlError(f"component {key!r}: instance_shareable must be true/false")
    return AtomicComponent(
        determiner=record["determiner"],
        primary_condition=primary,
        instance_shareable=record["instance_shareable"],
        conditions=dict(conditions),
        condition_failure_descs=dict(descs),
    )


def _parse_relation(i: int, record, component_keys, lenient: bool) -> Relation:
    what = f"relation {i}"
    if not isinstance(record, dict):
        raise TdlError(f"{what}: expected an object")
    _check_fields(record, RELATION_FIELDS, RELATION_FIELDS, what, lenient)
    heads = record["head_entity_list"]
    tails = record["tail_entity_list"]
    head_dets = record["head_determiner_list"]
    tail_dets = record["tail_determiner_list"]
    for name, val in (
        ("head_entity_list", heads),
        ("tail_entity_list", tails),
        ("head_determiner_list", head_dets),
        ("tail_determiner_list", tail_dets),
    ):
        if not isinstance(val, list) or not val:
            raise TdlError(f"{what}: {name} must be a non-empty list")
    if len(head_dets) != len(heads) or len(tail_dets) != len(tails):
        raise TdlError(f"{what}: determiner list lengths must match entity lists")
    for key in list(heads) + list(tails):
        if key not in component_keys:
            raise TdlError(f"{what}: unknown component key {key!r}")
    for det in head_dets:
        _check_determiner_token(det, False, what)
    for det in tail_dets:
        _check_determiner_token(det, True, what)
    return Relation(
        property=record["property"],
        head_entity_list=tuple(heads),
        head_determiner_list=tuple(head_dets),
        tail_entity_list=tuple(tails),
        tail_determiner_list=tuple(tail_dets),
        failure_desc=record["failure_desc"],
    )


def _validate_param_slots(definition: TaskDefinition):
    blob = serialize_task_definition(definition)
    for match in PARAM_RE.finditer(blob):
        k = int(match.group(1))
        if k >= definition.task_nparams:
            raise TdlError(
                f"{definition.task_name}: parameter slot #{k} out of range "
                f"(task_nparams={definition.task_nparams})"
            )


def parse_task_record(record: dict, source: str = "<record>", lenient: bool = False) -> TaskDefinition:
    _check_fields(record, TASK_FIELDS, TASK_FIELDS, f"task in {source}", lenient)
    name = record["task_name"]
    if not isinstance(name, str) or not name:
        raise TdlError(f"{source}: task_name must be a non-empty string")
    if not isinstance(record["task_id"], int):
        raise TdlError(f"{name}: task_id must be an integer")
    nparams = record["task_nparams"]
    if not isinstance(nparams, int) or nparams < 0:
        raise TdlError(f"{name}: task_nparams must be a non-negative integer")
    components_rec = record["components"]
    if not isinstance(components_rec, dict) or not components_rec:
        raise TdlError(f"{name}: components must be a non-empty object")
    components = {
        key: _parse_component(key, comp, lenient) for key, comp in components_rec.items()
    }
    anchor = record["task_anchor_object"]
    if anchor is not None and anchor not in components:
        raise TdlError(f"{name}: task_anchor_object {anchor!r} is not a component key")
    relations_rec = record["relations"]
    if not isinstance(relations_rec, list):
        raise TdlError(f"{name}: relations must be a list")
    relations = tuple(
        _parse_relation(i, rel, set(components), lenient)
        for i, rel in enumerate(relations_rec)
    )
    definition = TaskDefinition(
        task_id=record["task_id"],
        task_name=name,
        task_nparams=nparams,
        task_anchor_object=anchor,
        desc=record["desc"],
        components=components,
        relations=relations,
    )
    _validate_param_slots(definition)
    return definition


def parse_task_definition(text: str, source: str = "<string>", lenient: bool = False) -> TaskDefinition:
    """Parse one task definition from its JSON source text."""
    try:
        record = json.loads(text, object_pairs_hook=_reject_duplicate_keys)
    except ValueError as exc:
        line = getattr(exc, "lineno", None)
        col = getattr(exc, "colno", None)
        raise TdlError(f"syntax error: {exc}", source=source, line=line, col=col) from None
    if not isinstance(record, dict):
        raise TdlError("task definition must be a JSON object", source=source)
    return parse_task_record(record, source=source, lenient=lenient)


def serialize_task_definition(definition: TaskDefinition) -> str:
    return json.dumps(definition.to_record(), indent=2, ensure_ascii=False) + "\n"


def _substitute_value(value, params):
    if isinstance(value, str):
        return PARAM_RE.sub(lambda m: str(params[int(m.group(1))]), value)
    if isinstance(value, dict):
        return {
            _substitute_value(k, params): _substitute_value(v, params)
            for k, v in value.items()
        }
    if isinstance(value, list):
        return [_substitute_value(v, params) for v in value]
    return value


def substitute_params(definition: TaskDefinition, params: list[str]) -> GroundTask:
    """Replace every #k slot with params[k] by plain text substitution."""
    if len(params) != definition.task_nparams:
        raise TdlError(
            f"{definition.task_name}: expected {definition.task_nparams} parameter(s), "
            f"got {len(params)}"
        )
    record = _substitute_value(definition.to_record(), [str(p) for p in params])
    ground_def = parse_task_record(record, source=f"{definition.task_name}{list(params)}")
    leftover = PARAM_RE.search(serialize_task_definition(ground_def))
    if leftover:
        raise TdlError(
            f"{definition.task_name}: substitution left parameter slot {leftover.group(0)}"
        )
    return GroundTask(
        definition=ground_def,
        source_task_name=definition.task_name,
        params=tuple(str(p) for p in params),
    )


def render_desc(ground: GroundTask) -> str:
    """Human-readable prompt for a fully substituted task."""
    return ground.definition.desc
