import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chorebench.errors import LibraryError, TdlError
from chorebench.library import (
    BENCHMARK_TASKS,
    default_hierarchy,
    load_library,
    shipped_library,
    shipped_task_sources,
)
from chorebench.tdl import (
    Determiner,
    parse_task_definition,
    render_desc,
    serialize_task_definition,
    substitute_params,
)

MINIMAL = """
{
  "task_id": 1,
  "task_name": "Minimal",
  "task_nparams": 0,
  "task_anchor_object": "thing",
  "desc": "Do the thing.",
  "components": {
    "thing": {
      "determiner": "a",
      "primary_condition": "objectType",
      "instance_shareable": false,
      "conditions": {"objectType": "Mug"},
      "condition_failure_descs": {}
    }
  },
  "relations": []
}
"""


def test_shipped_sources_parse_and_roundtrip():
    for name, text in shipped_task_sources():
        td = parse_task_definition(text, source=name)
        again = parse_task_definition(serialize_task_definition(td), source=name)
        assert again == td


def test_plate_of_toast_structure(lib):
    td = lib.get("Plate Of Toast")
    assert td.task_name == "Plate Of Toast"
    assert len(td.components) == 2
    toast = td.components["toast"]
    plate = td.components["plate"]
    assert toast.task_name == "Toast" and toast.task_params == ()
    assert plate.task_name == "Clean X" and plate.task_params == ("Plate",)
    assert len(td.relations) == 1
    assert td.relations[0].property == "parentReceptacles"


def test_minimal_task():
    td = parse_task_definition(MINIMAL)
    assert td.task_anchor_object == "thing"
    assert td.relations == ()


def test_put_all_x_on_y_desc(lib):
    td = lib.get("Put All X On Y")
    assert td.task_nparams == 3
    assert td.desc == "Put all #0 #1 any #2."


@pytest.mark.parametrize(
    "bad,needle",
    [
        (MINIMAL.replace('"a"', '"some"'), "determiner"),
        (MINIMAL.replace('"objectType": "Mug"', '"objectClass": "Mug"'), "primary_condition"),
        (MINIMAL.replace('"task_id": 1,', ""), "missing required"),
        (MINIMAL.replace("{", "", 1), "syntax error"),
        (MINIMAL.replace('"task_id": 1,', '"task_id": 1, "extra": true,'), "unknown field"),
    ],
)
def test_parse_errors(bad, needle):
    with pytest.raises(TdlError) as err:
        parse_task_definition(bad)
    assert needle in str(err.value)


def test_syntax_error_reports_position():
    with pytest.raises(TdlError) as err:
        parse_task_definition('{\n  "task_id": }')
    assert err.value.line == 2


def test_lenient_mode_allows_extras():
    extra = MINIMAL.replace('"task_id": 1,', '"task_id": 1, "note": "hi",')
    with pytest.raises(TdlError):
        parse_task_definition(extra)
    td = parse_task_definition(extra, lenient=True)
    assert td.task_name == "Minimal"


def test_the_rejected_as_component_determiner():
    with pytest.raises(TdlError):
        parse_task_definition(MINIMAL.replace('"determiner": "a"', '"determiner": "the"'))


def test_param_slot_out_of_range():
    bad = MINIMAL.replace("Do the thing.", "Do the #2 thing.")
    with pytest.raises(TdlError) as err:
        parse_task_definition(bad)
    assert "#2" in str(err.value)


def test_duplicate_component_keys_rejected():
    dup = MINIMAL.replace(
        '"relations": []',
        '"relations": []',
    ).replace(
        '"components": {',
        '"components": { "thing": {"determiner": "a", "primary_condition": "objectType", "instance_shareable": true, "conditions": {"objectType": "Cup"}, "condition_failure_descs": {}},',
    )
    with pytest.raises(TdlError) as err:
        parse_task_definition(dup)
    assert "duplicate" in str(err.value)


# ------------------------------------------------------------ substitution


def test_substitute_clean_x(lib):
    ground = lib.ground("Clean X", ["Plate"])
    comp = ground.components["Plate"]
    assert comp.conditions == {"objectClass": "Plate", "isDirty": 0}
    assert ground.desc == "Clean a Plate."
    assert ground.definition.task_anchor_object == "Plate"


def test_substitute_identity_on_zero_params(lib):
    td = lib.get("Toast")
    ground = substitute_params(td, [])
    assert ground.definition == td


def test_substitute_put_all(lib):
    ground = lib.ground("Put All X On Y", ["Fork", "in", "Sink"])
    assert ground.desc == "Put all Fork in any Sink."
    assert ground.relations[0].failure_desc == "The Fork needs to be put into a Sink"


def test_substitute_arity_error(lib):
    with pytest.raises(TdlError):
        substitute_params(lib.get("Clean X"), ["Plate", "Bowl"])


def test_substitute_idempotent(lib):
    td = lib.get("Clean X")
    once = substitute_params(td, ["Plate"])
    twice = substitute_params(once.definition, ["Plate"])
    assert once.definition == twice.definition


def test_substitute_in_determiner_position(lib):
    ground = lib.ground("N Slices Of X In Y", ["2", "Tomato", "Bowl"])
    comp = ground.components["slices"]
    assert Determiner.parse(comp.determiner) == Determiner.count(2)


# ------------------------------------------------------------- render_desc


def test_render_desc_examples(lib):
    assert render_desc(lib.ground("Plate Of Toast")) == "Make a plate of toast."
    assert render_desc(lib.ground("Toast")) == "Make a slice of toast."
    assert (
        render_desc(lib.ground("Put All X In One Y", ["TissueBox", "on", "SideTable"]))
        == "Put all TissueBox on one SideTable."
    )


# ----------------------------------------------------------------- library


def test_shipped_library_covers_benchmark_tasks(lib):
    for name in BENCHMARK_TASKS:
        assert name in lib.tasks


def test_library_order_independent():
    h = default_hierarchy()
    sources = shipped_task_sources()
    a = load_library(sources, h)
    b = load_library(list(reversed(sources)), h)
    assert a == b


def test_library_missing_target_error():
    h = default_hierarchy()
    sources = [(n, t) for n, t in shipped_task_sources() if n != "clean_x.task"]
    with pytest.raises(LibraryError) as err:
        load_library(sources, h)
    assert "Clean X" in str(err.value)


def test_library_duplicate_name_error():
    h = default_hierarchy()
    with pytest.raises(LibraryError) as err:
        load_library([("a", MINIMAL), ("b", MINIMAL)], h)
    assert "duplicate" in str(err.value)


def test_library_cycle_error():
    h = default_hierarchy()
    a = json.loads(MINIMAL)
    a["task_name"] = "A"
    a["components"] = {"x": {"determiner": "a", "task_name": "B", "task_params": []}}
    a["task_anchor_object"] = None
    b = dict(a)
    b = json.loads(json.dumps(a))
    b["task_name"] = "B"
    b["components"] = {"x": {"determiner": "a", "task_name": "A", "task_params": []}}
    with pytest.raises(LibraryError) as err:
        load_library([("a", json.dumps(a)), ("b", json.dumps(b))], h)
    assert "cycle" in str(err.value)
    assert "A" in str(err.value) and "B" in str(err.value)


def test_library_arity_error():
    h = default_hierarchy()
    a = json.loads(MINIMAL)
    a["components"] = {"x": {"determiner": "a", "task_name": "Clean X", "task_params": []}}
    a["task_anchor_object"] = None
    sources = shipped_task_sources() + [("bad", json.dumps(a))]
    with pytest.raises(LibraryError) as err:
        load_library(sources, h)
    assert "parameter" in str(err.value)


def test_no_dead_parameters():
    import re

    for name, text in shipped_task_sources():
        td = parse_task_definition(text, source=name)
        if td.task_nparams == 0:
            continue
        used = {int(m) for m in re.findall(r"#(\d+)", text)}
        assert used == set(range(td.task_nparams)), f"{name}: dead parameter slots"


# ------------------------------------------------------------- fuzz parse

_names = st.sampled_from(["Mug", "Plate", "Fork", "BreadSliced", "Sink"])


@st.composite
def _definitions(draw):
    n_comps = draw(st.integers(1, 3))
    comps = {}
    for i in range(n_comps):
        conds = {"objectType": draw(_names)}
        if draw(st.booleans()):
            conds["isDirty"] = draw(st.sampled_from([0, 1]))
        descs = {}
        if "isDirty" in conds and draw(st.booleans()):
            descs["isDirty"] = "needs a rinse"
        comps[f"c{i}"] = {
            "determiner": draw(st.sampled_from(["a", "all", "2", 3])),
            "primary_condition": "objectType",
            "instance_shareable": draw(st.booleans()),
            "conditions": conds,
            "condition_failure_descs": descs,
        }
    keys = list(comps)
    relations = []
    if len(keys) >= 2 and draw(st.booleans()):
        relations.append(
            {
                "property": "parentReceptacles",
                "tail_entity_list": [keys[0]],
                "tail_determiner_list": [draw(st.sampled_from(["a", "the"]))],
                "head_entity_list": [keys[1]],
                "head_determiner_list": [draw(st.sampled_from(["a", "all", "2"]))],
                "failure_desc": "move it",
            }
        )
    return {
        "task_id": draw(st.integers(0, 999)),
        "task_name": "Fuzzed",
        "task_nparams": 0,
        "task_anchor_object": draw(st.sampled_from([None, keys[0]])),
        "desc": "A fuzzed task.",
        "components": comps,
        "relations": relations,
    }


@given(_definitions())
@settings(max_examples=60, deadline=None)
def test_roundtrip_fuzzed_definitions(record):
    td = parse_task_definition(json.dumps(record))
    assert parse_task_definition(serialize_task_definition(td)) == td
