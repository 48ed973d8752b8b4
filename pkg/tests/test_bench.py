import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chorebench.actions import (
    Interact,
    Motion,
    ObjectSelector,
    Stop,
    Utterance,
    is_interaction,
)
from chorebench.agents import run_tatc_episode
from chorebench.bench import (
    EdhInstance,
    InferenceLimits,
    OracleReplayAgent,
    ScriptedAgent,
    TfdInstance,
    aggregate,
    extract_tfd,
    make_splits,
    assign_floorplans,
    run_inference,
    score,
    segment_edh,
    session_stats,
    trajectory_length_weighted,
)
from chorebench.bench.metrics import EvalOutcome
from chorebench.errors import ChoreBenchError, ProtocolViolation
from chorebench.scenario import generate_scenario, pick_variant
from chorebench.session import ActionRecord, Session, SessionRecorder
from chorebench.sim import project
from chorebench.world import make_object
from conftest import build_world


@pytest.fixture(scope="module")
def coffee_session(lib, plans):
    ground, plan = pick_variant("Make Coffee", plans, 21, lib)
    scenario = generate_scenario(ground, plan, 21, lib)
    session, success = run_tatc_episode(scenario, plan, lib)
    assert success
    return session, plan


# ------------------------------------------------------------ segmentation


def _hand_built_session(lib, plans):
    """D I I D I with task-relevant deltas in both windows."""
    plan = plans["kitchen_1"]
    sink = make_object("Sink", cell=(1, 0), object_id="Sink|s")
    counter = make_object("CounterTop", cell=(1, 2), object_id="CounterTop|c")
    f1 = make_object("Fork", object_id="Fork|1")
    f2 = make_object("Fork", object_id="Fork|2")
    for fork in (f1, f2):
        fork.properties["parentReceptacles"] = counter.object_id
        fork.cell = None
    world = build_world(
        [sink, counter, f1, f2],
        floorplan_id=plan.floorplan_id,
        follower=(1, 3),
        heading="N",
    )
    from chorebench.scenario import Scenario

    scenario = Scenario(plan.floorplan_id, "Put All X On Y", ("Fork", "in", "Sink"), 0, world)
    recorder = SessionRecorder("handmade", scenario)

    def coord(target):
        return ObjectSelector(coord=project(recorder.world, recorder.world.follower, target))

    recorder.record_utterance("commander", "put the forks in the sink")           # D
    recorder.record_step(plan, "follower", Interact("Pickup", coord("Fork|1")), lib)   # I
    recorder.record_step(plan, "follower", Motion("Forward"), lib)
    recorder.record_step(plan, "follower", Interact("Place", coord("Sink|s")), lib)    # I
    recorder.record_utterance("commander", "one more")                            # D
    recorder.record_step(plan, "follower", Motion("Backward"), lib)
    recorder.record_step(plan, "follower", Interact("Pickup", coord("Fork|2")), lib)   # I
    session = recorder.finish()
    assert all(r.success for r in session.actions), [r.error for r in session.actions]
    return session, plan


def test_hand_built_partition(lib, plans):
    session, plan = _hand_built_session(lib, plans)
    instances = segment_edh(session, plan, lib)
    assert len(instances) == 2
    first, second = instances
    # first instance's history is dialogue only
    assert all(not is_interaction(r.action) for r in first.history)
    assert len([a for a in first.reference_actions if is_interaction(a)]) == 2
    assert len([a for a in second.reference_actions if is_interaction(a)]) == 1
    # concatenated references cover every interaction exactly once
    total = [a for inst in instances for a in inst.reference_actions if is_interaction(a)]
    session_interactions = [
        r.action for r in session.actions if r.agent == "follower" and is_interaction(r.action)
    ]
    assert len(total) == len(session_interactions)


def test_zero_interaction_session_yields_nothing(lib, plans):
    plan = plans["kitchen_1"]
    from chorebench.scenario import Scenario

    counter = make_object("CounterTop", cell=(3, 3))
    mug = make_object("Mug", isDirty=1)
    mug.properties["parentReceptacles"] = counter.object_id
    mug.cell = None
    world = build_world([counter, mug], floorplan_id=plan.floorplan_id)
    scenario = Scenario(plan.floorplan_id, "Make Coffee", (), 0, world)
    recorder = SessionRecorder("lazy", scenario)
    recorder.record_utterance("commander", "think about it")
    recorder.record_step(plan, "follower", Motion("TurnLeft"), lib)
    recorder.record_step(plan, "follower", Motion("TurnRight"), lib)
    session = recorder.finish()
    assert segment_edh(session, plan, lib) == []


def test_segmentation_partition_on_episode(coffee_session, lib):
    session, plan = coffee_session
    instances = segment_edh(session, plan, lib)
    assert instances, "episode produced no EDH instances"
    refs = [a for inst in instances for a in inst.reference_actions if is_interaction(a)]
    session_interactions = [
        r for r in session.actions if r.agent == "follower" and is_interaction(r.action)
    ]
    assert len(refs) == len(session_interactions)
    for inst in instances:
        assert isinstance(inst.reference_actions[-1], Stop)
        assert inst.expected_deltas
        assert any(
            not isinstance(r.action, (Motion, Interact)) for r in inst.history
        )


def test_edh_instance_roundtrip(coffee_session, lib):
    session, plan = coffee_session
    inst = segment_edh(session, plan, lib)[0]
    again = EdhInstance.from_dict(inst.to_dict())
    assert again.expected_deltas == inst.expected_deltas
    assert again.state_at_start.state_hash() == inst.state_at_start.state_hash()
    assert len(again.reference_actions) == len(inst.reference_actions)


# --------------------------------------------------------------------- tfd


def test_tfd_reference_length(coffee_session):
    session, _plan = coffee_session
    inst = extract_tfd(session)
    assert len(inst.reference_actions) == len(session.follower_env_actions()) + 1
    assert isinstance(inst.reference_actions[-1], Stop)


def test_tfd_rejects_no_change(lib, plans):
    plan = plans["kitchen_1"]
    from chorebench.scenario import Scenario

    world = build_world([make_object("CounterTop", cell=(3, 3))], floorplan_id=plan.floorplan_id)
    scenario = Scenario(plan.floorplan_id, "Make Coffee", (), 0, world)
    recorder = SessionRecorder("static", scenario)
    recorder.record_utterance("commander", "do nothing")
    session = recorder.finish()
    with pytest.raises(ChoreBenchError):
        extract_tfd(session)


def test_tfd_dialogue_order_preserved(coffee_session):
    session, _ = coffee_session
    inst = extract_tfd(session)
    times = [r.time_ms for r in inst.dialogue]
    assert times == sorted(times)
    speakers = {r.agent for r in inst.dialogue}
    assert speakers == {"commander", "follower"}


# ------------------------------------------------------------------ metrics


def test_tlw_spot_values():
    assert trajectory_length_weighted(1.0, 10, 20) == 0.5
    assert trajectory_length_weighted(1.0, 10, 10) == 1.0
    assert trajectory_length_weighted(1.0, 10, 5) == 1.0
    assert trajectory_length_weighted(0.75, 10, 10) == 0.75


def _fake_instance(expected, ref_len):
    class FakeInstance:
        instance_id = "fake"
        expected_deltas = expected
        reference_actions = [Motion("Forward")] * (ref_len - 1) + [Stop()]

    return FakeInstance()


def _fake_outcome(achieved, pred_len):
    return EvalOutcome(
        predicted_actions=[Motion("Forward")] * pred_len,
        achieved_deltas=achieved,
        halt="stop_predicted",
    )


def test_score_formulas():
    from chorebench.world import PropertyDelta

    expected = frozenset(PropertyDelta(f"o{i}", "isDirty", 1, 0) for i in range(4))
    achieved = frozenset(list(expected)[:3])
    s = score(_fake_outcome(achieved, 10), _fake_instance(expected, 10))
    assert s["SR"] == 0.0 and s["GC"] == 0.75 and s["TLW_GC"] == 0.75
    s = score(_fake_outcome(expected, 20), _fake_instance(expected, 10))
    assert s["SR"] == 1.0 and s["TLW_SR"] == 0.5
    extra = expected | {PropertyDelta("bonus", "isDirty", 1, 0)}
    s = score(_fake_outcome(extra, 10), _fake_instance(expected, 10))
    assert s["SR"] == 1.0


@given(st.integers(0, 2**31))
@settings(max_examples=200, deadline=None)
def test_sr_implies_gc(seed):
    from chorebench.world import PropertyDelta

    rng = random.Random(seed)
    pool = [PropertyDelta(f"o{i}", "isDirty", 1, 0) for i in range(6)]
    expected = frozenset(rng.sample(pool, rng.randint(1, 6)))
    achieved = frozenset(rng.sample(pool, rng.randint(0, 6)))
    s = score(
        _fake_outcome(achieved, rng.randint(1, 30)),
        _fake_instance(expected, rng.randint(1, 30)),
    )
    assert 0.0 <= s["GC"] <= 1.0
    if s["SR"] == 1.0:
        assert s["GC"] == 1.0
    assert s["TLW_SR"] <= s["SR"] and s["TLW_GC"] <= s["GC"] + 1e-12


# ---------------------------------------------------------------- inference


def test_oracle_agent_fixed_point(coffee_session, lib, plans):
    session, plan = coffee_session
    instances = segment_edh(session, plan, lib) + [extract_tfd(session)]
    for inst in instances:
        outcome = run_inference(OracleReplayAgent(), inst, plan, lib)
        s = score(outcome, inst)
        assert outcome.halt == "stop_predicted"
        assert s["SR"] == 1.0 and s["GC"] == 1.0 and s["TLW_SR"] == 1.0


def test_step_limit_boundary(coffee_session, lib):
    session, plan = coffee_session
    inst = extract_tfd(session)
    limits = InferenceLimits(max_steps=1000, max_fails=30)
    # 999 turns then Stop: halts on the prediction
    agent = ScriptedAgent([Motion("TurnLeft")] * 999)
    outcome = run_inference(agent, inst, plan, lib, limits)
    assert outcome.halt == "stop_predicted"
    assert len(outcome.predicted_actions) == 1000  # 999 env + Stop
    # 1000 forwards: limit fires exactly at 1000, Stop never requested
    agent = ScriptedAgent([Motion("TurnLeft")] * 1001)
    outcome = run_inference(agent, inst, plan, lib, limits)
    assert outcome.halt == "step_limit"
    assert len(outcome.predicted_actions) == 1000


def test_fail_limit_boundary(coffee_session, lib):
    session, plan = coffee_session
    inst = extract_tfd(session)
    limits = InferenceLimits(max_steps=1000, max_fails=30)
    bad = Interact("Pickup", ObjectSelector(coord=(0.99, 0.99)))
    agent = ScriptedAgent([bad] * 29)
    outcome = run_inference(agent, inst, plan, lib, limits)
    assert outcome.halt == "stop_predicted" and outcome.failed_actions == 29
    agent = ScriptedAgent([bad] * 30)
    outcome = run_inference(agent, inst, plan, lib, limits)
    assert outcome.halt == "fail_limit" and outcome.failed_actions == 30


def test_protocol_violation_raises(coffee_session, lib):
    session, plan = coffee_session
    inst = extract_tfd(session)

    class ChattyAgent(OracleReplayAgent):
        def act(self, obs):
            return {"kind": "utterance", "text": "hello"}

    with pytest.raises(ProtocolViolation):
        run_inference(ChattyAgent(), inst, plan, lib)


# ------------------------------------------------------------------- splits


def test_splits_shape_and_disjointness():
    rng = random.Random(0)
    plan_ids = [f"plan{i}" for i in range(10)]
    session_plans = {f"s{i}": rng.choice(plan_ids) for i in range(400)}
    assignment = assign_floorplans(plan_ids, seed=1, unseen_fraction=0.3)
    assert sum(1 for v in assignment.values() if v == "unseen") == 3
    spec = make_splits(session_plans, assignment, seed=2)
    spec.validate(session_plans)
    all_ids = set()
    for fold, ids in spec.folds.items():
        assert not (all_ids & ids)
        all_ids |= ids
    assert all_ids == set(session_plans)
    train_frac = len(spec.folds["train"]) / len(session_plans)
    assert 0.3 < train_frac < 0.7


def test_splits_single_floorplan_error():
    session_plans = {"s1": "only", "s2": "only"}
    with pytest.raises(ChoreBenchError):
        assign_floorplans(["only"], seed=0)
    with pytest.raises(ChoreBenchError):
        make_splits(session_plans, {"only": "train"}, seed=0)


def test_splits_invariant_fuzz():
    rng = random.Random(9)
    plan_ids = [f"p{i}" for i in range(8)]
    session_plans = {f"s{i}": rng.choice(plan_ids) for i in range(200)}
    for seed in range(25):
        assignment = assign_floorplans(plan_ids, seed=seed)
        spec = make_splits(session_plans, assignment, seed=seed)
        spec.validate(session_plans)
        unseen_plans = {p for p, pool in assignment.items() if pool == "unseen"}
        train_plans = {session_plans[s] for s in spec.folds["train"]}
        assert not (train_plans & unseen_plans)


# -------------------------------------------------------------------- stats


def _synthetic_session(n_utts, n_follower, task="Make Coffee"):
    from chorebench.world import AgentPose, WorldState

    world = WorldState("kitchen_1", {}, AgentPose((0, 0)), AgentPose((0, 0)))
    actions = []
    t = 0
    for i in range(n_utts):
        actions.append(ActionRecord(t, "commander", Utterance(f"hi {i}"), True))
        t += 100
    for i in range(n_follower):
        actions.append(ActionRecord(t, "follower", Motion("TurnLeft"), True))
        t += 100
    return Session("syn", "kitchen_1", task, (), 0, world, actions, world.snapshot())


def test_stats_single_session():
    rows = session_stats([_synthetic_session(6, 50)])
    row = rows[0]
    assert row["sessions"] == 1
    assert row["utterances_mean"] == 6.0 and row["utterances_sd"] == 0.0
    assert row["follower_actions_mean"] == 50.0 and row["follower_actions_sd"] == 0.0
    assert row["all_actions_mean"] == 56.0
    assert rows[-1]["task_name"] == "Overall"


def test_stats_identical_sessions_zero_sd():
    rows = session_stats([_synthetic_session(4, 9), _synthetic_session(4, 9)])
    assert rows[0]["utterances_sd"] == 0.0
    assert rows[0]["follower_actions_sd"] == 0.0
    assert rows[0]["all_actions_sd"] == 0.0


def test_stats_self_consistency(lib, plans):
    sessions = []
    for seed in range(6):
        ground, plan = pick_variant("Make Coffee", plans, 100 + seed, lib)
        scenario = generate_scenario(ground, plan, 100 + seed, lib)
        session, _ = run_tatc_episode(scenario, plan, lib)
        sessions.append(session)
    rows = session_stats(sessions)
    row = next(r for r in rows if r["task_name"] == "Make Coffee")
    # recount independently
    from statistics import fmean

    want = fmean(len(s.dialogue()) for s in sessions)
    assert abs(row["utterances_mean"] - want) < 1e-9
    assert row["sessions"] == 6


def test_aggregate_macro_mean():
    rows = [
        {"SR": 1.0, "GC": 1.0, "TLW_SR": 1.0, "TLW_GC": 1.0},
        {"SR": 0.0, "GC": 0.5, "TLW_SR": 0.0, "TLW_GC": 0.25},
    ]
    agg = aggregate(rows)
    assert agg["SR"] == 0.5 and agg["GC"] == 0.75 and agg["instances"] == 2


def test_segment_drop_commander_ops(coffee_session, lib):
    session, plan = coffee_session
    kept = segment_edh(session, plan, lib)
    dropped = segment_edh(session, plan, lib, drop_commander_ops=True)
    assert len(kept) == len(dropped)
    assert any(
        r.agent == "commander" and not isinstance(r.action, Utterance)
        for inst in kept
        for r in inst.history
    )
    for inst in dropped:
        for r in inst.history:
            assert r.agent == "follower" or isinstance(r.action, Utterance)
        assert any(isinstance(r.action, Utterance) for r in inst.history)


def test_splits_default_shape_near_table():
    """Default pools put roughly half the sessions in train."""
    rng = random.Random(123)
    plan_ids = [f"p{i}" for i in range(30)]
    session_plans = {f"s{i}": rng.choice(plan_ids) for i in range(3000)}
    fractions = []
    for seed in range(10):
        assignment = assign_floorplans(plan_ids, seed=seed)
        spec = make_splits(session_plans, assignment, seed=seed)
        fractions.append(len(spec.folds["train"]) / len(session_plans))
    mean_frac = sum(fractions) / len(fractions)
    assert 0.42 <= mean_frac <= 0.56, f"train fraction {mean_frac:.2f} far from ~0.49"


def test_score_purity_and_duplication():
    from chorebench.world import PropertyDelta

    expected = frozenset({PropertyDelta("o", "isDirty", 1, 0)})
    outcome = _fake_outcome(expected, 5)
    instance = _fake_instance(expected, 5)
    a = score(outcome, instance)
    b = score(outcome, instance)
    assert a == b
    assert aggregate([a, b])["SR"] == aggregate([a])["SR"]
