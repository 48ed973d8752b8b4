"""Two-agent task-completion episode driver."""

from __future__ import annotations

from dataclasses import dataclass

from ..actions import ProgressCheck, is_interaction
from ..checker import check_task
from ..floorplan import Floorplan
from ..library import TaskLibrary
from ..scenario import Scenario
from ..session import Session, SessionRecorder
from .commander import AgentConfig, RuleCommander
from .follower import RuleFollower


@dataclass
class EpisodeLimits:
    max_steps: int = 1000
    max_fails: int = 30


def run_tatc_episode(
    scenario: Scenario,
    plan: Floorplan,
    lib: TaskLibrary,
    limits: EpisodeLimits = None,
    agent_config: AgentConfig = None,
    session_id: str = None,
) -> tuple[Session, bool]:
    """Alternate Follower help requests and Commander instruction batches
    until the Progress Check reports success or a limit is hit."""
    limits = limits or EpisodeLimits()
    if session_id is None:
        task_slug = scenario.task_name.replace(" ", "")
        session_id = f"{task_slug}_{scenario.floorplan_id}_s{scenario.seed}"
    ground = lib.ground(scenario.task_name, scenario.task_params)
    recorder = SessionRecorder(session_id, scenario)
    follower = RuleFollower()
    commander = RuleCommander(lib, ground, plan, agent_config)
    success = False
    env_steps = 0
    failures = 0
    while True:
        if not follower.queue:
            recorder.record_utterance("follower", "What should I do next?")
            recorder.record_step(plan, "commander", ProgressCheck(), lib)
            report = check_task(recorder.world, ground, lib)
            if report.success:
                success = True
                break
            batch = commander.decide(recorder.world, report)
            if batch is None:
                break
            text = " ".join(batch)
            recorder.record_utterance("commander", text)
            follower.hear(text)
            continue
        action = follower.next_action()
        result = recorder.record_step(plan, "follower", action, lib)
        env_steps += 1
        if not result.success:
            failures += 1
        if env_steps >= limits.max_steps or failures >= limits.max_fails:
            break
    if not success:
        success = bool(check_task(recorder.world, ground, lib).success)
    session = recorder.finish()
    return session, success


def count_interactions(session: Session) -> int:
    return sum(
        1
        for r in session.actions
        if r.agent == "follower" and is_interaction(r.action) and r.success
    )
