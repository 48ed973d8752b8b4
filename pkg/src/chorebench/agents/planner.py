"""Shortest-path motion planning over the floorplan grid."""

from __future__ import annotations

from collections import deque

from ..errors import PlanningError
from ..floorplan import Floorplan
from ..world import HEADING_VEC, HEADINGS, AgentPose, WorldState

# Expansion order fixes tie-breaking: prefer Forward, then turns in a fixed
# direction order, then strafes and Backward.
_ACTIONS = ("Forward", "TurnLeft", "TurnRight", "StrafeLeft", "StrafeRight", "Backward")


def _apply(state, action):
    cell, heading = state
    hi = HEADINGS.index(heading)
    if action == "TurnLeft":
        return (cell, HEADINGS[(hi - 1) % 4])
    if action == "TurnRight":
        return (cell, HEADINGS[(hi + 1) % 4])
    fx, fy = HEADING_VEC[heading]
    rx, ry = -fy, fx
    moves = {
        "Forward": (fx, fy),
        "Backward": (-fx, -fy),
        "StrafeLeft": (-rx, -ry),
        "StrafeRight": (rx, ry),
    }
    dx, dy = moves[action]
    return ((cell[0] + dx, cell[1] + dy), heading)


def _facing(cell, heading, target_cell) -> bool:
    fx, fy = HEADING_VEC[heading]
    return (cell[0] + fx, cell[1] + fy) == target_cell


def goal_states(plan: Floorplan, target_cell):
    """(cell, heading) pairs adjacent to and facing the target cell."""
    out = []
    for heading in HEADINGS:
        fx, fy = HEADING_VEC[heading]
        stand = (target_cell[0] - fx, target_cell[1] - fy)
        if plan.passable(stand):
            out.append((stand, heading))
    return out


def plan_path_to_cell(plan: Floorplan, pose: AgentPose, target_cell) -> list[str]:
    """Motion tokens leaving the agent adjacent to and facing target_cell."""
    goals = set(goal_states(plan, target_cell))
    if not goals:
        raise PlanningError(f"no standable cell adjacent to {target_cell}")
    start = (pose.cell, pose.heading)
    if start in goals:
        return []
    seen = {start}
    queue = deque([(start, [])])
    while queue:
        state, path = queue.popleft()
        for action in _ACTIONS:
            nxt = _apply(state, action)
            if action != "TurnLeft" and action != "TurnRight":
                if not plan.passable(nxt[0]):
                    continue
            if nxt in seen:
                continue
            npath = path + [action]
            if nxt in goals:
                return npath
            seen.add(nxt)
            queue.append((nxt, npath))
    raise PlanningError(f"no path from {pose.cell} to {target_cell}")


def plan_path(plan: Floorplan, world: WorldState, pose: AgentPose, target_id: str) -> list[str]:
    """Motion tokens to stand adjacent to and facing an object's cell."""
    if target_id not in world.objects:
        raise PlanningError(f"no such object: {target_id}")
    cell = world.effective_cell(target_id)
    if cell is None:
        raise PlanningError(f"{target_id} has no grid cell (held?)")
    return plan_path_to_cell(plan, pose, cell)


def bfs_distance(plan: Floorplan, pose: AgentPose, target_cell) -> int:
    """Independent oracle for plan length, counting actions."""
    goals = set(goal_states(plan, target_cell))
    if not goals:
        raise PlanningError("unreachable")
    start = (pose.cell, pose.heading)
    if start in goals:
        return 0
    dist = {start: 0}
    queue = deque([start])
    while queue:
        state = queue.popleft()
        for action in _ACTIONS:
            nxt = _apply(state, action)
            if action not in ("TurnLeft", "TurnRight") and not plan.passable(nxt[0]):
                continue
            if nxt in dist:
                continue
            dist[nxt] = dist[state] + 1
            if nxt in goals:
                return dist[nxt]
            queue.append(nxt)
    raise PlanningError("unreachable")
