"""Task library: cross-reference resolution over a set of task definitions."""

from __future__ import annotations

import importlib.resources
import json
from dataclasses import dataclass
from pathlib import Path

from .errors import LibraryError
from .hierarchy import ClassHierarchy
from .tdl import (
    GroundTask,
    TaskDefinition,
    TaskRefComponent,
    _is_slot,
    parse_task_definition,
    substitute_params,
)

TASK_SUFFIX = ".task"


@dataclass
class TaskLibrary:
    tasks: dict
    hierarchy: ClassHierarchy

    def __eq__(self, other):
        return (
            isinstance(other, TaskLibrary)
            and self.tasks == other.tasks
            and self.hierarchy == other.hierarchy
        )

    def get(self, task_name: str) -> TaskDefinition:
        try:
            return self.tasks[task_name]
        except KeyError:
            raise LibraryError(f"unknown task: {task_name!r}") from None

    def ground(self, task_name: str, params=()) -> GroundTask:
        return substitute_params(self.get(task_name), list(params))

    def task_names(self) -> list[str]:
        return sorted(self.tasks)


def _check_references(tasks: dict):
    for name, definition in tasks.items():
        for key, comp in definition.components.items():
            if not isinstance(comp, TaskRefComponent):
                continue
            if comp.determiner == "all":
                raise LibraryError(
                    f"{name}.{key}: determiner 'all' cannot cascade over a task reference"
                )
            target_name = comp.task_name
            if _is_slot(target_name):
                continue  # resolved only after substitution; not used by shipped tasks
            target = tasks.get(target_name)
            if target is None:
                raise LibraryError(
                    f"{name}.{key}: unknown task reference {target_name!r}"
                )
            if len(comp.task_params) != target.task_nparams:
                raise LibraryError(
                    f"{name}.{key}: {target_name!r} takes {target.task_nparams} "
                    f"parameter(s), got {len(comp.task_params)}"
                )


def _check_acyclic(tasks: dict):
    WHITE, GREY, BLACK = 0, 1, 2
    color = {name: WHITE for name in tasks}

    def visit(name, path):
        color[name] = GREY
        for comp in tasks[name].components.values():
            if not isinstance(comp, TaskRefComponent) or _is_slot(comp.task_name):
                continue
            target = comp.task_name
            if color.get(target) == GREY:
                cycle = path + [target]
                at = cycle.index(target)
                raise LibraryError(
                    "task reference cycle: " + " -> ".join(cycle[at:])
                )
            if color.get(target) == WHITE:
                visit(target, path + [target])
        color[name] = BLACK

    for name in sorted(tasks):
        if color[name] == WHITE:
            visit(name, [name])


def load_library(sources, hierarchy: ClassHierarchy, lenient: bool = False) -> TaskLibrary:
    """Build a library from (source_name, text) pairs or raw texts.

    All references must resolve, arities must match, and the reference
    graph must be acyclic. Acceptance is order-independent.
    """
    tasks = {}
    for item in sources:
        if isinstance(item, tuple):
            source, text = item
        else:
            source, text = "<source>", item
        definition = parse_task_definition(text, source=str(source), lenient=lenient)
        if definition.task_name in tasks:
            raise LibraryError(f"duplicate task_name: {definition.task_name!r}")
        tasks[definition.task_name] = definition
    _check_references(tasks)
    _check_acyclic(tasks)
    return TaskLibrary(tasks=dict(sorted(tasks.items())), hierarchy=hierarchy)


def scan_task_dir(root) -> list[tuple[str, str]]:
    """All .task files under a directory, recursively, sorted by path."""
    root = Path(root)
    if not root.is_dir():
        raise LibraryError(f"not a task directory: {root}")
    out = []
    for path in sorted(root.rglob(f"*{TASK_SUFFIX}")):
        out.append((str(path), path.read_text(encoding="utf-8")))
    return out


def load_library_from_dir(root, hierarchy=None, lenient=False) -> TaskLibrary:
    if hierarchy is None:
        hierarchy = default_hierarchy()
    return load_library(scan_task_dir(root), hierarchy, lenient=lenient)


def _data_root():
    return importlib.resources.files("chorebench") / "data"


def default_hierarchy() -> ClassHierarchy:
    text = (_data_root() / "hierarchy.json").read_text(encoding="utf-8")
    return ClassHierarchy(json.loads(text))


def _walk_task_files(node, out):
    for entry in sorted(node.iterdir(), key=lambda e: e.name):
        if entry.is_dir():
            _walk_task_files(entry, out)
        elif entry.name.endswith(TASK_SUFFIX):
            out.append((entry.name, entry.read_text(encoding="utf-8")))


def shipped_task_sources() -> list[tuple[str, str]]:
    sources: list[tuple[str, str]] = []
    _walk_task_files(_data_root() / "tasks", sources)
    return sources


def shipped_library() -> TaskLibrary:
    """The benchmark task set bundled with the package."""
    return load_library(shipped_task_sources(), default_hierarchy())


# Table-style display names of the benchmark (non-helper) tasks.
BENCHMARK_TASKS = (
    "Water Plant",
    "Make Coffee",
    "Clean All X",
    "Put All X On Y",
    "Boil Potato",
    "Plate Of Toast",
    "N Slices Of X In Y",
    "Put All X In One Y",
    "N Cooked Slices Of X In Y",
    "Prepare Sandwich",
    "Prepare Salad",
    "Prepare Breakfast",
)
