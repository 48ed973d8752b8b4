"""Object class hierarchy: named classes expand to sets of concrete object types."""

from __future__ import annotations

import json

from .errors import WorldError


class ClassHierarchy:
    """Acyclic mapping of class name -> member types and/or subclass names.

    Every name trivially contains itself, so a concrete type is a valid
    class of exactly itself and membership expansion is monotone.
    """

    def __init__(self, classes: dict[str, list[str]]):
        self.classes = {name: list(members) for name, members in classes.items()}
        self._expanded: dict[str, frozenset[str]] = {}
        for name in self.classes:
            self.expand(name)  # also detects cycles

    def expand(self, name: str) -> frozenset[str]:
        """All concrete types reachable from `name`, including `name` itself."""
        cached = self._expanded.get(name)
        if cached is not None:
            return cached
        return self._expand(name, ())

    def _expand(self, name: str, stack: tuple[str, ...]) -> frozenset[str]:
        if name in stack:
            cycle = " -> ".join(stack + (name,))
            raise WorldError(f"class hierarchy cycle: {cycle}")
        members = {name}
        for child in self.classes.get(name, ()):
            members |= self._expand(child, stack + (name,))
        result = frozenset(members)
        self._expanded[name] = result
        return result

    def is_member(self, object_type: str, class_name: str) -> bool:
        return object_type in self.expand(class_name)

    def to_dict(self) -> dict:
        return {name: list(members) for name, members in sorted(self.classes.items())}

    @classmethod
    def from_file(cls, path) -> "ClassHierarchy":
        with open(path, "r", encoding="utf-8") as fh:
            return cls(json.load(fh))

    def __eq__(self, other):
        return isinstance(other, ClassHierarchy) and self.classes == other.classes
