"""Shell-level attacker state.

A shell is a (host, privilege) pair; the attacker's state is the set of
shells currently held. States only ever grow.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Iterator, NamedTuple

HostId = str


class Privilege(str, Enum):
    PRIV = "priv"
    UNPRIV = "unpriv"


class Direction(str, Enum):
    FWD = "fwd"
    REV = "rev"


class ShellRef(NamedTuple):
    host: HostId
    privilege: Privilege

    @classmethod
    def of(cls, host: str, privilege: str | Privilege) -> "ShellRef":
        return cls(host, Privilege(privilege))

    def __str__(self) -> str:
        return f"{self.host}:{self.privilege.value}"


class ConnRequirement(NamedTuple):
    """Connectivity an exploit needs from its executing shell."""

    host: HostId
    port: int
    direction: Direction

    @classmethod
    def of(cls, host: str, port: int, direction: str | Direction = Direction.FWD) -> "ConnRequirement":
        return cls(host, int(port), Direction(direction))


@dataclass(frozen=True)
class AttackState:
    """Immutable set of held shells. Equality is set equality."""

    shells: frozenset[ShellRef] = frozenset()

    @classmethod
    def of(cls, *shells: ShellRef | tuple[str, str]) -> "AttackState":
        return cls(frozenset(ShellRef.of(*s) for s in shells))

    @classmethod
    def from_iter(cls, shells: Iterable[ShellRef]) -> "AttackState":
        return cls(frozenset(shells))

    def __iter__(self) -> Iterator[ShellRef]:
        return iter(sorted(self.shells))

    def __len__(self) -> int:
        return len(self.shells)

    def __contains__(self, shell: object) -> bool:
        return shell in self.shells

    @property
    def hosts(self) -> frozenset[HostId]:
        return frozenset(s.host for s in self.shells)

    def union(self, shells: Iterable[ShellRef]) -> "AttackState":
        return AttackState(self.shells.union(shells))

    def issuperset(self, other: "AttackState | Iterable[ShellRef]") -> bool:
        other_shells = other.shells if isinstance(other, AttackState) else other
        return self.shells.issuperset(other_shells)

    def key(self) -> tuple[tuple[str, str], ...]:
        """Canonical sorted representation, stable across processes."""
        return tuple((s.host, s.privilege.value) for s in sorted(self.shells))

    def __repr__(self) -> str:
        return "AttackState({" + ", ".join(str(s) for s in self) + "})"
