from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Protocol


@dataclass(frozen=True)
class ParsedEdges:
    """Parser output for one sentence. `head` is None for the root."""

    tokens: list[str]
    pos: list[str]
    offsets: list[tuple[int, int]]
    edges: list[tuple[Optional[int], int, str]]


class ParserBackend(Protocol):
    name: str

    def parse_syntactic(self, text: str) -> ParsedEdges: ...

    def parse_semantic(self, text: str, tokens: list[str]) -> list[tuple[Optional[int], int, str]]: ...


_REGISTRY: dict[str, Callable[[], ParserBackend]] = {}


def register_backend(name: str, factory: Callable[[], ParserBackend]) -> None:
    _REGISTRY[name] = factory


def get_backend(name: str) -> ParserBackend:
    try:
        return _REGISTRY[name]()
    except KeyError:
        known = ", ".join(sorted(_REGISTRY)) or "none registered"
        raise KeyError(f"unknown parser backend {name!r} ({known})") from None
