from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional


@dataclass(frozen=True)
class RawEntity:
    """A mention by character offsets, `end` exclusive."""

    start: int
    end: int
    role: str  # "e1", "e2" or "e3"


@dataclass
class RawSample:
    id: str
    text: str
    entities: list[RawEntity]
    label: str
    domain: Optional[str] = None
    extra: dict = field(default_factory=dict)

    def check_offsets(self) -> None:
        """Raises ValueError when offsets leave the text or overlap."""
        spans = sorted((e.start, e.end) for e in self.entities)
        for start, end in spans:
            if not 0 <= start < end <= len(self.text):
                raise ValueError(f"{self.id}: span [{start}, {end}) outside the text")
        for (_, a_end), (b_start, _) in zip(spans, spans[1:]):
            if b_start < a_end:
                raise ValueError(f"{self.id}: overlapping entity spans")
