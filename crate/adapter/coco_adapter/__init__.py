"""Raw data to coco-corpus JSONL, through pluggable dependency parsers."""

from .backend import ParsedEdges, ParserBackend, get_backend, register_backend
from .convert import ConvertSummary, convert
from .types import RawEntity, RawSample

__all__ = [
    "ConvertSummary",
    "ParsedEdges",
    "ParserBackend",
    "RawEntity",
    "RawSample",
    "convert",
    "get_backend",
    "register_backend",
]
