"""Knowledge-base engine for a space situational awareness ontology."""

from .dsl import load_files, load_text, parse_text, serialize
from .model import KnowledgeBase, assert_statement, intern, lookup
from .query import answer, ask, instances_of, match, parse_query
from .reasoner import ReasonerConfig, check, materialize

__version__ = "0.1.0"

__all__ = [
    "KnowledgeBase",
    "ReasonerConfig",
    "answer",
    "ask",
    "assert_statement",
    "check",
    "instances_of",
    "intern",
    "load_files",
    "load_text",
    "lookup",
    "match",
    "materialize",
    "parse_query",
    "parse_text",
    "serialize",
]
