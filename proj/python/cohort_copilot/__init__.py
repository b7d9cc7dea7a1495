"""Python bindings for the cohort filter toolkit.

Filters are exchanged as JSON text in the low-level ``_core`` module. The
helpers here accept and return plain Python dicts instead.
"""

import json

from . import _core
from ._core import (
    CaseIndex,
    Catalog,
    CohortError,
    ContractError,
    DataError,
    FilterAutomaton,
    FilterStructureError,
    FilterSyntaxError,
    QueryParser,
    bonferroni,
    mcnemar,
    paired_t_test,
    set_metrics,
    token_f1,
)


def _text(filter_):
    return filter_ if isinstance(filter_, str) else json.dumps(filter_)


def canonicalize(filter_):
    """Canonical JSON text of a filter given as a dict or JSON text."""
    return _core.canonicalize(_text(filter_))


def canonical_hash(filter_):
    return _core.canonical_hash(_text(filter_))


def validate(filter_, catalog):
    """Validation report as a dict with ``valid`` and ``issues``."""
    return json.loads(_core.validate(_text(filter_), catalog))


def generate(catalog, count, seed, with_queries=True):
    """Synthetic corpus as a list of dicts with ``query``, ``filter``, ``provenance`` and ``hash``."""
    return [json.loads(line) for line in _core.generate(catalog, count, seed, with_queries)]


def verbalize(filter_, catalog, seed=None):
    return _core.verbalize(_text(filter_), catalog, seed)


def parse_query(text, parser):
    """Returns ``(filter_dict, confidence)`` for a cohort description."""
    filter_text, confidence = parser.parse(text)
    return json.loads(filter_text), confidence


def execute(filter_, index):
    return index.execute(_text(filter_))


__all__ = [
    "CaseIndex",
    "Catalog",
    "CohortError",
    "ContractError",
    "DataError",
    "FilterAutomaton",
    "FilterStructureError",
    "FilterSyntaxError",
    "QueryParser",
    "bonferroni",
    "canonical_hash",
    "canonicalize",
    "execute",
    "generate",
    "mcnemar",
    "paired_t_test",
    "parse_query",
    "set_metrics",
    "token_f1",
    "validate",
    "verbalize",
]
