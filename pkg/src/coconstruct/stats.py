"""Counts of scheme annotations in a corpus."""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, fields

from .conllu import Document
from .convert import cluster_units
from .scheme import CoconstructPointer, PointerError


@dataclass
class SchemeStats:
    sentences: int = 0
    tokens: int = 0
    backchannel_sentences: int = 0
    coconstruct_tokens: int = 0
    by_deprel: dict = field(default_factory=dict)
    scrap_tokens: int = 0
    promotion_by_label: dict = field(default_factory=dict)
    units_multi_member: int = 0

    def __add__(self, other: SchemeStats) -> SchemeStats:
        merged = {}
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            merged[f.name] = dict(Counter(a) + Counter(b)) if isinstance(a, dict) else a + b
        return SchemeStats(**merged)

    def as_dict(self) -> dict:
        out = {}
        for f in fields(self):
            value = getattr(self, f.name)
            out[f.name] = dict(sorted(value.items())) if isinstance(value, dict) else value
        return out


def compute_stats(doc: Document) -> SchemeStats:
    stats = SchemeStats(sentences=len(doc))
    by_deprel: Counter = Counter()
    promotions: Counter = Counter()
    for sent in doc:
        words = sent.words
        stats.tokens += len(words)
        if any(t.get_misc("Backchannel") is not None for t in words):
            stats.backchannel_sentences += 1
        for tok in words:
            value = tok.get_misc("Coconstruct")
            if value is not None:
                try:
                    by_deprel[CoconstructPointer.parse(value).deprel] += 1
                except PointerError:
                    pass
            if tok.get_misc("Scrap") == "Yes":
                stats.scrap_tokens += 1
            label = tok.get_misc("Promotion")
            if label is not None:
                promotions[label] += 1
    stats.coconstruct_tokens = sum(by_deprel.values())
    stats.by_deprel = dict(by_deprel)
    stats.promotion_by_label = dict(promotions)
    stats.units_multi_member = sum(1 for u in cluster_units(doc) if len(u.members) > 1)
    return stats


def _cell(value) -> str:
    if isinstance(value, dict):
        return ",".join(f"{k}={v}" for k, v in sorted(value.items())) or "_"
    return str(value)


def render_stats(stats: SchemeStats, fmt: str = "tsv") -> str:
    data = stats.as_dict()
    if fmt == "tsv":
        return "\t".join(data) + "\n" + "\t".join(_cell(v) for v in data.values()) + "\n"
    if fmt == "json":
        return json.dumps(data, ensure_ascii=False) + "\n"
    raise ValueError(f"unknown stats format {fmt!r}")
