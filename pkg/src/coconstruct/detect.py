"""Candidate mining for treebanks without coconstruction annotation.

Two scans over consecutive utterance pairs by different speakers:
backchannel candidates (first utterance not a question, second containing
lexicon items) and incompletion candidates (first utterance not closed by
final punctuation).  Results are reports for manual inspection.
"""

from __future__ import annotations

import enum
import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Sequence, Union

from .conllu import Document, Sentence
from .scheme import DEFAULT_SPEAKER_KEYS, sentence_speaker

FINAL_PUNCT = frozenset({".", "?", "!", "…"})

# small cross-language seed list for when neither a file nor a corpus is at hand
BUILTIN_BACKCHANNELS = frozenset("""
    mhm mh mhmh mm hm uhm aha ah eh oh ok okay yes yeah right
    sì si certo esatto ecco vabbè
    oui ouais d'accord voilà
    ja aja dobro tako ne
""".split())


class Provenance(enum.Enum):
    BUILTIN = "BuiltIn"
    DERIVED = "Derived"
    FILE = "File"


@dataclass(frozen=True)
class BackchannelLexicon:
    entries: frozenset
    provenance: Provenance = Provenance.FILE

    def __contains__(self, form: str) -> bool:
        return form.lower() in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    @classmethod
    def builtin(cls) -> BackchannelLexicon:
        return cls(BUILTIN_BACKCHANNELS, Provenance.BUILTIN)

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> BackchannelLexicon:
        entries = set()
        for line in lines:
            line = line.split("#", 1)[0].strip()
            if line:
                entries.add(line.lower())
        return cls(frozenset(entries), Provenance.FILE)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> BackchannelLexicon:
        return cls.from_lines(Path(path).read_text(encoding="utf-8").splitlines())

    def to_text(self) -> str:
        return "".join(f"{e}\n" for e in sorted(self.entries))


class CandidateKind(enum.Enum):
    BACKCHANNEL = "Backchannel"
    INCOMPLETION = "Incompletion"


@dataclass(frozen=True)
class Candidate:
    kind: CandidateKind
    first_sent_id: str
    second_sent_id: str
    trigger_tokens: tuple
    score: int

    def as_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "first_sent_id": self.first_sent_id,
            "second_sent_id": self.second_sent_id,
            "trigger_tokens": list(self.trigger_tokens),
            "score": self.score,
        }


class MissingSpeakerError(ValueError):
    def __init__(self, sent_ids: list[str]):
        self.sent_ids = sent_ids
        shown = ", ".join(sent_ids[:10]) + (" ..." if len(sent_ids) > 10 else "")
        super().__init__(f"{len(sent_ids)} sentence(s) lack speaker metadata: {shown}")


@dataclass
class DetectConfig:
    all_tokens: bool = False
    final_punct: frozenset = FINAL_PUNCT
    speaker_keys: Sequence[str] = field(default=DEFAULT_SPEAKER_KEYS)


def derive_lexicon(doc: Document, min_count: int = 2) -> BackchannelLexicon:
    """Forms already tagged ``discourse*``, INTJ or PART, at least ``min_count`` times."""
    counts = Counter()
    for sent in doc:
        for tok in sent.words:
            if tok.deprel.startswith("discourse") or tok.upos in ("INTJ", "PART"):
                counts[tok.form.lower()] += 1
    return BackchannelLexicon(frozenset(f for f, n in counts.items() if n >= min_count),
                              Provenance.DERIVED)


def _sid(sent: Sentence) -> str:
    return sent.sent_id or f"#{sent.document_position}"


def speaker_pairs(doc: Document,
                  speaker_keys: Sequence[str] = DEFAULT_SPEAKER_KEYS) -> Iterator[tuple[Sentence, Sentence]]:
    """Consecutive sentence pairs uttered by different speakers."""
    speakers = [sentence_speaker(s, speaker_keys) for s in doc]
    missing = [_sid(s) for s, spk in zip(doc, speakers) if spk is None]
    if missing:
        raise MissingSpeakerError(missing)
    for i in range(len(doc.sentences) - 1):
        if speakers[i] != speakers[i + 1]:
            yield doc.sentences[i], doc.sentences[i + 1]


def is_interrogative(sent: Sentence) -> bool:
    if any(t.form == "?" for t in sent.words):
        return True
    return (sent.text or "").rstrip().endswith("?")


def detect_backchannels(doc: Document, lex: BackchannelLexicon,
                        config: DetectConfig | None = None) -> list[Candidate]:
    config = config or DetectConfig()
    if not lex.entries:
        raise ValueError("backchannel lexicon is empty")
    found = []
    for first, second in speaker_pairs(doc, config.speaker_keys):
        if is_interrogative(first):
            continue
        content = [t for t in second.words if t.upos != "PUNCT"]
        hits = [t.id for t in content if t.form in lex]
        if not hits:
            continue
        if config.all_tokens and len(hits) != len(content):
            continue
        found.append(Candidate(CandidateKind.BACKCHANNEL, _sid(first), _sid(second),
                               tuple(hits), len(hits)))
    return found


def detect_incompletions(doc: Document, config: DetectConfig | None = None) -> list[Candidate]:
    config = config or DetectConfig()
    found = []
    for first, second in speaker_pairs(doc, config.speaker_keys):
        words = [t for t in first.words if t.upos != "SYM"]
        if not words:
            continue
        last = words[-1]
        if last.upos == "PUNCT" and last.form in config.final_punct:
            continue
        found.append(Candidate(CandidateKind.INCOMPLETION, _sid(first), _sid(second),
                               (last.id,), 1))
    return found


CANDIDATE_FIELDS = ("kind", "first_sent_id", "second_sent_id", "trigger_tokens", "score")


def candidates_to_tsv(candidates: Iterable[Candidate]) -> str:
    rows = ["\t".join(CANDIDATE_FIELDS)]
    for c in candidates:
        rows.append("\t".join((c.kind.value, c.first_sent_id, c.second_sent_id,
                               ",".join(map(str, c.trigger_tokens)), str(c.score))))
    return "\n".join(rows) + "\n"


def candidates_to_jsonl(candidates: Iterable[Candidate]) -> str:
    return "".join(json.dumps(c.as_dict(), ensure_ascii=False) + "\n" for c in candidates)
