"""The coconstruction feature scheme carried in MISC, and its validator.

Features recognized on a token:

``Coconstruct=<deprel>::<sent_id>::<tok_id>``
    backward pointer from a later token to the earlier token it depends on
    (``repair`` as deprel marks a repair of the target).
``Backchannel=<sent_id>::<tok_id>``
    backward pointer for a ``discourse:backchannel`` attachment.
``Scrap=Yes``, ``Promotion=<deprel>``
    unfinished element, and the relation it would bear if its missing head
    were present.
``Head=Word|Position``
    on a dependent of a promoted token: does it belong to the word or to the
    position the word was promoted into.
"""

from __future__ import annotations

import copy
import enum
import json
import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .conllu import Document, Pair, Sentence, Token

SEP = "::"
REPAIR = "repair"
BACKCHANNEL_DEPREL = "discourse:backchannel"
DEFAULT_SPEAKER_KEYS = ("speaker", "speaker_id")

UNIVERSAL_RELATIONS = frozenset("""
    acl advcl advmod amod appos aux case cc ccomp clf compound conj cop csubj
    dep det discourse dislocated expl fixed flat goeswith iobj list mark nmod
    nsubj nummod obj obl orphan parataxis punct reparandum root vocative xcomp
""".split())

_LABEL_RE = re.compile(r"^[a-z]+(?::[a-z]+)*$")


class PointerError(ValueError):
    def __init__(self, message: str, value: str):
        self.value = value
        super().__init__(f"{message}: {value!r}")


class HeadMode(enum.Enum):
    WORD = "Word"
    POSITION = "Position"


class Severity(str, enum.Enum):
    ERROR = "Error"
    WARNING = "Warning"


# Stable issue codes.
CODES = {
    "V1": "pointer syntax",
    "V2": "pointer target sentence missing",
    "V3": "pointer target does not precede bearer",
    "V4": "pointer target token missing",
    "V5": "Head= value or placement",
    "V6": "Promotion= value",
    "V7": "Coconstruct relation label",
    "V8": "sentence is not a well-formed tree",
    "V9": "coconstruction between contiguous same-speaker sentences",
    "V10": "backchannel bearer is not its sentence root",
}


def _split_pointer(value: str, parts: int) -> list[str]:
    fields = value.split(SEP)
    if len(fields) != parts:
        raise PointerError(f"expected {parts} '::'-separated fields", value)
    if any(f == "" for f in fields):
        raise PointerError("empty pointer field", value)
    if not fields[-1].isdigit() or int(fields[-1]) < 1:
        raise PointerError("token id must be a positive integer", value)
    return fields


@dataclass(frozen=True)
class CoconstructPointer:
    deprel: str
    target_sent_id: str
    target_tok_id: int

    @classmethod
    def parse(cls, value: str) -> CoconstructPointer:
        deprel, sent_id, tok = _split_pointer(value, 3)
        return cls(deprel, sent_id, int(tok))

    def __str__(self) -> str:
        return SEP.join((self.deprel, self.target_sent_id, str(self.target_tok_id)))


@dataclass(frozen=True)
class BackchannelPointer:
    target_sent_id: str
    target_tok_id: int

    deprel = BACKCHANNEL_DEPREL

    @classmethod
    def parse(cls, value: str) -> BackchannelPointer:
        sent_id, tok = _split_pointer(value, 2)
        return cls(sent_id, int(tok))

    def __str__(self) -> str:
        return SEP.join((self.target_sent_id, str(self.target_tok_id)))


@dataclass(frozen=True)
class SchemeFeatures:
    coconstruct: Optional[CoconstructPointer] = None
    backchannel: Optional[BackchannelPointer] = None
    scrap: bool = False
    promotion: Optional[str] = None
    head_mode: Optional[HeadMode] = None
    speaker: Optional[str] = None

    @property
    def pointer(self):
        return self.coconstruct or self.backchannel


def _single(misc: Sequence[Pair], key: str) -> Optional[str]:
    values = [v for k, v in misc if k == key and v is not None]
    if len(values) > 1:
        raise PointerError(f"multiple {key} values", "|".join(values))
    return values[0] if values else None


def parse_scheme_features(misc: Sequence[Pair]) -> SchemeFeatures:
    """Decode the scheme keys of one token's MISC; other keys are ignored.

    Raises PointerError for malformed or repeated pointers and ValueError for
    an unknown ``Head=`` value.
    """
    coco = _single(misc, "Coconstruct")
    back = _single(misc, "Backchannel")
    head = _single(misc, "Head")
    return SchemeFeatures(
        coconstruct=CoconstructPointer.parse(coco) if coco is not None else None,
        backchannel=BackchannelPointer.parse(back) if back is not None else None,
        scrap=_single(misc, "Scrap") == "Yes",
        promotion=_single(misc, "Promotion"),
        head_mode=HeadMode(head) if head is not None else None,
        speaker=_single(misc, "Speaker"),
    )


def is_relation_label(label: str) -> bool:
    return bool(_LABEL_RE.match(label))


def is_coconstruct_label(label: str) -> bool:
    if label == REPAIR:
        return True
    return is_relation_label(label) and label.split(":")[0] in UNIVERSAL_RELATIONS - {"root"}


def sentence_speaker(sent: Sentence, keys: Iterable[str] = DEFAULT_SPEAKER_KEYS) -> Optional[str]:
    for key in keys:
        value = sent.meta(key)
        if value is not None:
            return value.strip()
    return None


def tree_problems(sent: Sentence) -> list[str]:
    """Reasons the word rows of ``sent`` do not form a single rooted tree."""
    words = sent.words
    ids = [t.id for t in words]
    problems = []
    if ids != list(range(1, len(ids) + 1)):
        problems.append("word ids are not 1..n")
    known = set(ids)
    heads = {}
    for t in words:
        if t.head is None:
            problems.append(f"token {t.id} has no head")
        elif t.head != 0 and t.head not in known:
            problems.append(f"token {t.id} has head {t.head} outside the sentence")
        else:
            heads[t.id] = t.head
    if problems:
        return problems
    roots = [i for i, h in heads.items() if h == 0]
    if len(roots) != 1:
        problems.append(f"{len(roots)} roots {roots}")
    for start in heads:
        seen = set()
        node = start
        while node != 0:
            if node in seen:
                problems.append(f"cycle through token {start}")
                return problems
            seen.add(node)
            node = heads[node]
    return problems


@dataclass(frozen=True)
class ValidationIssue:
    severity: Severity
    code: str
    sent_id: str
    tok_id: Optional[int]
    message: str

    def as_dict(self) -> dict:
        return {
            "severity": self.severity.value, "code": self.code,
            "sent_id": self.sent_id, "tok_id": self.tok_id, "message": self.message,
        }


ISSUE_FIELDS = ("severity", "code", "sent_id", "tok_id", "message")


def issues_to_tsv(issues: Iterable[ValidationIssue]) -> str:
    rows = ["\t".join(ISSUE_FIELDS)]
    for i in issues:
        rows.append("\t".join((i.severity.value, i.code, i.sent_id,
                               "_" if i.tok_id is None else str(i.tok_id), i.message)))
    return "\n".join(rows) + "\n"


def issues_to_jsonl(issues: Iterable[ValidationIssue]) -> str:
    return "".join(json.dumps(i.as_dict(), ensure_ascii=False) + "\n" for i in issues)


class _Collector:
    def __init__(self):
        self.items: list[tuple[tuple, ValidationIssue]] = []

    def add(self, pos: int, sent: Sentence, tok_id: Optional[int], code: str,
            message: str, severity: Severity = Severity.ERROR) -> None:
        issue = ValidationIssue(severity, code, sent.sent_id or f"#{pos}", tok_id, message)
        self.items.append(((pos, tok_id or 0, int(code[1:])), issue))

    def sorted(self) -> list[ValidationIssue]:
        return [issue for _, issue in sorted(self.items, key=lambda item: item[0])]


def repair_targets(doc: Document) -> set[tuple[int, int]]:
    """(sentence position, token id) of every token named by a well-formed ``repair`` pointer."""
    targets = set()
    for sent in doc:
        for tok in sent.words:
            for value in tok.misc_values("Coconstruct"):
                try:
                    ptr = CoconstructPointer.parse(value)
                except PointerError:
                    continue
                pos = doc.sent_index.get(ptr.target_sent_id)
                if ptr.deprel == REPAIR and pos is not None:
                    targets.add((pos, ptr.target_tok_id))
    return targets


def validate_document(doc: Document,
                      speaker_keys: Sequence[str] = DEFAULT_SPEAKER_KEYS) -> list[ValidationIssue]:
    """Check every scheme constraint; an empty list means the document is scheme-valid.

    Issues come back in document order, then by code.
    """
    out = _Collector()
    repaired = repair_targets(doc)
    for pos, sent in enumerate(doc.sentences):
        problems = tree_problems(sent)
        if problems:
            out.add(pos, sent, None, "V8", "; ".join(problems))
        by_id = {t.id: t for t in sent.words}
        for tok in sent.words:
            _check_pointers(doc, pos, sent, tok, out, speaker_keys)
            _check_promotion_and_head(pos, sent, tok, by_id, repaired, out)
    return out.sorted()


def _check_pointers(doc, pos, sent, tok, out, speaker_keys):
    cocos = tok.misc_values("Coconstruct")
    backs = tok.misc_values("Backchannel")
    if len(cocos) > 1:
        out.add(pos, sent, tok.id, "V1", f"{len(cocos)} Coconstruct values on one token")
        cocos = []
    if len(backs) > 1:
        out.add(pos, sent, tok.id, "V1", f"{len(backs)} Backchannel values on one token")
        backs = []
    if cocos and backs:
        out.add(pos, sent, tok.id, "V1", "token bears both Coconstruct and Backchannel",
                Severity.WARNING)
    pointers = []
    for key, cls, values in (("Coconstruct", CoconstructPointer, cocos),
                             ("Backchannel", BackchannelPointer, backs)):
        for value in values:
            try:
                pointers.append((key, cls.parse(value)))
            except PointerError as exc:
                out.add(pos, sent, tok.id, "V1", f"{key}: {exc}")
    for key, ptr in pointers:
        if key == "Coconstruct" and not is_coconstruct_label(ptr.deprel):
            out.add(pos, sent, tok.id, "V7", f"invalid Coconstruct relation {ptr.deprel!r}")
        tpos = doc.sent_index.get(ptr.target_sent_id)
        if tpos is None:
            out.add(pos, sent, tok.id, "V2", f"{key} target sentence {ptr.target_sent_id!r} not found")
            continue
        if tpos >= pos:
            out.add(pos, sent, tok.id, "V3",
                    f"{key} target sentence {ptr.target_sent_id!r} does not precede the bearer")
            continue
        target = doc.sentences[tpos]
        if target.word(ptr.target_tok_id) is None:
            out.add(pos, sent, tok.id, "V4",
                    f"{key} target token {ptr.target_tok_id} not in sentence {ptr.target_sent_id!r}")
            continue
        if key == "Coconstruct" and tpos == pos - 1:
            a = sentence_speaker(target, speaker_keys)
            b = sentence_speaker(sent, speaker_keys)
            if a is not None and a == b:
                out.add(pos, sent, tok.id, "V9",
                        f"contiguous sentences by the same speaker {a!r} should be merged",
                        Severity.WARNING)
        if key == "Backchannel" and tok.head != 0:
            out.add(pos, sent, tok.id, "V10", "backchannel bearer is not the sentence root",
                    Severity.WARNING)


def _check_promotion_and_head(pos, sent, tok, by_id, repaired, out):
    promotions = tok.misc_values("Promotion")
    for value in promotions:
        if not is_relation_label(value):
            out.add(pos, sent, tok.id, "V6", f"invalid Promotion relation {value!r}")
    if promotions and tok.get_misc("Scrap") != "Yes":
        out.add(pos, sent, tok.id, "V6", "Promotion without Scrap=Yes", Severity.WARNING)
    for value in tok.misc_values("Head"):
        if value not in ("Word", "Position"):
            out.add(pos, sent, tok.id, "V5", f"Head must be Word or Position, not {value!r}")
            continue
        parent = by_id.get(tok.head)
        if parent is None or (parent.get_misc("Promotion") is None
                              and (pos, parent.id) not in repaired):
            out.add(pos, sent, tok.id, "V5",
                    "Head= on a token whose head is neither promoted nor repaired")


class LegacyImportError(ValueError):
    def __init__(self, issues: list[ValidationIssue]):
        self.issues = issues
        super().__init__(f"{len(issues)} incomplete AttachTo/Rel pair(s)")


def import_legacy_rhapsodie(doc: Document) -> Document:
    """Rewrite ``AttachTo``/``Rel`` pairs as scheme pointers; ``conj:dicto`` becomes ``conj:reform``.

    The input document is left untouched.
    """
    new = copy.deepcopy(doc)
    out = _Collector()
    for pos, sent in enumerate(new.sentences):
        for tok in sent.tokens:
            if tok.deprel == "conj:dicto":
                tok.deprel = "conj:reform"
            tok.deps = [(h, "conj:reform" if lab == "conj:dicto" else lab) for h, lab in tok.deps]
            _rewrite_legacy(pos, sent, tok, out)
    if out.items:
        raise LegacyImportError(out.sorted())
    return new


def _rewrite_legacy(pos: int, sent: Sentence, tok: Token, out: _Collector) -> None:
    attach = tok.get_misc("AttachTo")
    rel = tok.get_misc("Rel")
    if attach is None and rel is None:
        return
    tok_id = tok.id if tok.is_word else None
    if attach is None or rel is None:
        missing = "Rel" if rel is None else "AttachTo"
        out.add(pos, sent, tok_id, "V1", f"legacy pair incomplete: {missing} missing")
        return
    if rel == "conj:dicto":
        rel = "conj:reform"
    if rel == "discourse" or rel.startswith("discourse:"):
        key, value = "Backchannel", attach
    else:
        key, value = "Coconstruct", f"{rel}{SEP}{attach}"
    misc = []
    for k, v in tok.misc:
        if k == "AttachTo" and v is not None:
            misc.append((key, value))
        elif k != "Rel" or v is None:
            misc.append((k, v))
    tok.misc = misc
