"""CoNLL-U data model with a lossless parser and serializer.

Unmodified documents serialize back to their input bytes, modulo CRLF and
trailing-newline normalization.  Nothing here knows about the coconstruction
scheme; MISC is kept as an ordered list so scheme features can live there
next to ``SpaceAfter`` and friends.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional, Union

# Word ids are ints; multiword ranges and empty nodes are (start, sep, end)
# tuples, e.g. (3, "-", 4) for "3-4" and (5, ".", 1) for "5.1".
TokenId = Union[int, tuple]
# One FEATS or MISC entry.  value None marks a raw segment without "=".
Pair = tuple

_COMMENT_RE = re.compile(r"^#\s*([^=]*?)\s*=\s?(.*)$")
_WORD_RE = re.compile(r"^[1-9][0-9]*$")
_RANGE_RE = re.compile(r"^([1-9][0-9]*)-([1-9][0-9]*)$")
_EMPTY_RE = re.compile(r"^([0-9]+)\.([1-9][0-9]*)$")


class ParseError(ValueError):
    """Malformed CoNLL-U input; ``line`` is 1-based."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


def parse_id(raw: str) -> TokenId:
    if _WORD_RE.match(raw):
        return int(raw)
    m = _RANGE_RE.match(raw)
    if m:
        return (int(m.group(1)), "-", int(m.group(2)))
    m = _EMPTY_RE.match(raw)
    if m:
        return (int(m.group(1)), ".", int(m.group(2)))
    raise ValueError(f"bad token id {raw!r}")


def format_id(tid: TokenId) -> str:
    if isinstance(tid, int):
        return str(tid)
    return f"{tid[0]}{tid[1]}{tid[2]}"


def parse_pairs(raw: str) -> list[Pair]:
    if raw == "_":
        return []
    pairs = []
    for segment in raw.split("|"):
        key, eq, value = segment.partition("=")
        pairs.append((key, value) if eq else (segment, None))
    return pairs


def format_pairs(pairs: list[Pair]) -> str:
    if not pairs:
        return "_"
    return "|".join(k if v is None else f"{k}={v}" for k, v in pairs)


def parse_deps(raw: str) -> list[tuple[str, str]]:
    if raw == "_":
        return []
    deps = []
    for segment in raw.split("|"):
        head, colon, label = segment.partition(":")
        if not colon:
            raise ValueError(f"bad DEPS entry {segment!r}")
        deps.append((head, label))
    return deps


def format_deps(deps: list[tuple[str, str]]) -> str:
    if not deps:
        return "_"
    return "|".join(f"{h}:{label}" for h, label in deps)


@dataclass
class Token:
    id: TokenId
    form: str
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: list[Pair] = field(default_factory=list)
    head: Optional[int] = None
    deprel: str = "_"
    deps: list[tuple[str, str]] = field(default_factory=list)
    misc: list[Pair] = field(default_factory=list)

    @property
    def is_word(self) -> bool:
        return isinstance(self.id, int)

    @property
    def is_multiword(self) -> bool:
        return isinstance(self.id, tuple) and self.id[1] == "-"

    @property
    def is_empty(self) -> bool:
        return isinstance(self.id, tuple) and self.id[1] == "."

    @property
    def space_after(self) -> bool:
        return self.get_misc("SpaceAfter") != "No"

    def get_misc(self, key: str) -> Optional[str]:
        for k, v in self.misc:
            if k == key and v is not None:
                return v
        return None

    def misc_values(self, key: str) -> list[str]:
        return [v for k, v in self.misc if k == key and v is not None]

    def set_misc(self, key: str, value: str) -> None:
        """Replace the first ``key`` entry in place, or append one."""
        for i, (k, v) in enumerate(self.misc):
            if k == key and v is not None:
                self.misc[i] = (key, value)
                self.misc[i + 1:] = [p for p in self.misc[i + 1:] if p[0] != key or p[1] is None]
                return
        self.misc.append((key, value))

    def del_misc(self, *keys: str) -> None:
        self.misc = [(k, v) for k, v in self.misc if v is None or k not in keys]

    def to_line(self) -> str:
        return "\t".join((
            format_id(self.id), self.form, self.lemma, self.upos, self.xpos,
            format_pairs(self.feats),
            "_" if self.head is None else str(self.head),
            self.deprel, format_deps(self.deps), format_pairs(self.misc),
        ))


def parse_token(line: str) -> Token:
    cols = line.split("\t")
    if len(cols) != 10:
        raise ValueError(f"expected 10 tab-separated columns, found {len(cols)}")
    tid = parse_id(cols[0])
    head_raw = cols[6]
    if head_raw == "_":
        head = None
    elif head_raw.isdigit():
        head = int(head_raw)
    else:
        raise ValueError(f"bad HEAD {head_raw!r}")
    return Token(
        id=tid, form=cols[1], lemma=cols[2], upos=cols[3], xpos=cols[4],
        feats=parse_pairs(cols[5]), head=head, deprel=cols[7],
        deps=parse_deps(cols[8]), misc=parse_pairs(cols[9]),
    )


def comment_key(line: str) -> Optional[tuple[str, str]]:
    m = _COMMENT_RE.match(line)
    return (m.group(1), m.group(2)) if m else None


@dataclass
class Sentence:
    """One CoNLL-U block.

    ``comments`` holds the raw comment lines in order; ``sent_id`` and
    ``text`` are views onto them so rewriting metadata keeps its position.
    """

    comments: list[str] = field(default_factory=list)
    tokens: list[Token] = field(default_factory=list)
    document_position: int = 0

    def meta(self, key: str) -> Optional[str]:
        for line in self.comments:
            kv = comment_key(line)
            if kv and kv[0] == key:
                return kv[1]
        return None

    def set_meta(self, key: str, value: str) -> None:
        new = f"# {key} = {value}"
        for i, line in enumerate(self.comments):
            kv = comment_key(line)
            if kv and kv[0] == key:
                self.comments[i] = new
                return
        self.comments.append(new)

    def remove_meta(self, *keys: str) -> None:
        kept = []
        for line in self.comments:
            kv = comment_key(line)
            if kv and kv[0] in keys:
                continue
            kept.append(line)
        self.comments = kept

    @property
    def sent_id(self) -> Optional[str]:
        return self.meta("sent_id")

    @sent_id.setter
    def sent_id(self, value: str) -> None:
        self.set_meta("sent_id", value)

    @property
    def text(self) -> Optional[str]:
        return self.meta("text")

    @text.setter
    def text(self, value: str) -> None:
        self.set_meta("text", value)

    @property
    def words(self) -> list[Token]:
        return [t for t in self.tokens if t.is_word]

    def word(self, wid: int) -> Optional[Token]:
        for t in self.tokens:
            if t.id == wid:
                return t
        return None

    def ids_contiguous(self) -> bool:
        return [t.id for t in self.words] == list(range(1, len(self.words) + 1))

    def rebuild_text(self) -> str:
        """Surface text from forms, honoring SpaceAfter=No and multiword tokens."""
        out = []
        skip_until = 0
        for t in self.tokens:
            if t.is_empty:
                continue
            if t.is_multiword:
                out.append(t.form)
                if t.space_after:
                    out.append(" ")
                skip_until = t.id[2]
                continue
            if t.id <= skip_until:
                continue
            out.append(t.form)
            if t.space_after:
                out.append(" ")
        return "".join(out).rstrip(" ")

    def to_text(self) -> str:
        lines = list(self.comments) + [t.to_line() for t in self.tokens]
        return "\n".join(lines) + "\n"


@dataclass
class Document:
    sentences: list[Sentence] = field(default_factory=list)
    sent_index: dict[str, int] = field(default_factory=dict)
    # non-fatal parse findings, e.g. word ids that are not 1..n
    warnings: list[str] = field(default_factory=list)

    def __post_init__(self):
        if self.sentences and not self.sent_index:
            self.reindex()

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def __len__(self) -> int:
        return len(self.sentences)

    def reindex(self) -> None:
        self.sent_index = {}
        for i, sent in enumerate(self.sentences):
            sent.document_position = i
            sid = sent.sent_id
            if sid is not None:
                if sid in self.sent_index:
                    raise ValueError(f"duplicate sent_id {sid!r}")
                self.sent_index[sid] = i

    def sentence(self, sent_id: str) -> Optional[Sentence]:
        pos = self.sent_index.get(sent_id)
        return None if pos is None else self.sentences[pos]


def _decode(source: Union[str, bytes]) -> str:
    if isinstance(source, bytes):
        source = source.decode("utf-8-sig")
    elif source.startswith("\ufeff"):
        source = source[1:]
    return source.replace("\r\n", "\n")


def normalize(source: Union[str, bytes]) -> str:
    """The canonical form serialization reproduces: LF endings, one blank line at the end."""
    text = _decode(source).rstrip("\n")
    return text + "\n\n" if text else ""


def parse_document(source: Union[str, bytes]) -> Document:
    text = _decode(source)
    doc = Document()
    sent: Optional[Sentence] = None
    seen_ids: dict[TokenId, int] = {}
    start_line = 0
    id_lines: dict[str, int] = {}

    def close() -> None:
        nonlocal sent
        if sent is None:
            return
        sent.document_position = len(doc.sentences)
        sid = sent.sent_id
        if sid is not None:
            if sid in doc.sent_index:
                raise ParseError(f"duplicate sent_id {sid!r} (first at line {id_lines[sid]})",
                                 _sent_id_line(sent, start_line))
            doc.sent_index[sid] = sent.document_position
            id_lines[sid] = _sent_id_line(sent, start_line)
        if not sent.ids_contiguous():
            doc.warnings.append(f"line {start_line}: word ids of sentence {sid!r} are not 1..n")
        doc.sentences.append(sent)
        sent = None

    lines = text.split("\n")
    for lineno, line in enumerate(lines, 1):
        if line == "":
            close()
            continue
        if sent is None:
            sent = Sentence()
            seen_ids = {}
            start_line = lineno
        if line.startswith("#"):
            if sent.tokens:
                raise ParseError("comment line after token lines", lineno)
            sent.comments.append(line)
            continue
        try:
            tok = parse_token(line)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if tok.id in seen_ids:
            raise ParseError(f"duplicate token id {format_id(tok.id)} "
                             f"(first at line {seen_ids[tok.id]})", lineno)
        seen_ids[tok.id] = lineno
        sent.tokens.append(tok)
    close()
    return doc


def _sent_id_line(sent: Sentence, start_line: int) -> int:
    for offset, line in enumerate(sent.comments):
        kv = comment_key(line)
        if kv and kv[0] == "sent_id":
            return start_line + offset
    return start_line


def serialize_document(doc: Document) -> str:
    return "".join(s.to_text() + "\n" for s in doc.sentences)


def load(path: Union[str, Path]) -> Document:
    return parse_document(Path(path).read_bytes())


def dump(doc: Document, path: Union[str, Path]) -> None:
    Path(path).write_text(serialize_document(doc), encoding="utf-8")
