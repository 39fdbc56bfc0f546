"""Speaker-based to dependency-based conversion.

Sentences linked by pointers are clustered into rectional units.  Each unit
gets an intermediate graph in which pointer-created edges are tagged
``attach`` and the speaker-based edges they supersede are tagged ``sb``;
projecting that graph (keep tree, adopt attach, drop sb) yields one UD tree
per unit.
"""

from __future__ import annotations

import copy
import enum
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Sequence

from .conllu import Document, Sentence, Token, comment_key
from .scheme import (
    BACKCHANNEL_DEPREL, DEFAULT_SPEAKER_KEYS, REPAIR, BackchannelPointer,
    CoconstructPointer, HeadMode, PointerError, SchemeFeatures, Severity,
    parse_scheme_features, sentence_speaker, validate_document,
)

VIEW_MARKER_KEY = "coconstruct_view"
UNIT_JOINER = "+"


class ConversionError(Exception):
    def __init__(self, message: str, unit_id: Optional[str] = None):
        self.unit_id = unit_id
        self.detail = message
        super().__init__(f"unit {unit_id}: {message}" if unit_id else message)


class TokenRef(NamedTuple):
    """A word in the document: sentence position and word id (0 = the sentence's root slot)."""

    sent: int
    tok: int


class EdgeTag(str, enum.Enum):
    TREE = "tree"
    ATTACH = "attach"
    SB = "sb"


@dataclass(frozen=True)
class GraphEdge:
    head: TokenRef
    dep: TokenRef
    label: str
    tag: EdgeTag = EdgeTag.TREE


@dataclass
class RectionalUnit:
    id: str
    members: list[Sentence]
    merged_tokens: list[Token]
    # (sentence position, old id) -> new id, for words, ranges and empty nodes
    renumber: dict = field(default_factory=dict)
    edges: list[GraphEdge] = field(default_factory=list)
    # MISC keys used up by the conversion, per word
    consumed: dict = field(default_factory=dict)

    @property
    def positions(self) -> list[int]:
        return [s.document_position for s in self.members]

    def new_id(self, ref: TokenRef) -> int:
        return 0 if ref.tok == 0 else self.renumber[(ref.sent, ref.tok)]


class _UnionFind:
    def __init__(self, n: int):
        self.parent = list(range(n))

    def find(self, x: int) -> int:
        while self.parent[x] != x:
            self.parent[x] = self.parent[self.parent[x]]
            x = self.parent[x]
        return x

    def union(self, a: int, b: int) -> None:
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            # keep the earliest sentence as representative
            if rb < ra:
                ra, rb = rb, ra
            self.parent[rb] = ra


def _features(tok: Token) -> SchemeFeatures:
    try:
        return parse_scheme_features(tok.misc)
    except (PointerError, ValueError) as exc:
        raise ConversionError(f"token {tok.id}: {exc}") from None


def _lenient_pointers(tok: Token):
    for key, cls in (("Coconstruct", CoconstructPointer), ("Backchannel", BackchannelPointer)):
        for value in tok.misc_values(key):
            try:
                yield key, cls.parse(value)
            except PointerError:
                pass


def pointer_links(doc: Document, include_backchannels: bool = True) -> list[tuple[int, int]]:
    """(bearer position, target position) for every resolvable pointer, in document order."""
    links = []
    for pos, sent in enumerate(doc.sentences):
        for tok in sent.words:
            for key, ptr in _lenient_pointers(tok):
                if key == "Backchannel" and not include_backchannels:
                    continue
                target = doc.sent_index.get(ptr.target_sent_id)
                if target is not None:
                    links.append((pos, target))
    return links


def _unit_id(members: Sequence[Sentence]) -> str:
    return UNIT_JOINER.join(s.sent_id or f"#{s.document_position}" for s in members)


def _merge_tokens(members: Sequence[Sentence]) -> tuple[list[Token], dict]:
    merged: list[Token] = []
    renumber: dict = {}
    used_empty: dict[int, int] = {}
    offset = 0
    for sent in members:
        pos = sent.document_position
        local: dict = {}
        for tok in sent.tokens:
            tid = tok.id
            if tok.is_word:
                local[tid] = tid + offset
            elif tok.is_multiword:
                local[tid] = (tid[0] + offset, "-", tid[2] + offset)
            else:
                word = tid[0] + offset
                sub = tid[2] + (used_empty.get(word, 0) if offset else 0)
                local[tid] = (word, ".", sub)
        for tid, new in local.items():
            renumber[(pos, tid)] = new
            if isinstance(new, tuple) and new[1] == ".":
                used_empty[new[0]] = max(used_empty.get(new[0], 0), new[2])
        for tok in sent.tokens:
            new_tok = copy.deepcopy(tok)
            new_tok.id = local[tok.id]
            if tok.head:
                new_tok.head = tok.head + offset
            new_tok.deps = [(_remap_dep_head(h, local, offset), label) for h, label in tok.deps]
            merged.append(new_tok)
        offset += len(sent.words)
    return merged, renumber


def _remap_dep_head(head: str, local: dict, offset: int) -> str:
    if head == "0" or not offset:
        return head
    if head.isdigit():
        return str(int(head) + offset)
    word, _, sub = head.partition(".")
    new = local.get((int(word), ".", int(sub)))
    return f"{new[0]}.{new[2]}" if new else head


def cluster_units(doc: Document, include_backchannels: bool = True) -> list[RectionalUnit]:
    """Group sentences connected by pointers into rectional units (edges left empty).

    Units come in order of their first member; tokens are concatenated in
    document order and renumbered 1..n.
    """
    uf = _UnionFind(len(doc.sentences))
    for bearer, target in pointer_links(doc, include_backchannels):
        uf.union(bearer, target)
    groups: dict[int, list[Sentence]] = {}
    for pos, sent in enumerate(doc.sentences):
        sent.document_position = pos
        groups.setdefault(uf.find(pos), []).append(sent)
    units = []
    for root in sorted(groups, key=lambda r: groups[r][0].document_position):
        members = groups[root]
        tokens, renumber = _merge_tokens(members)
        units.append(RectionalUnit(id=_unit_id(members), members=members,
                                   merged_tokens=tokens, renumber=renumber))
    return units


class _Graph:
    """Edge list with an index of incoming edges per dependent."""

    def __init__(self):
        self.edges: list[GraphEdge] = []
        self.incoming: dict[TokenRef, list[int]] = {}

    def add(self, head: TokenRef, dep: TokenRef, label: str, tag: EdgeTag) -> int:
        self.edges.append(GraphEdge(head, dep, label, tag))
        self.incoming.setdefault(dep, []).append(len(self.edges) - 1)
        return len(self.edges) - 1

    def demote(self, idx: int) -> None:
        self.edges[idx] = replace(self.edges[idx], tag=EdgeTag.SB)

    def tree_edge(self, dep: TokenRef) -> Optional[int]:
        for idx in self.incoming.get(dep, ()):
            if self.edges[idx].tag is EdgeTag.TREE:
                return idx
        return None

    def effective_edge(self, dep: TokenRef) -> Optional[int]:
        """The incoming edge projection would keep: attach before tree."""
        live = [i for i in self.incoming.get(dep, ()) if self.edges[i].tag is not EdgeTag.SB]
        attach = [i for i in live if self.edges[i].tag is EdgeTag.ATTACH]
        return (attach or live or [None])[0]


def build_intermediate_graph(unit: RectionalUnit, doc: Document,
                             include_backchannels: bool = True) -> RectionalUnit:
    graph = _Graph()
    members = set(unit.positions)
    features: dict[TokenRef, SchemeFeatures] = {}
    children: dict[TokenRef, list[Token]] = {}
    for sent in unit.members:
        pos = sent.document_position
        for tok in sent.words:
            if tok.head is None:
                raise ConversionError(f"token {sent.sent_id}::{tok.id} has no head", unit.id)
            ref = TokenRef(pos, tok.id)
            graph.add(TokenRef(pos, tok.head), ref, tok.deprel, EdgeTag.TREE)
            children.setdefault(TokenRef(pos, tok.head), []).append(tok)
            try:
                features[ref] = _features(tok)
            except ConversionError as exc:
                raise ConversionError(f"{sent.sent_id}: {exc.detail}", unit.id) from None

    consumed: dict[TokenRef, set[str]] = {}
    resolved_scraps: set[TokenRef] = set()

    def consume(ref: TokenRef, *keys: str) -> None:
        consumed.setdefault(ref, set()).update(keys)

    def lift(src: TokenRef, bearer: TokenRef) -> None:
        for child in children.get(src, ()):
            child_ref = TokenRef(src.sent, child.id)
            mode = features[child_ref].head_mode
            if mode is HeadMode.POSITION:
                idx = graph.tree_edge(child_ref)
                if idx is not None:
                    graph.demote(idx)
                graph.add(bearer, child_ref, child.deprel, EdgeTag.ATTACH)
            if mode is not None:
                consume(child_ref, "Head")

    def resolve(ptr) -> TokenRef:
        tpos = doc.sent_index.get(ptr.target_sent_id)
        if tpos is None or tpos not in members:
            raise ConversionError(f"pointer target {ptr} outside the unit", unit.id)
        return TokenRef(tpos, ptr.target_tok_id)

    for sent in unit.members:
        pos = sent.document_position
        for tok in sent.words:
            bearer = TokenRef(pos, tok.id)
            feats = features[bearer]
            ptr = feats.coconstruct
            if ptr is not None:
                target = resolve(ptr)
                consume(bearer, "Coconstruct")
                if ptr.deprel == REPAIR:
                    idx = graph.effective_edge(target)
                    if idx is None:
                        raise ConversionError(f"repair target {ptr} has no incoming edge", unit.id)
                    old = graph.edges[idx]
                    graph.demote(idx)
                    graph.add(old.head, bearer, old.label, EdgeTag.ATTACH)
                    graph.add(bearer, target, "reparandum", EdgeTag.ATTACH)
                    lift(target, bearer)
                else:
                    scraps = [c for c in children.get(target, ())
                              if c.deprel == ptr.deprel
                              and features[TokenRef(target.sent, c.id)].promotion is not None
                              and TokenRef(target.sent, c.id) not in resolved_scraps]
                    if len(scraps) > 1:
                        names = ", ".join(f"{c.id}:{c.form}" for c in scraps)
                        raise ConversionError(
                            f"ambiguous scrap for {ptr}: tokens {names} of sentence "
                            f"{ptr.target_sent_id}", unit.id)
                    graph.add(target, bearer, ptr.deprel, EdgeTag.ATTACH)
                    if scraps:
                        scrap = TokenRef(target.sent, scraps[0].id)
                        resolved_scraps.add(scrap)
                        idx = graph.tree_edge(scrap)
                        if idx is not None:
                            graph.demote(idx)
                        graph.add(bearer, scrap, features[scrap].promotion, EdgeTag.ATTACH)
                        consume(scrap, "Promotion")
                        lift(scrap, bearer)
            back = feats.backchannel
            if back is not None and include_backchannels:
                target = resolve(back)
                graph.add(target, bearer, BACKCHANNEL_DEPREL, EdgeTag.ATTACH)
                consume(bearer, "Backchannel")
    return replace(unit, edges=graph.edges, consumed=consumed)


def _project_heads(unit: RectionalUnit) -> dict[TokenRef, GraphEdge]:
    incoming: dict[TokenRef, list[GraphEdge]] = {}
    for edge in unit.edges:
        if edge.tag is not EdgeTag.SB:
            incoming.setdefault(edge.dep, []).append(edge)
    chosen = {}
    for sent in unit.members:
        for tok in sent.words:
            ref = TokenRef(sent.document_position, tok.id)
            live = incoming.get(ref, [])
            attach = [e for e in live if e.tag is EdgeTag.ATTACH]
            if len(attach) > 1:
                heads = ", ".join(f"{e.head.tok}:{e.label}" for e in attach)
                raise ConversionError(f"token {sent.sent_id}::{tok.id} receives "
                                      f"several attachments ({heads})", unit.id)
            if not live:
                raise ConversionError(f"token {sent.sent_id}::{tok.id} lost its head", unit.id)
            chosen[ref] = attach[0] if attach else live[0]
    roots = [ref for ref, e in chosen.items() if e.head.tok == 0]
    if len(roots) != 1:
        names = {s.document_position: s.sent_id for s in unit.members}
        where = ", ".join(f"{names[r.sent]}::{r.tok}" for r in roots)
        raise ConversionError(f"projection yields {len(roots)} roots ({where}); a member "
                              f"root is not covered by any pointer", unit.id)
    for start in chosen:
        seen = set()
        node = start
        while node.tok != 0:
            if node in seen:
                raise ConversionError(f"projection has a cycle through {node.sent}::{node.tok}",
                                      unit.id)
            seen.add(node)
            node = chosen[node].head
    return chosen


def _merged_comments(unit: RectionalUnit, speaker_keys: Sequence[str]) -> list[str]:
    skip = {"sent_id", "text", *speaker_keys}
    lines: list[str] = []
    for sent in unit.members:
        for line in sent.comments:
            kv = comment_key(line)
            if kv and kv[0] in skip:
                continue
            if line not in lines:
                lines.append(line)
    lines.append(f"# sent_id = {unit.id}")
    lines.append(f"# text = {' '.join(s.rebuild_text() for s in unit.members)}")
    return lines


def _token_source(unit: RectionalUnit):
    """Yield (merged token, source sentence, TokenRef or None) in merged order."""
    i = 0
    for sent in unit.members:
        for tok in sent.tokens:
            ref = TokenRef(sent.document_position, tok.id) if tok.is_word else None
            yield unit.merged_tokens[i], sent, ref
            i += 1


def _migrate_metadata(tok: Token, source: Sentence, speaker_keys: Sequence[str]) -> None:
    speaker = sentence_speaker(source, speaker_keys)
    if speaker is not None:
        tok.set_misc("Speaker", speaker)
    tok.set_misc("CoconstructFrom", source.sent_id or f"#{source.document_position}")


def project_dependency_view(unit: RectionalUnit,
                            speaker_keys: Sequence[str] = DEFAULT_SPEAKER_KEYS) -> Sentence:
    """One UD tree for the unit: tree edges kept, attach edges adopted, sb edges dropped.

    A single-member unit comes back as a copy of its sentence.
    """
    if len(unit.members) == 1:
        _project_heads(unit)
        return copy.deepcopy(unit.members[0])
    chosen = _project_heads(unit)
    tokens = []
    for merged, source, ref in _token_source(unit):
        tok = copy.deepcopy(merged)
        if ref is not None:
            edge = chosen[ref]
            tok.head = unit.new_id(edge.head)
            tok.deprel = edge.label
            tok.del_misc(*unit.consumed.get(ref, ()))
            _migrate_metadata(tok, source, speaker_keys)
        tokens.append(tok)
    return Sentence(comments=_merged_comments(unit, speaker_keys), tokens=tokens)


def intermediate_sentence(unit: RectionalUnit,
                          speaker_keys: Sequence[str] = DEFAULT_SPEAKER_KEYS) -> Sentence:
    """The unit as CoNLL-U: HEAD/DEPREL keep the speaker-based tree, DEPS carry every graph edge.

    DEPS entries are ``head:label`` for tree edges and ``head:label/attach`` or
    ``head:label/sb`` for the others.
    """
    by_dep: dict[TokenRef, list[GraphEdge]] = {}
    for edge in unit.edges:
        by_dep.setdefault(edge.dep, []).append(edge)
    multi = len(unit.members) > 1
    tokens = []
    for merged, source, ref in _token_source(unit):
        tok = copy.deepcopy(merged)
        if ref is not None:
            entries = []
            for e in by_dep.get(ref, ()):
                label = e.label if e.tag is EdgeTag.TREE else f"{e.label}/{e.tag.value}"
                entries.append((unit.new_id(e.head), label))
            tok.deps = [(str(h), label) for h, label in sorted(entries)]
            if multi:
                _migrate_metadata(tok, source, speaker_keys)
        tokens.append(tok)
    if multi:
        comments = _merged_comments(unit, speaker_keys)
    else:
        comments = list(unit.members[0].comments)
    comments.append(f"# {VIEW_MARKER_KEY} = intermediate")
    return Sentence(comments=comments, tokens=tokens)


def is_intermediate(doc: Document) -> bool:
    for sent in doc:
        if sent.meta(VIEW_MARKER_KEY) == "intermediate":
            return True
        for tok in sent.words:
            if any(label.endswith(("/attach", "/sb")) for _, label in tok.deps):
                return True
    return False


def _rewrite_outside_pointers(doc: Document, units: list[RectionalUnit],
                              dependency: list[Sentence]) -> None:
    """Re-aim Backchannel pointers left unconsumed (merge disabled) at the converted sentences."""
    where: dict[TokenRef, tuple[str, int]] = {}
    for unit in units:
        for (pos, old), new in unit.renumber.items():
            if isinstance(old, int):
                where[TokenRef(pos, old)] = (unit.id, new)
    for sent in dependency:
        for tok in sent.words:
            value = tok.get_misc("Backchannel")
            if value is None:
                continue
            ptr = BackchannelPointer.parse(value)
            pos = doc.sent_index.get(ptr.target_sent_id)
            loc = where.get(TokenRef(pos, ptr.target_tok_id)) if pos is not None else None
            if loc is not None:
                tok.set_misc("Backchannel", str(BackchannelPointer(*loc)))


def convert_document(doc: Document, include_backchannels: bool = True,
                     speaker_keys: Sequence[str] = DEFAULT_SPEAKER_KEYS,
                     validate: bool = True) -> tuple[Document, Document]:
    """Return the (intermediate, dependency-based) views of a speaker-based document."""
    if validate:
        errors = [i for i in validate_document(doc, speaker_keys) if i.severity is Severity.ERROR]
        if errors:
            listed = "; ".join(f"{i.code} {i.sent_id}:{i.tok_id or '-'} {i.message}"
                               for i in errors[:5])
            more = f" (+{len(errors) - 5} more)" if len(errors) > 5 else ""
            raise ConversionError(f"document is not scheme-valid: {listed}{more}")
    units = cluster_units(doc, include_backchannels)
    intermediate, dependency = [], []
    for unit in units:
        try:
            unit = build_intermediate_graph(unit, doc, include_backchannels)
            dependency.append(project_dependency_view(unit, speaker_keys))
            intermediate.append(intermediate_sentence(unit, speaker_keys))
        except ConversionError as exc:
            if exc.unit_id is None:
                raise ConversionError(exc.detail, unit.id) from None
            raise
    if not include_backchannels:
        _rewrite_outside_pointers(doc, units, dependency)
    return Document(intermediate), Document(dependency)
