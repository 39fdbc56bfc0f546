from __future__ import annotations

import pytest

from conftest import DATA
from coconstruct.conllu import load, parse_document
from coconstruct.detect import (
    BackchannelLexicon, CandidateKind, DetectConfig, MissingSpeakerError, Provenance,
    candidates_to_jsonl, candidates_to_tsv, derive_lexicon, detect_backchannels,
    detect_incompletions, is_interrogative,
)

DIALOGUE = DATA / "detect" / "dialogue30.conllu"
PLANTED_BACKCHANNELS = {("d01", "d02"), ("d04", "d05"), ("d10", "d11"), ("d14", "d15"),
                        ("d17", "d18"), ("d21", "d22"), ("d24", "d25")}
PLANTED_INCOMPLETIONS = {("d04", "d05"), ("d09", "d10"), ("d12", "d13"), ("d26", "d27")}


@pytest.fixture
def dialogue():
    return load(DIALOGUE)


@pytest.fixture
def lexicon():
    return BackchannelLexicon.from_file(DATA / "detect" / "lexicon.txt")


def _pairs(cands):
    return {(c.first_sent_id, c.second_sent_id) for c in cands}


def test_lexicon_file(lexicon):
    assert lexicon.provenance is Provenance.FILE
    assert lexicon.entries == frozenset({"mhm", "aha", "ja", "tako", "dobro", "mh", "aja"})
    assert "MHM" in lexicon
    assert BackchannelLexicon.from_lines(lexicon.to_text().splitlines()) == lexicon


def test_backchannels(dialogue, lexicon):
    found = detect_backchannels(dialogue, lexicon)
    assert _pairs(found) == PLANTED_BACKCHANNELS
    assert all(c.kind is CandidateKind.BACKCHANNEL for c in found)
    tako = next(c for c in found if c.second_sent_id == "d11")
    assert tako.trigger_tokens == (1, 3, 5, 7) and tako.score == 4


def test_backchannels_all_tokens(dialogue, lexicon):
    found = detect_backchannels(dialogue, lexicon, DetectConfig(all_tokens=True))
    assert _pairs(found) == PLANTED_BACKCHANNELS - {("d21", "d22")}


def test_incompletions(dialogue):
    assert _pairs(detect_incompletions(dialogue)) == PLANTED_INCOMPLETIONS


def test_incompletions_custom_punctuation(dialogue):
    found = detect_incompletions(dialogue, DetectConfig(final_punct=frozenset(".?!")))
    assert _pairs(found) == PLANTED_INCOMPLETIONS | {("d17", "d18")}


def test_question_blocks_backchannel(dialogue, lexicon):
    # d06 asks a question and d07 "ja ." answers it
    assert is_interrogative(dialogue.sentence("d06"))
    assert ("d06", "d07") not in _pairs(detect_backchannels(dialogue, lexicon))


def test_empty_lexicon(dialogue):
    with pytest.raises(ValueError):
        detect_backchannels(dialogue, BackchannelLexicon(frozenset()))


def test_missing_speaker():
    doc = parse_document("# sent_id = a\n1\tja\tja\tINTJ\t_\t_\t0\troot\t_\t_\n\n")
    with pytest.raises(MissingSpeakerError) as err:
        detect_incompletions(doc)
    assert err.value.sent_ids == ["a"]


def test_derived_lexicon(dialogue):
    lex = derive_lexicon(dialogue, min_count=2)
    assert lex.provenance is Provenance.DERIVED
    assert {"mhm", "aha", "ja", "tako", "mh"} <= lex.entries
    assert "dobro" not in lex.entries
    assert derive_lexicon(dialogue, min_count=1).entries >= {"dobro", "aja"}


def test_reports(dialogue, lexicon):
    found = detect_backchannels(dialogue, lexicon)
    rows = candidates_to_tsv(found).splitlines()
    assert rows[0] == "kind\tfirst_sent_id\tsecond_sent_id\ttrigger_tokens\tscore"
    assert "Backchannel\td10\td11\t1,3,5,7\t4" in rows
    assert len(candidates_to_jsonl(found).splitlines()) == 7
