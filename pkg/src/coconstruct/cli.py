"""Command-line front end: ``coconstruct {validate,convert,detect,stats,import-legacy}``.

Exit status: 0 success, 1 validation or conversion errors (warnings too under
``--strict``), 2 unreadable or unparsable input.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .conllu import Document, ParseError, parse_document, serialize_document
from .convert import ConversionError, convert_document, is_intermediate
from .detect import (
    BackchannelLexicon, DetectConfig, FINAL_PUNCT, MissingSpeakerError, Provenance,
    candidates_to_jsonl, candidates_to_tsv, derive_lexicon, detect_backchannels,
    detect_incompletions,
)
from .scheme import (
    DEFAULT_SPEAKER_KEYS, LegacyImportError, Severity, import_legacy_rhapsodie,
    issues_to_jsonl, issues_to_tsv, validate_document,
)
from .stats import SchemeStats, compute_stats, render_stats

log = logging.getLogger("coconstruct")

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 1, 2


class InputError(Exception):
    pass


def speaker_keys_from_env() -> tuple[str, ...]:
    raw = os.environ.get("COCONSTRUCT_SPEAKER_KEYS", "")
    keys = tuple(k.strip() for k in raw.split(",") if k.strip())
    return keys or DEFAULT_SPEAKER_KEYS


def _read(name: str, stdin) -> Document:
    try:
        if name == "-":
            data = stdin.buffer.read() if hasattr(stdin, "buffer") else stdin.read()
        else:
            data = Path(name).read_bytes()
        return parse_document(data)
    except OSError as exc:
        raise InputError(f"{name}: {exc.strerror or exc}") from None
    except (ParseError, UnicodeDecodeError) as exc:
        raise InputError(f"{name}: {exc}") from None


def read_inputs(names: list[str], stdin) -> list[Document]:
    names = names or ["-"]
    with ThreadPoolExecutor() as pool:
        futures = [pool.submit(_read, n, stdin) for n in names]
        return [f.result() for f in futures]


def _format_issues(issues, fmt: str) -> str:
    return issues_to_jsonl(issues) if fmt == "json" else issues_to_tsv(issues)


def cmd_validate(args, docs, out, err) -> int:
    status = EXIT_OK
    for doc in docs:
        issues = validate_document(doc, args.speaker_keys)
        if issues:
            err.write(_format_issues(issues, args.format))
        if any(i.severity is Severity.ERROR for i in issues):
            status = EXIT_INVALID
        elif issues and args.strict:
            status = EXIT_INVALID
    # acts as a gate in pipelines: the document only flows on when it passes
    if status == EXIT_OK and not args.quiet:
        for doc in docs:
            out.write(serialize_document(doc))
    return status


def cmd_convert(args, docs, out, err) -> int:
    for doc in docs:
        if is_intermediate(doc):
            err.write("error: input is an intermediate view; it cannot be converted again\n")
            return EXIT_IO
    status = EXIT_OK
    if args.strict:
        for doc in docs:
            warnings = [i for i in validate_document(doc, args.speaker_keys)
                        if i.severity is Severity.WARNING]
            if warnings:
                err.write(_format_issues(warnings, args.format))
                status = EXIT_INVALID
        if status:
            return status
    for doc in docs:
        try:
            inter, dep = convert_document(doc, not args.no_backchannel_merge, args.speaker_keys)
        except ConversionError as exc:
            err.write(f"error: {exc}\n")
            return EXIT_INVALID
        if args.view in ("intermediate", "both"):
            out.write(serialize_document(inter))
        if args.view in ("dependency", "both"):
            out.write(serialize_document(dep))
    return status


def _lexicon(args, docs) -> BackchannelLexicon:
    if args.lexicon:
        try:
            return BackchannelLexicon.from_file(args.lexicon)
        except OSError as exc:
            raise InputError(f"{args.lexicon}: {exc.strerror or exc}") from None
    if args.derive_lexicon:
        entries = frozenset().union(*(derive_lexicon(d, args.min_count).entries for d in docs))
        return BackchannelLexicon(entries, Provenance.DERIVED)
    return BackchannelLexicon.builtin()


def cmd_detect(args, docs, out, err) -> int:
    want_back = args.backchannels or not args.incompletions
    want_inc = args.incompletions or not args.backchannels
    punct = frozenset(args.final_punct.split()) if args.final_punct is not None else FINAL_PUNCT
    config = DetectConfig(all_tokens=args.all_tokens, final_punct=punct,
                          speaker_keys=args.speaker_keys)
    lex = _lexicon(args, docs) if want_back else None
    if lex is not None and not lex.entries:
        err.write("error: backchannel lexicon is empty\n")
        return EXIT_INVALID
    found = []
    try:
        for doc in docs:
            if want_back:
                found.extend(detect_backchannels(doc, lex, config))
            if want_inc:
                found.extend(detect_incompletions(doc, config))
    except MissingSpeakerError as exc:
        err.write(f"error: {exc}\n")
        return EXIT_INVALID
    out.write(candidates_to_jsonl(found) if args.format == "json" else candidates_to_tsv(found))
    log.info("%d candidate(s)", len(found))
    return EXIT_OK


def cmd_stats(args, docs, out, err) -> int:
    total = SchemeStats()
    for doc in docs:
        total = total + compute_stats(doc)
    out.write(render_stats(total, args.format))
    return EXIT_OK


def cmd_import_legacy(args, docs, out, err) -> int:
    converted = []
    for doc in docs:
        try:
            converted.append(import_legacy_rhapsodie(doc))
        except LegacyImportError as exc:
            err.write(_format_issues(exc.issues, args.format))
            return EXIT_INVALID
    for doc in converted:
        out.write(serialize_document(doc))
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "convert": cmd_convert,
    "detect": cmd_detect,
    "stats": cmd_stats,
    "import-legacy": cmd_import_legacy,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("inputs", nargs="*", metavar="FILE",
                        help="CoNLL-U input files ('-' or none for standard input)")
    common.add_argument("-o", "--output", metavar="PATH", help="write data here instead of stdout")
    common.add_argument("--format", choices=("tsv", "json"), default="tsv",
                        help="report format (issues, candidates, stats)")
    common.add_argument("--strict", action="store_true", help="treat warnings as failures")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="coconstruct",
        description="Validate and convert coconstruction annotation in spoken UD treebanks.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check the annotation scheme")
    p.add_argument("-q", "--quiet", action="store_true",
                   help="do not echo valid input to stdout")

    p = sub.add_parser("convert", parents=[common], help="speaker-based to dependency-based view")
    p.add_argument("--view", choices=("intermediate", "dependency", "both"), default="dependency")
    p.add_argument("--no-backchannel-merge", action="store_true",
                   help="keep backchannels as separate sentences")

    p = sub.add_parser("detect", parents=[common], help="mine backchannel/incompletion candidates")
    p.add_argument("--backchannels", action="store_true")
    p.add_argument("--incompletions", action="store_true")
    p.add_argument("--lexicon", metavar="FILE", help="one form per line, '#' comments")
    p.add_argument("--derive-lexicon", action="store_true",
                   help="build the lexicon from discourse/INTJ/PART tokens of the input")
    p.add_argument("--min-count", type=int, default=2, help="frequency threshold for --derive-lexicon")
    p.add_argument("--all-tokens", action="store_true",
                   help="every non-punctuation token of the reply must be a lexicon form")
    p.add_argument("--final-punct", metavar="FORMS",
                   help="space-separated final punctuation forms (default: . ? ! …)")

    sub.add_parser("stats", parents=[common], help="count scheme annotations")
    sub.add_parser("import-legacy", parents=[common], help="rewrite AttachTo/Rel as pointers")
    return parser


def run(argv=None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=stderr)
    args.speaker_keys = speaker_keys_from_env()
    try:
        docs = read_inputs(args.inputs, stdin)
        if args.output:
            with open(args.output, "w", encoding="utf-8", newline="\n") as out:
                return COMMANDS[args.command](args, docs, out, stderr)
        return COMMANDS[args.command](args, docs, stdout, stderr)
    except InputError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_IO
    except OSError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_IO


def main() -> None:
    sys.exit(run())
