"""Coconstruction annotation for spoken-language UD treebanks.

Validate the MISC-based scheme (``Coconstruct``, ``Backchannel``, ``Scrap``,
``Promotion``, ``Head``), convert speaker-based sentences into rectional
units, and mine or count coconstruction candidates.
"""

from .conllu import Document, ParseError, Sentence, Token, load, parse_document, serialize_document
from .convert import (
    ConversionError, EdgeTag, GraphEdge, RectionalUnit, TokenRef, build_intermediate_graph,
    cluster_units, convert_document, project_dependency_view,
)
from .detect import (
    BackchannelLexicon, Candidate, CandidateKind, DetectConfig, derive_lexicon,
    detect_backchannels, detect_incompletions,
)
from .scheme import (
    BackchannelPointer, CoconstructPointer, SchemeFeatures, ValidationIssue,
    import_legacy_rhapsodie, parse_scheme_features, validate_document,
)
from .stats import SchemeStats, compute_stats, render_stats

__version__ = "0.1.0"
