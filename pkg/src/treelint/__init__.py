"""Treebank engineering toolkit.

Validates dependency treebanks with declarative graph-pattern rules,
converts between the legacy and concatenative multiword-token schemes,
scores parser output end-to-end, and computes inter-annotator agreement
and corpus statistics.
"""

from .conllu import (
    ConcatenationViolation,
    Corpus,
    Feats,
    Misc,
    MwtSpan,
    ParseError,
    Sentence,
    StructuralIssue,
    Word,
    check_concatenative,
    parse,
    parse_file,
    parse_lenient,
    serialize,
    structural_check,
)
from .pattern import Match, Pattern, PatternSyntaxError, count_matches, find_matches, parse_pattern
from .validate import (
    Dismissal,
    Finding,
    Rule,
    Ruleset,
    RulesetError,
    ValidationReport,
    check_final,
    load_ruleset,
    load_ruleset_file,
    render_message,
    scan_stale,
    selftest_ruleset,
    validate_corpus,
)
from .convert import (
    CliticLexicon,
    ConversionConfig,
    ConversionError,
    bies_tags,
    new_to_old,
    old_to_new,
)
from .score import Alignment, MetricScore, ScoreError, ScoreReport, align, score
from .agree import (
    AgreementError,
    DisagreementAudit,
    IaaReport,
    KappaTable,
    audit_disagreements,
    cohen_kappa,
    iaa,
)
from .stats import (
    DomainStats,
    OverlapStats,
    RatioEntry,
    StatsError,
    corpus_stats,
    freq_ratio,
    length_stats,
    pos_distribution,
    vocab_overlap,
)

__version__ = "0.1.0"
