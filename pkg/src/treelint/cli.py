"""Command-line entry point: treelint <subcommand>.

Subcommands: validate, selftest, query, convert, score, iaa, stats.
Corpora are read from file arguments or standard input (`-`). Exit codes:
0 success, 1 error-level findings or failed metric preconditions, 2 usage
or I/O errors. TREELINT_RULES names a default ruleset path.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import agree, conllu, convert, stats as stats_mod, validate as validate_mod
from .pattern import PatternSyntaxError, count_matches, parse_pattern
from .score import (
    ScoreError,
    render_json as render_score_json,
    render_table as render_score_table,
    render_tsv as render_score_tsv,
    score as score_corpora,
)


class CliError(Exception):
    """Usage or I/O problem; mapped to exit code 2."""


def _read_corpus(path: str, lenient: bool = False) -> conllu.Corpus:
    try:
        if path == "-":
            data = sys.stdin.buffer.read()
        else:
            data = Path(path).read_bytes()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}") from None
    if lenient:
        corpus, issues = conllu.parse_lenient(data)
        for issue in issues:
            print(f"{path}:{issue.line}: {issue.message}", file=sys.stderr)
        return corpus
    return conllu.parse(data)


def _load_rules(args) -> validate_mod.Ruleset:
    path = getattr(args, "rules", None) or os.environ.get("TREELINT_RULES")
    if not path:
        raise CliError("no ruleset given (use --rules or set TREELINT_RULES)")
    try:
        return validate_mod.load_ruleset_file(path)
    except OSError as exc:
        raise CliError(f"cannot read ruleset {path}: {exc}") from None


def _parallel_map(fn, items, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _cmd_validate(args) -> int:
    ruleset = _load_rules(args)
    corpus = _read_corpus(args.corpus, lenient=args.lenient)
    dismissals = validate_mod.read_dismissals(args.dismissals) if args.dismissals else ()

    dismissed_keys = {(d.sent_id, d.rule, d.signature) for d in dismissals}

    def one(pair):
        index, sentence = pair
        sub = validate_mod.validate_corpus(
            conllu.Corpus((sentence,)), ruleset, dismissals
        )
        sid = sentence.sent_id if sentence.sent_id is not None else f"[{index + 1}]"
        findings = tuple(
            validate_mod.Finding(f.rule, f.level, sid, f.bindings, f.message, f.dismissed)
            for f in sub.findings
        )
        return sid, findings, sub.status[next(iter(sub.status))]

    results = _parallel_map(one, list(enumerate(corpus.sentences)), args.jobs)
    findings = tuple(f for _, fs, _ in results for f in fs)
    status = {sid: st for sid, _, st in results}
    report = validate_mod.ValidationReport(findings, ruleset.version_hash, status)

    if args.record_pass:
        validate_mod.record_passes(args.pass_state, report)
    if args.stale:
        last_passed = validate_mod.read_pass_state(args.pass_state)
        for sid in validate_mod.scan_stale(corpus, ruleset, last_passed, dismissals):
            print(sid)
        return 0
    if args.format == "json":
        sys.stdout.write(validate_mod.render_jsonl(report))
    elif args.format == "tsv":
        sys.stdout.write(validate_mod.render_tsv(report))
    else:
        sys.stdout.write(validate_mod.render_human(report))
    if report.errors:
        return 1
    if args.strict_warnings and any(not f.dismissed for f in report.warnings):
        return 1
    return 0


def _cmd_selftest(args) -> int:
    ruleset = _load_rules(args)
    report = validate_mod.selftest_ruleset(ruleset)
    for result in report.results:
        line = f"{'PASS' if result.passed else 'FAIL'}  {result.name}"
        if result.notices:
            line += "  (" + "; ".join(result.notices) + ")"
        print(line)
        for failure in result.failures:
            print(f"      {failure}")
    print(f"{sum(r.passed for r in report.results)}/{len(report.results)} rules pass self-test")
    return 0 if report.passed else 1


def _cmd_query(args) -> int:
    if args.pattern_file:
        text = Path(args.pattern_file).read_text(encoding="utf-8")
    elif args.pattern:
        text = args.pattern
    else:
        raise CliError("give a pattern with --pattern or --pattern-file")
    try:
        pattern = parse_pattern(text)
    except PatternSyntaxError as exc:
        raise CliError(f"bad pattern: {exc}") from None
    corpus = _read_corpus(args.corpus, lenient=args.lenient)
    counts = count_matches(pattern, corpus)
    total = sum(counts.values())
    if args.format == "json":
        for sid, n in counts.items():
            print(json.dumps({"sent_id": sid, "matches": n}, ensure_ascii=False))
        print(json.dumps({"total": total}))
    else:
        for sid, n in counts.items():
            if n or args.all:
                print(f"{sid}\t{n}")
        print(f"total\t{total}")
    return 0


def _cmd_convert(args) -> int:
    corpus = _read_corpus(args.corpus, lenient=args.lenient)
    config = convert.default_config()
    if args.lexicon:
        config = convert.ConversionConfig(
            convert.CliticLexicon.from_file(args.lexicon), config.fused_to_unfused,
            config.question_marker_lemmas,
        )
    fn = convert.old_to_new if args.direction == "old-to-new" else convert.new_to_old
    kwargs = {}
    if args.direction == "new-to-old":
        kwargs["on_issue"] = lambda msg: print(msg, file=sys.stderr)

    def one(sentence):
        return fn(sentence, config, **kwargs)

    try:
        converted = _parallel_map(one, list(corpus.sentences), args.jobs)
    except convert.ConversionError as exc:
        print(f"conversion failed: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(conllu.serialize(conllu.Corpus(tuple(converted))))
    return 0


def _cmd_score(args) -> int:
    gold = _read_corpus(args.gold)
    system = _read_corpus(args.system)
    try:
        report = score_corpora(gold, system)
    except ScoreError as exc:
        print(f"scoring failed: {exc}", file=sys.stderr)
        return 1
    if args.format == "tsv":
        sys.stdout.write(render_score_tsv(report))
    elif args.format == "json":
        sys.stdout.write(render_score_json(report))
    else:
        sys.stdout.write(render_score_table(report))
    return 0


def _cmd_iaa(args) -> int:
    corpus_a = _read_corpus(args.annot_a)
    corpus_b = _read_corpus(args.annot_b)
    audit = None
    try:
        report = agree.iaa(corpus_a, corpus_b)
        if args.rules:
            ruleset = _load_rules(args)
            audit = agree.audit_disagreements(corpus_a, corpus_b, ruleset)
    except (agree.AgreementError, ScoreError) as exc:
        print(f"agreement failed: {exc}", file=sys.stderr)
        return 1
    sys.stdout.write(agree.render_report(report, audit))
    return 0


def _cmd_stats(args) -> int:
    corpus = _read_corpus(args.corpus, lenient=args.lenient)
    out = sys.stdout
    try:
        mean, sd = stats_mod.length_stats(corpus)
    except stats_mod.StatsError as exc:
        print(f"stats failed: {exc}", file=sys.stderr)
        return 1
    n_tokens = sum(len(s.words) for s in corpus.sentences)
    out.write(f"sentences\t{len(corpus.sentences)}\n")
    out.write(f"tokens\t{n_tokens}\n")
    out.write(f"sentence length M\t{mean:.2f}\n")
    out.write(f"sentence length SD\t{sd:.2f}\n")
    has_docs = any(s.newdoc_id is not None for s in corpus.sentences)
    if args.domains or has_docs:
        try:
            domain_map = stats_mod.read_domain_manifest(args.domains) if args.domains else None
            rows, total = stats_mod.corpus_stats(corpus, domain_map)
            out.write("\ndomain\tdocuments\ttokens\tsentences\n")
            for row in rows + [total]:
                out.write(f"{row.domain}\t{row.documents}\t{row.tokens}\t{row.sentences}\n")
        except stats_mod.StatsError as exc:
            print(f"(no domain table: {exc})", file=sys.stderr)
    out.write("\nupos\tcount\n")
    for upos, count in stats_mod.pos_distribution(corpus).items():
        out.write(f"{upos}\t{count}\n")
    if args.compare:
        other = _read_corpus(args.compare, lenient=args.lenient)
        overlap = stats_mod.vocab_overlap(corpus, other, args.key)
        out.write(f"\nvocabulary ({args.key})\t|A|={overlap.size_a}\t|B|={overlap.size_b}")
        out.write(f"\t|A-B|={overlap.only_a}\t|B-A|={overlap.only_b}\t|A&B|={overlap.both}\n")
        ascending, descending = stats_mod.freq_ratio(corpus, other, args.key)
        out.write(f"\noverrepresented in A ({args.key}, ratio = B/A)\n")
        for entry in ascending[: args.top]:
            out.write(f"{entry.item}\t{entry.count_a}\t{entry.count_b}\t{_fmt_ratio(entry.ratio)}\n")
        out.write(f"\noverrepresented in B ({args.key}, ratio = B/A)\n")
        for entry in descending[: args.top]:
            out.write(f"{entry.item}\t{entry.count_a}\t{entry.count_b}\t{_fmt_ratio(entry.ratio)}\n")
    return 0


def _fmt_ratio(ratio: float) -> str:
    if ratio == float("inf"):
        return "inf"
    return f"{ratio:g}"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="treelint", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, lenient=True, jobs=True):
        if lenient:
            p.add_argument("--lenient", action="store_true", help="skip malformed sentences instead of aborting")
        if jobs:
            p.add_argument("--jobs", type=int, default=1, metavar="N", help="worker threads for per-sentence work")

    p = sub.add_parser("validate", help="run a ruleset over a corpus")
    p.add_argument("corpus", help="CoNLL-U file or - for stdin")
    p.add_argument("--rules", help="ruleset file (default: $TREELINT_RULES)")
    p.add_argument("--dismissals", help="dismissals TSV file")
    p.add_argument("--format", choices=("human", "json", "tsv"), default="human")
    p.add_argument("--strict-warnings", action="store_true", help="undismissed warnings also fail")
    p.add_argument("--record-pass", action="store_true", help="stamp passing sentences in the pass-state sidecar")
    p.add_argument("--pass-state", default="treelint-passes.tsv", help="pass-state sidecar path")
    p.add_argument("--stale", action="store_true", help="list stale sentences instead of findings")
    add_common(p)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("selftest", help="check every rule against its own examples")
    p.add_argument("--rules", help="ruleset file (default: $TREELINT_RULES)")
    p.set_defaults(fn=_cmd_selftest)

    p = sub.add_parser("query", help="count pattern matches per sentence")
    p.add_argument("corpus", help="CoNLL-U file or - for stdin")
    p.add_argument("--pattern", help="pattern text")
    p.add_argument("--pattern-file", help="file holding pattern text")
    p.add_argument("--format", choices=("human", "json"), default="human")
    p.add_argument("--all", action="store_true", help="list sentences with zero matches too")
    add_common(p, jobs=False)
    p.set_defaults(fn=_cmd_query)

    p = sub.add_parser("convert", help="convert between tokenization schemes")
    p.add_argument("corpus", help="CoNLL-U file or - for stdin")
    p.add_argument("--direction", choices=("old-to-new", "new-to-old"), required=True)
    p.add_argument("--lexicon", help="clitic lexicon TSV overriding the shipped one")
    add_common(p)
    p.set_defaults(fn=_cmd_convert)

    p = sub.add_parser("score", help="score system output against gold")
    p.add_argument("gold")
    p.add_argument("system")
    p.add_argument("--format", choices=("table", "tsv", "json"), default="table")
    p.set_defaults(fn=_cmd_score)

    p = sub.add_parser("iaa", help="inter-annotator agreement between two annotations")
    p.add_argument("annot_a")
    p.add_argument("annot_b")
    p.add_argument("--rules", help="ruleset for the disagreement audit")
    p.set_defaults(fn=_cmd_iaa)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("corpus", help="CoNLL-U file or - for stdin")
    p.add_argument("--compare", help="second corpus for ratios and overlap")
    p.add_argument("--key", choices=("form", "lemma"), default="form")
    p.add_argument("--domains", help="domain manifest TSV (newdoc_id<TAB>domain)")
    p.add_argument("--top", type=int, default=10, help="rows per ratio table")
    add_common(p, jobs=False)
    p.set_defaults(fn=_cmd_stats)

    return parser


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except CliError as exc:
        print(f"treelint: {exc}", file=sys.stderr)
        return 2
    except (conllu.ParseError, validate_mod.RulesetError, OSError) as exc:
        print(f"treelint: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
