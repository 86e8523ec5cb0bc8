"""Rule loading, corpus validation, dismissals, self-tests, stale scanning.

Ruleset files hold blocks of the form::

    rule <name> {
        level: error|warning
        message: "<template with {Var} or {Var.attr} placeholders>"
        pattern { ... } without { ... }
        pass { <inline CoNLL-U or @relative/path.conllu> }
        fail { ... }
    }

`#` starts a comment outside pass/fail blocks. Inline example blocks hold
tab-separated CoNLL-U (leading indentation is stripped; blank lines separate
sentences); `@path` pulls examples from a file relative to the ruleset.
"""

from __future__ import annotations

import hashlib
import io
import json
import re
from dataclasses import dataclass
from pathlib import Path

from . import conllu
from .conllu import Corpus, Sentence
from .pattern import Match, PatternSyntaxError, attribute_value, find_matches, parse_pattern

LEVELS = ("error", "warning")

_PLACEHOLDER_RE = re.compile(r"\{([^{}.]+?)(?:\.([^{}.]+))?\}")
_RENDERABLE_ATTRIBUTES = ("form", "lemma", "upos", "xpos", "deprel")


class RulesetError(Exception):
    """Problem loading or checking a ruleset; names the offending rule."""

    def __init__(self, message: str, rule: str | None = None):
        super().__init__(f"rule {rule}: {message}" if rule else message)
        self.rule = rule


@dataclass(frozen=True)
class Rule:
    name: str
    level: str
    message_template: str
    pattern: Pattern
    pattern_text: str
    pass_examples: tuple[Sentence, ...] = ()
    fail_examples: tuple[Sentence, ...] = ()


@dataclass(frozen=True)
class Ruleset:
    rules: tuple[Rule, ...]
    version_hash: str

    def __iter__(self):
        return iter(self.rules)


@dataclass(frozen=True)
class Finding:
    rule: str
    level: str
    sent_id: str
    bindings: Match
    message: str
    dismissed: bool = False

    @property
    def signature(self) -> str:
        return self.bindings.signature()

    def to_json(self) -> str:
        payload = {
            "rule": self.rule,
            "level": self.level,
            "sent_id": self.sent_id,
            "bindings": dict(sorted(self.bindings.bindings.items())),
            "message": self.message,
            "dismissed": self.dismissed,
        }
        return json.dumps(payload, ensure_ascii=False)


@dataclass(frozen=True)
class Dismissal:
    """Annotator sign-off for one warning match: sentence, rule, bindings."""

    sent_id: str
    rule: str
    signature: str
    note: str = ""

    @classmethod
    def make(cls, sent_id: str, rule: str, bindings: dict[str, int] | str, note: str = "") -> "Dismissal":
        if isinstance(bindings, str):
            pairs = []
            for item in bindings.split(","):
                var, _, wid = item.partition("=")
                pairs.append((var.strip(), int(wid)))
            signature = ",".join(f"{v}={i}" for v, i in sorted(pairs))
        else:
            signature = ",".join(f"{v}={i}" for v, i in sorted(bindings.items()))
        return cls(sent_id, rule, signature, note)


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]
    ruleset_version: str
    status: dict[str, str]  # sent_id -> pass | warnings | errors

    @property
    def dismissed(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.dismissed)

    @property
    def errors(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.level == "error")

    @property
    def warnings(self) -> tuple[Finding, ...]:
        return tuple(f for f in self.findings if f.level == "warning")


@dataclass(frozen=True)
class RuleSelftest:
    name: str
    passed: bool
    failures: tuple[str, ...] = ()
    notices: tuple[str, ...] = ()


@dataclass(frozen=True)
class SelftestReport:
    results: tuple[RuleSelftest, ...]

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)


def canonical_text(text: str) -> str:
    """Whitespace-normalized rule text; the digest input."""
    lines = [" ".join(line.split()) for line in text.splitlines()]
    return "\n".join(line for line in lines if line)


def ruleset_digest(text: str) -> str:
    return hashlib.sha256(canonical_text(text).encode("utf-8")).hexdigest()


class _Cursor:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0

    def eof(self) -> bool:
        self.skip_space()
        return self.pos >= len(self.text)

    def skip_space(self, comments: bool = True) -> None:
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch.isspace():
                self.pos += 1
            elif comments and ch == "#":
                nl = self.text.find("\n", self.pos)
                self.pos = len(self.text) if nl == -1 else nl + 1
            else:
                return

    def line(self) -> int:
        return self.text.count("\n", 0, self.pos) + 1

    def word(self) -> str:
        self.skip_space()
        m = re.match(r"[^\s{}:\"]+", self.text[self.pos:])
        if not m:
            raise RulesetError(f"expected a word at line {self.line()}")
        self.pos += m.end()
        return m.group()

    def expect(self, literal: str) -> None:
        self.skip_space()
        if not self.text.startswith(literal, self.pos):
            raise RulesetError(f"expected {literal!r} at line {self.line()}")
        self.pos += len(literal)

    def quoted(self) -> str:
        self.skip_space()
        if self.pos >= len(self.text) or self.text[self.pos] != '"':
            raise RulesetError(f"expected a quoted string at line {self.line()}")
        end = self.text.find('"', self.pos + 1)
        if end == -1:
            raise RulesetError(f"unterminated string at line {self.line()}")
        value = self.text[self.pos + 1: end]
        self.pos = end + 1
        return value

    def peek_word(self) -> str | None:
        saved = self.pos
        self.skip_space()
        m = re.match(r"[^\s{}:\"]+|[{}]", self.text[self.pos:])
        word = m.group() if m else None
        self.pos = saved
        return word

    def balanced_braces(self) -> str:
        """Consume `{ ... }` with nesting, honouring double-quoted strings."""
        self.expect("{")
        start = self.pos
        depth = 1
        in_quote = False
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            self.pos += 1
            if in_quote:
                if ch == '"':
                    in_quote = False
            elif ch == '"':
                in_quote = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return self.text[start: self.pos - 1]
        raise RulesetError("unterminated block")

    def raw_block(self) -> str:
        """Consume `{ ... }` up to the first `}`; for example blocks."""
        self.expect("{")
        end = self.text.find("}", self.pos)
        if end == -1:
            raise RulesetError(f"unterminated example block at line {self.line()}")
        content = self.text[self.pos: end]
        self.pos = end + 1
        return content


def _parse_examples(content: str, base_dir: Path | None, rule: str) -> tuple[Sentence, ...]:
    lines = [line.strip() for line in content.split("\n")]
    while lines and not lines[0]:
        lines.pop(0)
    while lines and not lines[-1]:
        lines.pop()
    if not lines:
        return ()
    sentences: list[Sentence] = []
    if all(line.startswith("@") or not line for line in lines):
        for line in lines:
            if not line:
                continue
            if base_dir is None:
                raise RulesetError(f"example file reference {line!r} needs a ruleset path", rule)
            path = base_dir / line[1:].strip()
            sentences.extend(conllu.parse_file(path).sentences)
    else:
        try:
            corpus = conllu.parse("\n".join(lines) + "\n")
        except conllu.ParseError as exc:
            raise RulesetError(f"bad inline example: {exc}", rule) from None
        sentences.extend(corpus.sentences)
    return tuple(sentences)


def load_ruleset(source, base_dir: str | Path | None = None) -> Ruleset:
    """Read a ruleset from text or a file object (see load_ruleset_file for paths).

    Raises RulesetError on duplicate names, bad levels, pattern syntax
    errors, or message placeholders not bound by the pattern.
    """
    if isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
        if base_dir is None:
            base_dir = source.parent
    elif isinstance(source, str):
        text = source
    elif isinstance(source, io.TextIOBase):
        text = source.read()
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    base = Path(base_dir) if base_dir is not None else None

    cursor = _Cursor(text)
    rules: list[Rule] = []
    names: set[str] = set()
    while not cursor.eof():
        keyword = cursor.word()
        if keyword != "rule":
            raise RulesetError(f"expected 'rule' at line {cursor.line()}, found {keyword!r}")
        name = cursor.word()
        if name in names:
            raise RulesetError("duplicate rule name", name)
        names.add(name)
        cursor.expect("{")
        level: str | None = None
        message: str | None = None
        pattern_text: str | None = None
        pass_examples: list[Sentence] = []
        fail_examples: list[Sentence] = []
        while True:
            cursor.skip_space()
            if cursor.text.startswith("}", cursor.pos):
                cursor.pos += 1
                break
            keyword = cursor.word()
            if keyword == "level":
                cursor.expect(":")
                level = cursor.word()
            elif keyword == "message":
                cursor.expect(":")
                message = cursor.quoted()
            elif keyword == "pattern":
                body = cursor.balanced_braces()
                pattern_text = "pattern {" + body + "}"
                while cursor.peek_word() == "without":
                    cursor.word()
                    body = cursor.balanced_braces()
                    pattern_text += " without {" + body + "}"
            elif keyword == "pass":
                pass_examples.extend(_parse_examples(cursor.raw_block(), base, name))
            elif keyword == "fail":
                fail_examples.extend(_parse_examples(cursor.raw_block(), base, name))
            else:
                raise RulesetError(f"unexpected {keyword!r} at line {cursor.line()}", name)
        if level not in LEVELS:
            raise RulesetError(f"level must be one of {LEVELS}, got {level!r}", name)
        if message is None:
            raise RulesetError("missing message", name)
        if pattern_text is None:
            raise RulesetError("missing pattern", name)
        try:
            pattern = parse_pattern(pattern_text)
        except PatternSyntaxError as exc:
            raise RulesetError(f"pattern syntax error: {exc}", name) from None
        positive_vars = set(pattern.variables)
        for var, attr in _PLACEHOLDER_RE.findall(message):
            if var not in positive_vars:
                raise RulesetError(f"placeholder {{{var}}} is not a pattern variable", name)
            if attr and attr not in _RENDERABLE_ATTRIBUTES:
                raise RulesetError(f"placeholder attribute {attr!r} not one of {_RENDERABLE_ATTRIBUTES}", name)
        rules.append(
            Rule(
                name=name,
                level=level,
                message_template=message,
                pattern=pattern,
                pattern_text=pattern_text,
                pass_examples=tuple(pass_examples),
                fail_examples=tuple(fail_examples),
            )
        )
    return Ruleset(rules=tuple(rules), version_hash=ruleset_digest(text))


def load_ruleset_file(path) -> Ruleset:
    p = Path(path)
    return load_ruleset(p.read_text(encoding="utf-8"), base_dir=p.parent)


def render_message(template: str, match: Match, sentence: Sentence) -> str:
    """Expand `{X}` to the bound word id and `{X.attr}` to that column."""

    def expand(m: re.Match) -> str:
        var, attr = m.group(1), m.group(2)
        if var not in match.bindings:
            raise ValueError(f"unbound placeholder {{{var}}}")
        wid = match.bindings[var]
        if not attr:
            return str(wid)
        value = attribute_value(sentence.words[wid - 1], attr)
        return value if value is not None else ""

    return _PLACEHOLDER_RE.sub(expand, template)


def _sentence_key(sentence: Sentence, index: int) -> str:
    return sentence.sent_id if sentence.sent_id is not None else f"[{index + 1}]"


def validate_corpus(
    corpus: Corpus,
    ruleset: Ruleset,
    dismissals: tuple[Dismissal, ...] | list[Dismissal] = (),
) -> ValidationReport:
    """Run every rule over every sentence; apply dismissals to warnings only."""
    dismissed_keys = {(d.sent_id, d.rule, d.signature) for d in dismissals}
    findings: list[Finding] = []
    status: dict[str, str] = {}
    for i, sentence in enumerate(corpus.sentences):
        sid = _sentence_key(sentence, i)
        sent_findings: list[Finding] = []
        for rule in ruleset.rules:
            for match in find_rule_matches(rule, sentence):
                message = render_message(rule.message_template, match, sentence)
                dismissed = (
                    rule.level == "warning"
                    and (sid, rule.name, match.signature()) in dismissed_keys
                )
                sent_findings.append(
                    Finding(rule.name, rule.level, sid, match, message, dismissed)
                )
        findings.extend(sent_findings)
        if any(f.level == "error" for f in sent_findings):
            status[sid] = "errors"
        elif any(f.level == "warning" and not f.dismissed for f in sent_findings):
            status[sid] = "warnings"
        else:
            status[sid] = "pass"
    return ValidationReport(tuple(findings), ruleset.version_hash, status)


def find_rule_matches(rule: Rule, sentence: Sentence) -> list[Match]:
    return find_matches(rule.pattern, sentence)


def selftest_ruleset(ruleset: Ruleset) -> SelftestReport:
    """Check every rule against its own pass and fail example trees."""
    results = []
    for rule in ruleset.rules:
        failures: list[str] = []
        notices: list[str] = []
        for i, sent in enumerate(rule.pass_examples):
            n = len(find_rule_matches(rule, sent))
            if n:
                failures.append(f"pass example {i + 1} yields {n} match(es), expected 0")
        for i, sent in enumerate(rule.fail_examples):
            n = len(find_rule_matches(rule, sent))
            if n == 0:
                failures.append(f"fail example {i + 1} yields no match, expected at least 1")
        if not rule.pass_examples and not rule.fail_examples:
            notices.append("no examples")
        results.append(RuleSelftest(rule.name, not failures, tuple(failures), tuple(notices)))
    return SelftestReport(tuple(results))


def check_final(report: ValidationReport) -> bool:
    """Finality gate: no errors and every warning dismissed."""
    return not report.errors and all(f.dismissed for f in report.warnings)


def scan_stale(
    corpus: Corpus,
    ruleset: Ruleset,
    last_passed: dict[str, str],
    dismissals: tuple[Dismissal, ...] | list[Dismissal] = (),
) -> list[str]:
    """Sentences that passed under an older ruleset and now fail.

    A sentence is stale when its recorded digest differs from the current
    ruleset digest and it currently has at least one undismissed finding.
    Sentences with no recorded digest never passed and are not stale.
    """
    report = validate_corpus(corpus, ruleset, dismissals)
    undismissed: set[str] = {f.sent_id for f in report.findings if not f.dismissed}
    stale = []
    for i, sentence in enumerate(corpus.sentences):
        sid = _sentence_key(sentence, i)
        recorded = last_passed.get(sid)
        if recorded is not None and recorded != ruleset.version_hash and sid in undismissed:
            stale.append(sid)
    return stale


def read_dismissals(source) -> tuple[Dismissal, ...]:
    """Dismissals file: tab-separated `sent_id  rule  var=id[,var=id...]  note`."""
    if isinstance(source, (str, Path)):
        text = Path(source).read_text(encoding="utf-8")
    else:
        text = source.read()
    dismissals = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        cols = line.split("\t")
        if len(cols) < 3:
            raise ValueError(f"dismissals line {lineno}: expected at least 3 tab-separated columns")
        note = cols[3] if len(cols) > 3 else ""
        dismissals.append(Dismissal.make(cols[0], cols[1], cols[2], note))
    return tuple(dismissals)


def read_pass_state(path) -> dict[str, str]:
    """Sidecar `sent_id  ruleset_digest` pairs; missing file means empty."""
    p = Path(path)
    if not p.exists():
        return {}
    state = {}
    for line in p.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        sent_id, _, digest = line.partition("\t")
        state[sent_id] = digest
    return state


def write_pass_state(path, state: dict[str, str]) -> None:
    lines = [f"{sid}\t{digest}" for sid, digest in state.items()]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def record_passes(path, report: ValidationReport) -> dict[str, str]:
    """Stamp every currently passing sentence with the ruleset digest."""
    state = read_pass_state(path)
    for sid, status in report.status.items():
        if status == "pass":
            state[sid] = report.ruleset_version
    write_pass_state(path, state)
    return state


def render_human(report: ValidationReport) -> str:
    lines = []
    order = {"error": 0, "warning": 1}
    by_sentence: dict[str, list[Finding]] = {}
    for f in report.findings:
        by_sentence.setdefault(f.sent_id, []).append(f)
    for sid in report.status:
        findings = sorted(
            by_sentence.get(sid, []), key=lambda f: (order[f.level], f.rule, f.signature)
        )
        if not findings:
            continue
        lines.append(f"{sid}:")
        for f in findings:
            suffix = "  [dismissed]" if f.dismissed else ""
            lines.append(f"  {f.level:<7} {f.rule}  ({f.signature})  {f.message}{suffix}")
    n_err = len(report.errors)
    n_warn = len(report.warnings)
    n_dis = len(report.dismissed)
    n_sent = len(report.status)
    lines.append(
        f"{n_err} error(s), {n_warn} warning(s) ({n_dis} dismissed) in {n_sent} sentence(s)"
    )
    return "\n".join(lines) + "\n"


def render_jsonl(report: ValidationReport) -> str:
    return "".join(f.to_json() + "\n" for f in report.findings)


def render_tsv(report: ValidationReport) -> str:
    rows = ["rule\tlevel\tsent_id\tbindings\tmessage\tdismissed"]
    for f in report.findings:
        rows.append(
            "\t".join(
                (f.rule, f.level, f.sent_id, f.signature, f.message, "yes" if f.dismissed else "no")
            )
        )
    return "\n".join(rows) + "\n"
