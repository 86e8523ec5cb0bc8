"""Grew-style graph patterns over dependency trees.

Grammar::

    pattern { <clause>; ... } (without { <clause>; ... })*
    clause  := Var[key=val, key<>val, key=a|b, ...]      node constraint
             | Src -[lab1|lab2]-> Tgt                    edge constraint

Values may be double-quoted UTF-8 strings. `*` is the anonymous wildcard
variable, legal only inside without-blocks. An edge `X -[lab]-> Y` matches
when Y's head is X and Y's deprel is one of the labels; the label `root` on
a without-edge from `*` matches a target whose head is 0.

Attribute keys `form`, `lemma`, `upos`, `xpos`, and `deprel` address the
corresponding columns; any other key addresses the FEATS bundle, where an
equality test on an absent feature fails and an inequality test succeeds.

Matching binds distinct positive variables to distinct words. A candidate
match is rejected if any without-block can be satisfied by assigning that
block's own variables (wildcards included) to arbitrary words, bound or not.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .conllu import Corpus, Sentence, Word

COLUMN_ATTRIBUTES = ("form", "lemma", "upos", "xpos", "deprel")


class PatternSyntaxError(Exception):
    """Bad pattern text; carries the (1-based) line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} at line {line}, column {column}")
        self.message = message
        self.line = line
        self.column = column


@dataclass(frozen=True)
class AttributeTest:
    attribute: str
    negated: bool
    values: tuple[str, ...]

    def holds(self, word: Word) -> bool:
        value = attribute_value(word, self.attribute)
        if self.negated:
            return value is None or value not in self.values
        return value is not None and value in self.values


@dataclass(frozen=True)
class NodeConstraint:
    var: str
    tests: tuple[AttributeTest, ...]


@dataclass(frozen=True)
class EdgeConstraint:
    src: str
    tgt: str
    labels: tuple[str, ...]


@dataclass(frozen=True)
class PatternBlock:
    nodes: tuple[NodeConstraint, ...]
    edges: tuple[EdgeConstraint, ...]

    def variables(self) -> list[str]:
        """Variables in order of first appearance (wildcards included)."""
        seen: list[str] = []
        for node in self.nodes:
            if node.var not in seen:
                seen.append(node.var)
        for edge in self.edges:
            for var in (edge.src, edge.tgt):
                if var not in seen:
                    seen.append(var)
        return seen


@dataclass(frozen=True)
class Pattern:
    positive: PatternBlock
    withouts: tuple[PatternBlock, ...]

    @property
    def variables(self) -> tuple[str, ...]:
        return tuple(self.positive.variables())


@dataclass(frozen=True)
class Match:
    """Injective assignment of positive variables to word ids."""

    bindings: dict[str, int]

    def signature(self) -> str:
        return ",".join(f"{var}={wid}" for var, wid in sorted(self.bindings.items()))

    def key(self, var_order: tuple[str, ...]) -> tuple[int, ...]:
        return tuple(self.bindings[v] for v in var_order)


def attribute_value(word: Word, attribute: str) -> str | None:
    if attribute == "form":
        return word.form
    if attribute == "lemma":
        return word.lemma
    if attribute == "upos":
        return word.upos
    if attribute == "xpos":
        return word.xpos
    if attribute == "deprel":
        return word.deprel
    return word.feats.get(attribute)


# A bare token may contain hyphens, but a hyphen directly before `[` opens
# an edge (`X-[cc]->Y` tokenizes as X, -[, cc, ]->, Y).
_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<edge_open>-\s*\[)
  | (?P<edge_close>\]\s*->)
  | (?P<neq><>)
  | (?P<punct>[{}\[\];,=|*])
  | (?P<quoted>"[^"]*")
  | (?P<bare>(?:[^\s{}\[\];,=|*<>"-]|-(?!\s*\[))+)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Token:
    kind: str
    value: str
    pos: int


class _Lexer:
    def __init__(self, text: str):
        self.text = text
        self.tokens: list[_Token] = []
        pos = 0
        while pos < len(text):
            m = _TOKEN_RE.match(text, pos)
            if m is None:
                line, col = _line_col(text, pos)
                raise PatternSyntaxError(f"unexpected character {text[pos]!r}", line, col)
            kind = m.lastgroup or ""
            if kind != "ws":
                self.tokens.append(_Token(kind, m.group(), m.start()))
            pos = m.end()
        self.index = 0

    def peek(self) -> _Token | None:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def next(self) -> _Token:
        tok = self.peek()
        if tok is None:
            line, col = _line_col(self.text, len(self.text))
            raise PatternSyntaxError("unexpected end of pattern", line, col)
        self.index += 1
        return tok

    def error(self, message: str, tok: _Token | None = None):
        pos = tok.pos if tok is not None else len(self.text)
        line, col = _line_col(self.text, pos)
        raise PatternSyntaxError(message, line, col)

    def expect(self, value: str) -> _Token:
        tok = self.next()
        if tok.value != value:
            self.error(f"expected {value!r}, found {tok.value!r}", tok)
        return tok


def _line_col(text: str, pos: int) -> tuple[int, int]:
    line = text.count("\n", 0, pos) + 1
    col = pos - (text.rfind("\n", 0, pos) + 1) + 1
    return line, col


def _unquote(value: str) -> str:
    if value.startswith('"') and value.endswith('"'):
        return value[1:-1]
    return value


class _Parser:
    def __init__(self, text: str):
        self.lex = _Lexer(text)
        self.wildcards = 0

    def parse(self) -> Pattern:
        tok = self.lex.next()
        if tok.value != "pattern":
            self.lex.error("pattern text must start with 'pattern'", tok)
        positive = self._block(allow_wildcard=False)
        withouts = []
        while True:
            tok = self.lex.peek()
            if tok is None:
                break
            if tok.value != "without":
                self.lex.error(f"expected 'without', found {tok.value!r}", tok)
            self.lex.next()
            withouts.append(self._block(allow_wildcard=True))
        return Pattern(positive=positive, withouts=tuple(withouts))

    def _block(self, allow_wildcard: bool) -> PatternBlock:
        self.lex.expect("{")
        nodes: list[NodeConstraint] = []
        edges: list[EdgeConstraint] = []
        while True:
            tok = self.lex.peek()
            if tok is None:
                self.lex.error("unterminated block")
            if tok.value == "}":
                self.lex.next()
                break
            if tok.value == ";":
                self.lex.next()
                continue
            self._clause(nodes, edges, allow_wildcard)
        return PatternBlock(tuple(nodes), tuple(edges))

    def _variable(self, allow_wildcard: bool) -> str:
        tok = self.lex.next()
        if tok.value == "*":
            if not allow_wildcard:
                self.lex.error("wildcard '*' is only allowed inside without-blocks", tok)
            self.wildcards += 1
            return f"*{self.wildcards}"
        if tok.kind != "bare":
            self.lex.error(f"expected a variable name, found {tok.value!r}", tok)
        return tok.value

    def _clause(self, nodes, edges, allow_wildcard: bool) -> None:
        start = self.lex.peek()
        var = self._variable(allow_wildcard)
        tok = self.lex.peek()
        if tok is None:
            self.lex.error("incomplete clause")
        if tok.value == "[":
            self.lex.next()
            tests = self._tests()
            if var.startswith("*") and tests:
                self.lex.error("wildcard nodes cannot carry tests", start)
            nodes.append(NodeConstraint(var, tuple(tests)))
        elif tok.kind == "edge_open":
            self.lex.next()
            labels = self._alternation()
            closer = self.lex.next()
            if closer.kind != "edge_close":
                self.lex.error(f"expected ']->', found {closer.value!r}", closer)
            tgt = self._variable(allow_wildcard)
            edges.append(EdgeConstraint(var, tgt, tuple(labels)))
        else:
            self.lex.error(f"expected '[' or '-[' after {var!r}", tok)

    def _tests(self) -> list[AttributeTest]:
        tests: list[AttributeTest] = []
        while True:
            tok = self.lex.next()
            if tok.value == "]":
                break
            if tok.value == ",":
                continue
            if tok.kind not in ("bare", "quoted"):
                self.lex.error(f"expected an attribute name, found {tok.value!r}", tok)
            attribute = tok.value
            op = self.lex.next()
            if op.value == "=":
                negated = False
            elif op.kind == "neq":
                negated = True
            else:
                self.lex.error(f"expected '=' or '<>', found {op.value!r}", op)
            values = self._alternation()
            tests.append(AttributeTest(attribute, negated, tuple(values)))
        return tests

    def _alternation(self) -> list[str]:
        values = [self._value()]
        while True:
            tok = self.lex.peek()
            if tok is not None and tok.value == "|":
                self.lex.next()
                values.append(self._value())
            else:
                return values

    def _value(self) -> str:
        tok = self.lex.next()
        if tok.kind == "quoted":
            return _unquote(tok.value)
        if tok.kind == "bare":
            return tok.value
        self.lex.error(f"expected a value, found {tok.value!r}", tok)
        raise AssertionError  # pragma: no cover


def parse_pattern(text: str) -> Pattern:
    """Parse pattern text into a Pattern; raises PatternSyntaxError."""
    return _Parser(text).parse()


def _edge_holds(sentence: Sentence, src_id: int, tgt_id: int, labels: tuple[str, ...]) -> bool:
    tgt = sentence.words[tgt_id - 1]
    return tgt.head == src_id and tgt.deprel in labels


def _without_admits(block: PatternBlock, sentence: Sentence, bound: dict[str, int]) -> bool:
    """True if the block can be satisfied by some assignment of its local vars.

    Local variables range over every word (sharing with bound words is
    allowed); a wildcard edge source may additionally stand for the virtual
    root, satisfying a `root` label against a head-0 target.
    """
    local = [v for v in block.variables() if v not in bound]
    tests_by_var: dict[str, list[AttributeTest]] = {}
    for node in block.nodes:
        tests_by_var.setdefault(node.var, []).extend(node.tests)

    word_ids = [w.id for w in sentence.words]

    def candidates(var: str) -> list[int]:
        tests = tests_by_var.get(var, [])
        ids = [wid for wid in word_ids if all(t.holds(sentence.words[wid - 1]) for t in tests)]
        if var.startswith("*"):
            ids = [0] + ids  # virtual root; only meaningful as an edge source
        return ids

    def edges_ok(assignment: dict[str, int]) -> bool:
        for edge in block.edges:
            if edge.src not in assignment or edge.tgt not in assignment:
                continue
            src_id = assignment[edge.src]
            tgt_id = assignment[edge.tgt]
            if tgt_id == 0:
                return False
            if src_id == 0:
                if not ("root" in edge.labels and sentence.words[tgt_id - 1].head == 0):
                    return False
            elif not _edge_holds(sentence, src_id, tgt_id, edge.labels):
                return False
        return True

    # Bound vars must already satisfy the block's node tests on their words.
    for var, wid in bound.items():
        for test in tests_by_var.get(var, []):
            if not test.holds(sentence.words[wid - 1]):
                return False

    def search(i: int, assignment: dict[str, int]) -> bool:
        if not edges_ok(assignment):
            return False
        if i == len(local):
            return True
        var = local[i]
        for wid in candidates(var):
            assignment[var] = wid
            if search(i + 1, assignment):
                return True
            del assignment[var]
        return False

    return search(0, dict(bound))


def find_matches(pattern: Pattern, sentence: Sentence) -> list[Match]:
    """All injective positive bindings not excluded by any without-block.

    Results are ordered by the binding tuple (positive variables in order
    of first appearance), ascending.
    """
    var_order = pattern.variables
    tests_by_var: dict[str, list[AttributeTest]] = {}
    for node in pattern.positive.nodes:
        tests_by_var.setdefault(node.var, []).extend(node.tests)

    word_ids = [w.id for w in sentence.words]
    candidates = {
        var: [
            wid
            for wid in word_ids
            if all(t.holds(sentence.words[wid - 1]) for t in tests_by_var.get(var, []))
        ]
        for var in var_order
    }

    def edges_ok(assignment: dict[str, int]) -> bool:
        for edge in pattern.positive.edges:
            if edge.src in assignment and edge.tgt in assignment:
                if not _edge_holds(sentence, assignment[edge.src], assignment[edge.tgt], edge.labels):
                    return False
        return True

    matches: list[Match] = []

    def search(i: int, assignment: dict[str, int]) -> None:
        if i == len(var_order):
            if all(not _without_admits(block, sentence, assignment) for block in pattern.withouts):
                matches.append(Match(dict(assignment)))
            return
        var = var_order[i]
        used = set(assignment.values())
        for wid in candidates[var]:
            if wid in used:
                continue
            assignment[var] = wid
            if edges_ok(assignment):
                search(i + 1, assignment)
            del assignment[var]

    search(0, {})
    matches.sort(key=lambda m: m.key(var_order))
    return matches


def count_matches(pattern: Pattern, corpus: Corpus) -> dict[str, int]:
    """Match counts per sentence, keyed by sent_id (or a positional key)."""
    counts: dict[str, int] = {}
    for i, sentence in enumerate(corpus.sentences):
        key = sentence.sent_id if sentence.sent_id is not None else f"[{i + 1}]"
        counts[key] = len(find_matches(pattern, sentence))
    return counts
