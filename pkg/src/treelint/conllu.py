"""CoNLL-U object model, parser, serializer, and structural checks.

The model keeps everything needed for byte-exact round trips of canonical
files: comments are stored verbatim, multiword-token ranges and empty-node
lines are preserved in place, and serialization emits exactly one byte form
(tabs, `_` for empty columns, LF line ends, one blank line after every
sentence).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable, Iterator


class ParseError(Exception):
    """Malformed CoNLL-U input; carries the 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.message = message
        self.line = line


@dataclass(frozen=True)
class ParseIssue:
    """One problem found while parsing in lenient mode."""

    line: int
    message: str


@dataclass(frozen=True)
class Feats:
    """Morphological feature bundle, canonically ordered.

    Entries are (key, value) pairs with unique keys, sorted ascending by
    case-insensitive key. The empty bundle serializes as `_`.
    """

    entries: tuple[tuple[str, str], ...] = ()

    @classmethod
    def make(cls, entries: Iterable[tuple[str, str]]) -> "Feats":
        items = list(entries)
        keys = [k for k, _ in items]
        if len(set(keys)) != len(keys):
            raise ValueError("duplicate feature key")
        items.sort(key=lambda kv: (kv[0].lower(), kv[0]))
        return cls(tuple(items))

    @classmethod
    def parse(cls, text: str) -> "Feats":
        if text == "_" or text == "":
            return cls()
        entries = []
        for item in text.split("|"):
            key, sep, value = item.partition("=")
            if not sep or not key:
                raise ValueError(f"malformed feature {item!r}")
            entries.append((key, value))
        return cls.make(entries)

    def get(self, key: str) -> str | None:
        for k, v in self.entries:
            if k == key:
                return v
        return None

    def with_entry(self, key: str, value: str) -> "Feats":
        kept = [(k, v) for k, v in self.entries if k != key]
        kept.append((key, value))
        return Feats.make(kept)

    def without(self, key: str) -> "Feats":
        return Feats(tuple((k, v) for k, v in self.entries if k != key))

    def __str__(self) -> str:
        if not self.entries:
            return "_"
        return "|".join(f"{k}={v}" for k, v in self.entries)


@dataclass(frozen=True)
class Misc:
    """MISC column: `|`-separated items kept verbatim, in input order."""

    items: tuple[str, ...] = ()

    @classmethod
    def parse(cls, text: str) -> "Misc":
        if text == "_" or text == "":
            return cls()
        return cls(tuple(text.split("|")))

    def get(self, key: str) -> str | None:
        prefix = key + "="
        for item in self.items:
            if item.startswith(prefix):
                return item[len(prefix):]
        return None

    def pairs(self) -> list[tuple[str, str | None]]:
        out: list[tuple[str, str | None]] = []
        for item in self.items:
            key, sep, value = item.partition("=")
            out.append((key, value if sep else None))
        return out

    def __str__(self) -> str:
        return "|".join(self.items) if self.items else "_"


@dataclass(frozen=True)
class Word:
    """One syntactic word (a 10-column line with an integer ID)."""

    id: int
    form: str
    lemma: str
    upos: str
    xpos: str  # "" when the column is "_"
    feats: Feats
    head: int
    deprel: str
    deps: str  # enhanced-dependency column, passed through; "" when "_"
    misc: Misc

    def to_line(self) -> str:
        cols = (
            str(self.id),
            self.form,
            self.lemma,
            self.upos,
            self.xpos or "_",
            str(self.feats),
            str(self.head),
            self.deprel,
            self.deps or "_",
            str(self.misc),
        )
        return "\t".join(cols)


@dataclass(frozen=True)
class MwtSpan:
    """Multiword-token range `start-end` with its surface form."""

    start: int
    end: int
    surface_form: str
    misc: Misc = Misc()

    def covers(self, word_id: int) -> bool:
        return self.start <= word_id <= self.end

    def to_line(self) -> str:
        return "\t".join(
            (f"{self.start}-{self.end}", self.surface_form, "_", "_", "_", "_", "_", "_", "_", str(self.misc))
        )


@dataclass(frozen=True)
class EmptyNode:
    """Ellipsis line with a `i.j` ID, preserved verbatim and otherwise inert."""

    anchor: int
    index: int
    columns: tuple[str, ...]

    def to_line(self) -> str:
        return "\t".join(self.columns)


@dataclass(frozen=True)
class Sentence:
    words: tuple[Word, ...]
    mwt_spans: tuple[MwtSpan, ...] = ()
    comments: tuple[str, ...] = ()
    sent_id: str | None = None
    text: str | None = None
    newdoc_id: str | None = None
    empty_nodes: tuple[EmptyNode, ...] = ()

    def word(self, word_id: int) -> Word:
        w = self.words[word_id - 1]
        if w.id != word_id:
            raise KeyError(f"no word with id {word_id}")
        return w

    def mwt_covering(self, word_id: int) -> MwtSpan | None:
        for span in self.mwt_spans:
            if span.covers(word_id):
                return span
        return None

    def surface_tokens(self) -> Iterator[str]:
        """Surface tokens in order: MWT surface forms, sub-tokens skipped."""
        spans = {s.start: s for s in self.mwt_spans}
        i = 0
        while i < len(self.words):
            wid = self.words[i].id
            span = spans.get(wid)
            if span is not None:
                yield span.surface_form
                i += span.end - span.start + 1
            else:
                yield self.words[i].form
                i += 1

    def to_lines(self) -> list[str]:
        lines = list(self.comments) if self.comments else self._generated_comments()
        spans = {s.start: s for s in self.mwt_spans}
        empties: dict[int, list[EmptyNode]] = {}
        for node in self.empty_nodes:
            empties.setdefault(node.anchor, []).append(node)
        for node in empties.get(0, []):
            lines.append(node.to_line())
        for w in self.words:
            if w.id in spans:
                lines.append(spans[w.id].to_line())
            lines.append(w.to_line())
            for node in empties.get(w.id, []):
                lines.append(node.to_line())
        return lines

    def _generated_comments(self) -> list[str]:
        out = []
        if self.newdoc_id is not None:
            out.append(f"# newdoc id = {self.newdoc_id}")
        if self.sent_id is not None:
            out.append(f"# sent_id = {self.sent_id}")
        if self.text is not None:
            out.append(f"# text = {self.text}")
        return out


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self) -> Iterator[Sentence]:
        return iter(self.sentences)

    def documents(self) -> dict[str | None, list[Sentence]]:
        """Partition sentences by document, carrying newdoc ids forward."""
        docs: dict[str | None, list[Sentence]] = {}
        current: str | None = None
        for sent in self.sentences:
            if sent.newdoc_id is not None:
                current = sent.newdoc_id
            docs.setdefault(current, []).append(sent)
        return docs


@dataclass(frozen=True)
class StructuralIssue:
    """One violated tree invariant, as returned by structural_check."""

    code: str
    message: str
    word_id: int | None = None


@dataclass(frozen=True)
class ConcatenationViolation:
    """Multiword token whose surface is not the concatenation of its parts."""

    start: int
    end: int
    surface_form: str
    concatenation: str


_STRUCTURED_COMMENTS = {
    "# sent_id": "sent_id",
    "# text": "text",
    "# newdoc id": "newdoc_id",
}


def _comment_value(line: str, prefix: str) -> str | None:
    rest = line[len(prefix):]
    if rest.startswith(" =") or rest.startswith("="):
        return rest.split("=", 1)[1].strip()
    return None


class _SentenceBuilder:
    def __init__(self, start_line: int):
        self.start_line = start_line
        self.comments: list[str] = []
        self.words: list[Word] = []
        self.word_lines: list[int] = []
        self.mwt_spans: list[MwtSpan] = []
        self.mwt_lines: list[int] = []
        self.empty_nodes: list[EmptyNode] = []
        self.sent_id: str | None = None
        self.text: str | None = None
        self.newdoc_id: str | None = None

    def add_comment(self, line: str) -> None:
        self.comments.append(line)
        for prefix, attr in _STRUCTURED_COMMENTS.items():
            if line.startswith(prefix):
                value = _comment_value(line, prefix)
                if value is not None:
                    setattr(self, attr, value)
                break

    def add_line(self, line: str, lineno: int) -> None:
        cols = line.split("\t")
        if len(cols) != 10:
            raise ParseError(f"expected 10 tab-separated columns, got {len(cols)}", lineno)
        token_id = cols[0]
        if "-" in token_id:
            start_s, _, end_s = token_id.partition("-")
            if not (start_s.isdigit() and end_s.isdigit()):
                raise ParseError(f"non-numeric id {token_id!r}", lineno)
            start, end = int(start_s), int(end_s)
            if start >= end:
                raise ParseError(f"invalid multiword range {token_id!r}", lineno)
            for prior in self.mwt_spans:
                if start <= prior.end and prior.start <= end:
                    raise ParseError(f"multiword range {token_id!r} overlaps {prior.start}-{prior.end}", lineno)
            self.mwt_spans.append(MwtSpan(start, end, cols[1], Misc.parse(cols[9])))
            self.mwt_lines.append(lineno)
        elif "." in token_id:
            anchor_s, _, sub_s = token_id.partition(".")
            if not (anchor_s.isdigit() and sub_s.isdigit()):
                raise ParseError(f"non-numeric id {token_id!r}", lineno)
            self.empty_nodes.append(EmptyNode(int(anchor_s), int(sub_s), tuple(cols)))
        else:
            if not token_id.isdigit():
                raise ParseError(f"non-numeric id {token_id!r}", lineno)
            if not cols[6].isdigit():
                raise ParseError(f"non-numeric head {cols[6]!r}", lineno)
            try:
                feats = Feats.parse(cols[5])
            except ValueError as exc:
                raise ParseError(str(exc), lineno) from None
            self.words.append(
                Word(
                    id=int(token_id),
                    form=cols[1],
                    lemma=cols[2],
                    upos=cols[3],
                    xpos="" if cols[4] == "_" else cols[4],
                    feats=feats,
                    head=int(cols[6]),
                    deprel=cols[7],
                    deps="" if cols[8] == "_" else cols[8],
                    misc=Misc.parse(cols[9]),
                )
            )
            self.word_lines.append(lineno)

    def finish(self) -> Sentence:
        n = len(self.words)
        for i, (w, lineno) in enumerate(zip(self.words, self.word_lines)):
            if w.id != i + 1:
                raise ParseError(f"word id {w.id} out of sequence (expected {i + 1})", lineno)
        for w, lineno in zip(self.words, self.word_lines):
            if w.head > n:
                raise ParseError(f"head {w.head} out of range (sentence has {n} words)", lineno)
        for span, lineno in zip(self.mwt_spans, self.mwt_lines):
            if span.end > n:
                raise ParseError(f"multiword range {span.start}-{span.end} exceeds sentence length {n}", lineno)
        for node in self.empty_nodes:
            if node.anchor > n:
                raise ParseError(f"empty node {node.anchor}.{node.index} anchored past sentence end", self.start_line)
        if n == 0:
            raise ParseError("sentence has no word lines", self.start_line)
        return Sentence(
            words=tuple(self.words),
            mwt_spans=tuple(self.mwt_spans),
            comments=tuple(self.comments),
            sent_id=self.sent_id,
            text=self.text,
            newdoc_id=self.newdoc_id,
            empty_nodes=tuple(self.empty_nodes),
        )


def _iter_lines(source) -> Iterator[str]:
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    elif isinstance(source, Path):
        text = source.read_text(encoding="utf-8")
    elif isinstance(source, io.TextIOBase):
        text = source.read()
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    return iter(text.split("\n"))


def parse(source, *, strict: bool = True) -> Corpus:
    """Parse CoNLL-U from text, bytes, a path, or a file object.

    Strict mode raises ParseError at the first malformed line. Use
    parse_lenient to skip broken sentences and keep going.
    """
    corpus, issues = _parse(source, strict=strict)
    if strict and issues:
        raise AssertionError("strict parse returned issues")  # pragma: no cover
    return corpus


def parse_lenient(source) -> tuple[Corpus, list[ParseIssue]]:
    """Parse, dropping each sentence that contains an error and reporting it."""
    return _parse(source, strict=False)


def _parse(source, *, strict: bool) -> tuple[Corpus, list[ParseIssue]]:
    sentences: list[Sentence] = []
    issues: list[ParseIssue] = []
    seen_ids: dict[str, int] = {}
    builder: _SentenceBuilder | None = None
    broken = False

    def close(lineno: int) -> None:
        nonlocal builder, broken
        if builder is None:
            return
        if not broken:
            try:
                sent = builder.finish()
                if sent.sent_id is not None:
                    if sent.sent_id in seen_ids:
                        raise ParseError(
                            f"duplicate sent_id {sent.sent_id!r} (first at line {seen_ids[sent.sent_id]})",
                            builder.start_line,
                        )
                    seen_ids[sent.sent_id] = builder.start_line
                sentences.append(sent)
            except ParseError as exc:
                if strict:
                    raise
                issues.append(ParseIssue(exc.line, exc.message))
        builder = None
        broken = False

    lineno = 0
    for lineno, raw in enumerate(_iter_lines(source), start=1):
        line = raw.rstrip("\r")
        if line == "":
            close(lineno)
            continue
        if builder is None:
            builder = _SentenceBuilder(lineno)
            broken = False
        if line.startswith("#"):
            builder.add_comment(line)
            continue
        if broken:
            continue
        try:
            builder.add_line(line, lineno)
        except ParseError as exc:
            if strict:
                raise
            issues.append(ParseIssue(exc.line, exc.message))
            broken = True
    close(lineno)
    return Corpus(tuple(sentences)), issues


def parse_file(path, *, strict: bool = True) -> Corpus:
    return parse(Path(path), strict=strict)


def serialize(corpus: Corpus | Sentence) -> str:
    """Render the canonical byte form (as text; encode as UTF-8 to write).

    Canonical form: tab-separated columns, `_` for empty values, LF line
    ends, each sentence followed by exactly one blank line.
    """
    sentences = corpus.sentences if isinstance(corpus, Corpus) else (corpus,)
    chunks = []
    for sent in sentences:
        chunks.extend(sent.to_lines())
        chunks.append("")
    return "\n".join(chunks) + "\n" if chunks else ""


def write_file(corpus: Corpus, path) -> None:
    Path(path).write_text(serialize(corpus), encoding="utf-8", newline="\n")


def structural_check(sentence: Sentence) -> list[StructuralIssue]:
    """Check tree invariants; an empty list means the sentence is sound.

    Checked: contiguous 1..n ids, heads in range, exactly one root,
    head 0 if and only if deprel `root`, acyclicity, and well-formed
    non-overlapping multiword ranges.
    """
    issues: list[StructuralIssue] = []
    n = len(sentence.words)
    ids_ok = True
    for i, w in enumerate(sentence.words):
        if w.id != i + 1:
            issues.append(StructuralIssue("word-id-sequence", f"word id {w.id} at position {i + 1}", w.id))
            ids_ok = False
    if n == 0:
        issues.append(StructuralIssue("empty-sentence", "sentence has no words"))
        return issues
    for w in sentence.words:
        if not 0 <= w.head <= n:
            issues.append(StructuralIssue("head-out-of-range", f"word {w.id} has head {w.head}", w.id))
        if (w.head == 0) != (w.deprel == "root"):
            issues.append(
                StructuralIssue("root-deprel", f"word {w.id}: head {w.head} with deprel {w.deprel!r}", w.id)
            )
    roots = [w.id for w in sentence.words if w.head == 0]
    if len(roots) > 1:
        issues.append(StructuralIssue("multiple-roots", f"words {roots} all have head 0"))
    elif not roots:
        issues.append(StructuralIssue("no-root", "no word has head 0"))
    if ids_ok and all(0 <= w.head <= n for w in sentence.words):
        color = [0] * (n + 1)  # 0 unseen, 1 on current path, 2 done
        for w in sentence.words:
            wid = w.id
            path = []
            while wid != 0 and color[wid] == 0:
                color[wid] = 1
                path.append(wid)
                wid = sentence.words[wid - 1].head
            if wid != 0 and color[wid] == 1:
                issues.append(StructuralIssue("cycle", f"head cycle through word {wid}", wid))
            for p in path:
                color[p] = 2
    for span in sentence.mwt_spans:
        if span.start >= span.end or span.start < 1 or span.end > n:
            issues.append(StructuralIssue("mwt-range", f"bad multiword range {span.start}-{span.end}"))
    spans = sorted(sentence.mwt_spans, key=lambda s: s.start)
    for a, b in zip(spans, spans[1:]):
        if b.start <= a.end:
            issues.append(
                StructuralIssue("mwt-overlap", f"ranges {a.start}-{a.end} and {b.start}-{b.end} overlap")
            )
    return issues


def check_concatenative(sentence: Sentence) -> list[ConcatenationViolation]:
    """Report every MWT whose surface differs from its sub-token concatenation."""
    violations = []
    for span in sentence.mwt_spans:
        concat = "".join(w.form for w in sentence.words[span.start - 1: span.end])
        if concat != span.surface_form:
            violations.append(ConcatenationViolation(span.start, span.end, span.surface_form, concat))
    return violations


def renumber(
    sentence: Sentence,
    words: list[Word],
    id_map: dict[int, int],
    mwt_spans: list[MwtSpan],
) -> Sentence:
    """Rebuild a sentence after insertions/deletions, remapping heads and ranges.

    `words` carry their new positions implicitly (list order); `id_map` maps
    old ids to new ids for every surviving old word.
    """
    new_words = []
    for pos, w in enumerate(words, start=1):
        head = w.head
        if head != 0:
            head = id_map[head]
        new_words.append(replace(w, id=pos, head=head))
    new_empties = []
    for node in sentence.empty_nodes:
        anchor = node.anchor
        while anchor > 0 and anchor not in id_map:
            anchor -= 1
        new_anchor = id_map[anchor] if anchor > 0 else 0
        cols = list(node.columns)
        cols[0] = f"{new_anchor}.{node.index}"
        new_empties.append(EmptyNode(new_anchor, node.index, tuple(cols)))
    return replace(
        sentence,
        words=tuple(new_words),
        mwt_spans=tuple(mwt_spans),
        empty_nodes=tuple(new_empties),
    )
