"""CoNLL-2018 style end-to-end scoring of system output against gold.

Words are mapped to character spans over the whitespace-stripped surface
text of each sentence. Sub-tokens of a concatenative MWT partition its
surface span by their form lengths; sub-tokens that do not concatenate
(legacy tokenization) split the span along a longest-common-subsequence
alignment between the surface and the concatenated forms. Two words align
only when their spans coincide, and metrics over aligned words follow the
2018 shared-task conventions: deprel subtypes are ignored, FEATS are
filtered to the universal feature set, CLAS/MLAS/BLEX restrict to content
relations, and MLAS also compares functional children.

The content/functional relation sets and the universal feature list live in
data/scoring_config.json, deliberately outside the code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

from .conllu import Corpus, Sentence

_config = json.loads(
    (resources.files(__package__) / "data" / "scoring_config.json").read_text(encoding="utf-8")
)
CONTENT_DEPRELS = frozenset(_config["content_deprels"])
FUNCTIONAL_DEPRELS = frozenset(_config["functional_deprels"])
UNIVERSAL_FEATURES = frozenset(_config["universal_features"])

METRIC_ORDER = (
    "Tokens", "Sentences", "Words", "MWT", "UPOS", "XPOS", "UFeats",
    "AllTags", "Lemmas", "UAS", "LAS", "CLAS", "MLAS", "BLEX",
)

# Metrics that additionally report accuracy over aligned word pairs.
ACC_METRICS = ("UPOS", "XPOS", "UFeats", "AllTags", "Lemmas",
               "UAS", "LAS", "CLAS", "MLAS", "BLEX")


class ScoreError(Exception):
    pass


def _strip_spaces(text: str) -> str:
    return "".join(c for c in text if not c.isspace())


def _normalize_feats(feats) -> str:
    items = [f"{k}={v}" for k, v in feats.entries if k in UNIVERSAL_FEATURES]
    return "|".join(sorted(items))


def _normalize_deprel(deprel: str) -> str:
    return deprel.split(":", 1)[0]


@dataclass
class _ScoredWord:
    index: int  # position within the sentence, 0-based
    span: tuple[int, int]
    upos: str
    xpos: str
    feats: str
    lemma: str
    head: int
    deprel: str
    parent: int | None = None  # index, None for root
    functional_children: list[int] | None = None

    @property
    def is_content(self) -> bool:
        return self.deprel in CONTENT_DEPRELS

    @property
    def is_functional(self) -> bool:
        return self.deprel in FUNCTIONAL_DEPRELS


@dataclass(frozen=True)
class SentenceSpans:
    """Char spans for one sentence: per-word, per-token, and per-MWT."""

    text: str
    words: list[_ScoredWord]
    token_spans: list[tuple[int, int]]
    mwt_items: list[tuple[int, int, tuple[str, ...]]]  # (start, end, sub-token forms)


def _lcs_boundaries(surface: str, forms: list[str]) -> list[int]:
    """Split points of `surface` for each form, via LCS against their concat."""
    concat = "".join(forms)
    n, m = len(surface), len(concat)
    lcs = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        for j in range(m - 1, -1, -1):
            if surface[i] == concat[j]:
                lcs[i][j] = lcs[i + 1][j + 1] + 1
            else:
                lcs[i][j] = max(lcs[i + 1][j], lcs[i][j + 1])
    pairs = []  # matched (surface index, concat index), increasing
    i = j = 0
    while i < n and j < m:
        if surface[i] == concat[j]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif lcs[i + 1][j] >= lcs[i][j + 1]:
            i += 1
        else:
            j += 1
    boundaries = [0]
    offset = 0
    for form in forms[:-1]:
        offset += len(form)
        pos = next((si for si, cj in pairs if cj >= offset), n)
        boundaries.append(max(pos, boundaries[-1]))
    boundaries.append(n)
    return boundaries


def sentence_spans(sentence: Sentence) -> SentenceSpans:
    """Compute every word's char span in the whitespace-stripped text."""
    words: list[_ScoredWord] = []
    token_spans: list[tuple[int, int]] = []
    mwt_items: list[tuple[int, int, tuple[str, ...]]] = []
    text_parts: list[str] = []
    offset = 0
    spans_by_start = {s.start: s for s in sentence.mwt_spans}

    def scored(word, span):
        return _ScoredWord(
            index=word.id - 1,
            span=span,
            upos=word.upos,
            xpos=word.xpos,
            feats=_normalize_feats(word.feats),
            lemma=word.lemma,
            head=word.head,
            deprel=_normalize_deprel(word.deprel),
        )

    i = 0
    while i < len(sentence.words):
        word = sentence.words[i]
        mwt = spans_by_start.get(word.id)
        if mwt is None:
            surface = _strip_spaces(word.form)
            span = (offset, offset + len(surface))
            words.append(scored(word, span))
            token_spans.append(span)
            text_parts.append(surface)
            offset += len(surface)
            i += 1
            continue
        surface = _strip_spaces(mwt.surface_form)
        subwords = sentence.words[mwt.start - 1: mwt.end]
        forms = [_strip_spaces(w.form) for w in subwords]
        if "".join(forms) == surface:
            boundaries = [0]
            for form in forms:
                boundaries.append(boundaries[-1] + len(form))
        else:
            boundaries = _lcs_boundaries(surface, forms)
        for k, w in enumerate(subwords):
            span = (offset + boundaries[k], offset + boundaries[k + 1])
            words.append(scored(w, span))
        token_spans.append((offset, offset + len(surface)))
        mwt_items.append((offset, offset + len(surface), tuple(forms)))
        text_parts.append(surface)
        offset += len(surface)
        i += len(subwords)

    for w in words:
        w.functional_children = []
    for w in words:
        if w.head > 0:
            w.parent = w.head - 1
            if w.is_functional:
                words[w.head - 1].functional_children.append(w.index)
    return SentenceSpans("".join(text_parts), words, token_spans, mwt_items)


@dataclass(frozen=True)
class Alignment:
    """Order-preserving one-to-one pairing of span-identical words."""

    gold_spans: tuple[tuple[int, int], ...]
    system_spans: tuple[tuple[int, int], ...]
    pairs: tuple[tuple[int, int], ...]  # (gold index, system index)


def _match_sorted(gold: list, system: list, key=lambda x: x) -> list[tuple[int, int]]:
    """Merge two lists sorted by key, pairing equal keys in order."""
    pairs = []
    i = j = 0
    while i < len(gold) and j < len(system):
        a, b = key(gold[i]), key(system[j])
        if a == b:
            pairs.append((i, j))
            i += 1
            j += 1
        elif a < b:
            i += 1
        else:
            j += 1
    return pairs


def align(gold: Sentence, system: Sentence) -> Alignment:
    """Align two tokenizations of the same sentence by character spans.

    Raises ScoreError when the whitespace-stripped surface texts differ.
    """
    g = sentence_spans(gold)
    s = sentence_spans(system)
    if g.text != s.text:
        raise ScoreError(
            f"surface text mismatch: gold {g.text!r} vs system {s.text!r}"
        )
    pairs = _match_sorted([w.span for w in g.words], [w.span for w in s.words])
    return Alignment(
        gold_spans=tuple(w.span for w in g.words),
        system_spans=tuple(w.span for w in s.words),
        pairs=tuple(pairs),
    )


@dataclass(frozen=True)
class MetricScore:
    correct: int
    gold_total: int
    system_total: int
    aligned_total: int | None = None

    @property
    def precision(self) -> float:
        if self.gold_total == 0 and self.system_total == 0:
            return 100.0
        return 100.0 * self.correct / self.system_total if self.system_total else 0.0

    @property
    def recall(self) -> float:
        if self.gold_total == 0 and self.system_total == 0:
            return 100.0
        return 100.0 * self.correct / self.gold_total if self.gold_total else 0.0

    @property
    def f1(self) -> float:
        if self.gold_total == 0 and self.system_total == 0:
            return 100.0
        if self.gold_total + self.system_total == 0:
            return 0.0
        return 200.0 * self.correct / (self.gold_total + self.system_total)

    @property
    def aligned_accuracy(self) -> float | None:
        if self.aligned_total is None:
            return None
        if self.aligned_total == 0:
            return 100.0
        return 100.0 * self.correct / self.aligned_total


@dataclass(frozen=True)
class ScoreReport:
    metrics: dict[str, MetricScore]

    def __getitem__(self, name: str) -> MetricScore:
        return self.metrics[name]


class _Counter:
    __slots__ = ("correct", "gold", "system", "aligned")

    def __init__(self):
        self.correct = self.gold = self.system = self.aligned = 0


def _score_sentence(counters: dict[str, _Counter], gold: SentenceSpans, system: SentenceSpans) -> None:
    pairs = _match_sorted([w.span for w in gold.words], [w.span for w in system.words])
    sys_to_gold = {s: g for g, s in pairs}

    tok = counters["Tokens"]
    tok.correct += len(_match_sorted(gold.token_spans, system.token_spans))
    tok.gold += len(gold.token_spans)
    tok.system += len(system.token_spans)

    mwt = counters["MWT"]
    mwt.gold += len(gold.mwt_items)
    mwt.system += len(system.mwt_items)
    mwt.correct += len(_match_sorted(gold.mwt_items, system.mwt_items))

    def aligned_parent(s_word: _ScoredWord) -> object:
        # The gold partner of the system word's parent; distinguishes
        # root (None) from an unaligned parent.
        if s_word.parent is None:
            return None
        return sys_to_gold.get(s_word.parent, "unaligned")

    def lemma_key(g: _ScoredWord, s: _ScoredWord) -> bool:
        return g.lemma == "_" or g.lemma == s.lemma

    def mlas_children(g: _ScoredWord, s: _ScoredWord) -> bool:
        g_children = [
            (c, gold.words[c].deprel, gold.words[c].upos, gold.words[c].feats)
            for c in g.functional_children
        ]
        s_children = [
            (sys_to_gold.get(c, -1), system.words[c].deprel, system.words[c].upos, system.words[c].feats)
            for c in s.functional_children
        ]
        return g_children == s_children

    checks = {
        "UPOS": lambda g, s: g.upos == s.upos,
        "XPOS": lambda g, s: g.xpos == s.xpos,
        "UFeats": lambda g, s: g.feats == s.feats,
        "AllTags": lambda g, s: (g.upos, g.xpos, g.feats) == (s.upos, s.xpos, s.feats),
        "Lemmas": lemma_key,
        "UAS": lambda g, s: g.parent == aligned_parent(s),
        "LAS": lambda g, s: g.parent == aligned_parent(s) and g.deprel == s.deprel,
    }
    content_checks = {
        "CLAS": checks["LAS"],
        "MLAS": lambda g, s: (
            checks["LAS"](g, s)
            and g.upos == s.upos
            and g.feats == s.feats
            and mlas_children(g, s)
        ),
        "BLEX": lambda g, s: checks["LAS"](g, s) and lemma_key(g, s),
    }

    c = counters["Words"]
    c.correct += len(pairs)
    c.aligned += len(pairs)
    c.gold += len(gold.words)
    c.system += len(system.words)

    for name, check in checks.items():
        c = counters[name]
        c.gold += len(gold.words)
        c.system += len(system.words)
        c.aligned += len(pairs)
        c.correct += sum(1 for gi, si in pairs if check(gold.words[gi], system.words[si]))

    gold_content = sum(1 for w in gold.words if w.is_content)
    system_content = sum(1 for w in system.words if w.is_content)
    aligned_content = sum(1 for gi, _ in pairs if gold.words[gi].is_content)
    for name, check in content_checks.items():
        c = counters[name]
        c.gold += gold_content
        c.system += system_content
        c.aligned += aligned_content
        c.correct += sum(
            1
            for gi, si in pairs
            if gold.words[gi].is_content and check(gold.words[gi], system.words[si])
        )


def score(gold: Corpus, system: Corpus) -> ScoreReport:
    """Score a system corpus against gold, sentence by sentence.

    Sentence alignment is positional (gold sentence splits assumed); a
    sentence-count or surface-text mismatch raises ScoreError.
    """
    if len(gold.sentences) != len(system.sentences):
        raise ScoreError(
            f"sentence count mismatch: gold {len(gold.sentences)}, system {len(system.sentences)}"
        )
    counters = {name: _Counter() for name in METRIC_ORDER}
    for idx, (gs, ss) in enumerate(zip(gold.sentences, system.sentences)):
        g = sentence_spans(gs)
        s = sentence_spans(ss)
        if g.text != s.text:
            raise ScoreError(
                f"surface text mismatch in sentence {idx + 1}: gold {g.text!r} vs system {s.text!r}"
            )
        _score_sentence(counters, g, s)
    # Positional sentence alignment over identical text: every pair matches.
    sent = counters["Sentences"]
    sent.gold = sent.system = sent.correct = len(gold.sentences)

    metrics: dict[str, MetricScore] = {}
    for name in METRIC_ORDER:
        c = counters[name]
        aligned = c.aligned if name in ACC_METRICS else None
        metrics[name] = MetricScore(c.correct, c.gold, c.system, aligned)
    return ScoreReport(metrics)


def render_table(report: ScoreReport) -> str:
    lines = [
        "Metric     | Precision |    Recall |  F1 Score | AlignedAcc",
        "-----------+-----------+-----------+-----------+-----------",
    ]
    for name in METRIC_ORDER:
        m = report[name]
        acc = m.aligned_accuracy
        acc_cell = f"{acc:10.2f}" if acc is not None else ""
        lines.append(f"{name:11}|{m.precision:10.2f} |{m.recall:10.2f} |{m.f1:10.2f} |{acc_cell}")
    return "\n".join(lines) + "\n"


def render_tsv(report: ScoreReport) -> str:
    lines = ["metric\tprecision\trecall\tf1\taligned_acc"]
    for name in METRIC_ORDER:
        m = report[name]
        acc = f"{m.aligned_accuracy:.2f}" if m.aligned_accuracy is not None else ""
        lines.append(f"{name}\t{m.precision:.2f}\t{m.recall:.2f}\t{m.f1:.2f}\t{acc}")
    return "\n".join(lines) + "\n"


def render_json(report: ScoreReport) -> str:
    lines = []
    for name in METRIC_ORDER:
        m = report[name]
        payload = {
            "metric": name,
            "precision": round(m.precision, 2),
            "recall": round(m.recall, 2),
            "f1": round(m.f1, 2),
        }
        if m.aligned_accuracy is not None:
            payload["aligned_acc"] = round(m.aligned_accuracy, 2)
        lines.append(json.dumps(payload, ensure_ascii=False))
    return "".join(line + "\n" for line in lines)
