"""Corpus profiling: domain tables, sentence lengths, POS distributions,
cross-corpus frequency ratios, and vocabulary overlap.

Token counts follow the word-row convention: MWT range lines and empty
nodes are not counted. Sentence-length statistics use the sample (n-1)
standard deviation.
"""

from __future__ import annotations

import math
import re
import statistics
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

from .conllu import Corpus


class StatsError(Exception):
    pass


@dataclass(frozen=True)
class DomainStats:
    domain: str
    documents: int
    tokens: int
    sentences: int


@dataclass(frozen=True)
class RatioEntry:
    item: str
    count_a: int
    count_b: int
    ratio: float  # count_b / count_a; 0.0 and math.inf permitted


@dataclass(frozen=True)
class OverlapStats:
    size_a: int
    size_b: int
    only_a: int
    only_b: int
    both: int


_DOMAIN_PREFIX_RE = re.compile(r"[A-Za-z0-9]+")


def domain_of(newdoc_id: str) -> str:
    """Leading alphanumeric run of a document id, e.g. `health_03` -> `health`."""
    m = _DOMAIN_PREFIX_RE.match(newdoc_id)
    return m.group() if m else newdoc_id


def read_domain_manifest(path) -> dict[str, str]:
    """Sidecar manifest: tab-separated `newdoc_id  domain` lines."""
    mapping = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        newdoc_id, _, domain = line.partition("\t")
        mapping[newdoc_id] = domain.strip()
    return mapping


def corpus_stats(
    corpus: Corpus, domain_map: dict[str, str] | None = None
) -> tuple[list[DomainStats], DomainStats]:
    """Per-domain document/token/sentence counts plus a totals row.

    Domains come from the manifest when given, otherwise from the leading
    alphanumeric prefix of each newdoc id. A sentence outside any document
    (or with a document missing from the manifest) is an error.
    """
    docs_by_domain: dict[str, set[str]] = {}
    tokens: Counter = Counter()
    sentences: Counter = Counter()
    for doc_id, sents in corpus.documents().items():
        if doc_id is None:
            raise StatsError("sentence without a newdoc id cannot be assigned a domain")
        if domain_map is not None:
            if doc_id not in domain_map:
                raise StatsError(f"document {doc_id!r} missing from the domain manifest")
            domain = domain_map[doc_id]
        else:
            domain = domain_of(doc_id)
        docs_by_domain.setdefault(domain, set()).add(doc_id)
        for sent in sents:
            tokens[domain] += len(sent.words)
            sentences[domain] += 1
    rows = [
        DomainStats(domain, len(docs_by_domain[domain]), tokens[domain], sentences[domain])
        for domain in sorted(docs_by_domain)
    ]
    total = DomainStats(
        "total",
        sum(r.documents for r in rows),
        sum(r.tokens for r in rows),
        sum(r.sentences for r in rows),
    )
    return rows, total


def length_stats(corpus: Corpus) -> tuple[float, float]:
    """Mean and sample standard deviation of words per sentence."""
    lengths = [len(sent.words) for sent in corpus.sentences]
    if not lengths:
        raise StatsError("length statistics of an empty corpus are undefined")
    mean = statistics.fmean(lengths)
    sd = statistics.stdev(lengths) if len(lengths) > 1 else 0.0
    return mean, sd


def pos_distribution(corpus: Corpus) -> dict[str, int]:
    counts: Counter = Counter()
    for sent in corpus.sentences:
        for word in sent.words:
            counts[word.upos] += 1
    return dict(sorted(counts.items()))


def _key_fn(key: str):
    if key == "form":
        return lambda w: w.form
    if key == "lemma":
        return lambda w: w.lemma
    raise StatsError(f"unknown vocabulary key {key!r} (use 'form' or 'lemma')")


def _counts(corpus: Corpus, key: str) -> Counter:
    get = _key_fn(key)
    counts: Counter = Counter()
    for sent in corpus.sentences:
        for word in sent.words:
            counts[get(word)] += 1
    return counts


def freq_ratio(
    corpus_a: Corpus, corpus_b: Corpus, key: str = "form"
) -> tuple[list[RatioEntry], list[RatioEntry]]:
    """Frequency ratios count_b/count_a per vocabulary item, no smoothing.

    Returns the full entry list twice: sorted ascending by ratio (items
    overrepresented in the first corpus come first) and descending (items
    overrepresented in the second corpus first). Items absent from both
    corpora do not occur.
    """
    counts_a = _counts(corpus_a, key)
    counts_b = _counts(corpus_b, key)
    entries = []
    for item in counts_a.keys() | counts_b.keys():
        a, b = counts_a.get(item, 0), counts_b.get(item, 0)
        ratio = b / a if a else math.inf
        entries.append(RatioEntry(item, a, b, ratio))
    ascending = sorted(entries, key=lambda e: (e.ratio, -e.count_a, e.item))
    descending = sorted(entries, key=lambda e: (-e.ratio, -e.count_b, e.item))
    return ascending, descending


def vocab_overlap(corpus_a: Corpus, corpus_b: Corpus, key: str = "form") -> OverlapStats:
    get = _key_fn(key)
    types_a = {get(w) for sent in corpus_a.sentences for w in sent.words}
    types_b = {get(w) for sent in corpus_b.sentences for w in sent.words}
    return OverlapStats(
        size_a=len(types_a),
        size_b=len(types_b),
        only_a=len(types_a - types_b),
        only_b=len(types_b - types_a),
        both=len(types_a & types_b),
    )
