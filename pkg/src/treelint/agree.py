"""Inter-annotator agreement: aligned word accuracy, Cohen's kappa per
annotation layer and per morphological feature, and validator-based
disagreement audits.

Kappa is computed only over identically tokenized (span-aligned) words.
The FEATS and MISC layers compare whole bundles as single labels; the Head
layer labels each word with the first annotator's id of its head (0 for
root), mapped through the alignment, so identical structural choices always
agree. Per-feature kappa uses every aligned word as an item, with the label
ABSENT when an annotator did not set the key.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from .conllu import Corpus, Sentence
from .score import align as _align, score as _score
from .validate import Ruleset, validate_corpus

LAYERS = ("Lemma", "UPOS", "FEATS", "Head", "Deprel", "Misc")

ABSENT = "ABSENT"


class AgreementError(Exception):
    pass


def cohen_kappa(labels_a: list, labels_b: list) -> float:
    """Chance-corrected agreement between two equal-length label sequences.

    kappa = (p_o - p_e) / (1 - p_e), with expected agreement from the two
    annotators' marginal label distributions. Identical constant sequences
    give 1.0 by convention.
    """
    if len(labels_a) != len(labels_b):
        raise AgreementError(f"length mismatch: {len(labels_a)} vs {len(labels_b)}")
    n = len(labels_a)
    if n == 0:
        raise AgreementError("kappa of empty label lists is undefined")
    p_o = sum(1 for a, b in zip(labels_a, labels_b) if a == b) / n
    counts_a = Counter(labels_a)
    counts_b = Counter(labels_b)
    p_e = sum(counts_a[label] * counts_b.get(label, 0) for label in counts_a) / (n * n)
    if p_e == 1.0:
        if p_o < 1.0:
            raise AgreementError("degenerate marginals (p_e = 1) with disagreement")
        return 1.0
    return (p_o - p_e) / (1.0 - p_e)


@dataclass(frozen=True)
class LayerAgreement:
    kappa: float | None  # None when there were no aligned items
    disagreements: int


@dataclass(frozen=True)
class KappaTable:
    layers: dict[str, LayerAgreement]
    features: dict[str, LayerAgreement]
    average_feature_kappa: float | None
    total_feature_disagreements: int


@dataclass(frozen=True)
class IaaReport:
    words_accuracy: float  # Words F1, in percent
    aligned_word_count: int
    kappa_table: KappaTable


def _head_labels(sentence_a: Sentence, sentence_b: Sentence, pairs) -> tuple[list[str], list[str]]:
    b_to_a = {bi: ai for ai, bi in pairs}
    labels_a, labels_b = [], []
    for ai, bi in pairs:
        head_a = sentence_a.words[ai].head
        labels_a.append(str(head_a))
        head_b = sentence_b.words[bi].head
        if head_b == 0:
            labels_b.append("0")
        else:
            partner = b_to_a.get(head_b - 1)
            labels_b.append(str(partner + 1) if partner is not None else f"unaligned:{head_b}")
    return labels_a, labels_b


def _collect(annot_a: Corpus, annot_b: Corpus):
    """Per-layer and per-feature label sequences over all aligned words."""
    if len(annot_a.sentences) != len(annot_b.sentences):
        raise AgreementError(
            f"sentence count mismatch: {len(annot_a.sentences)} vs {len(annot_b.sentences)}"
        )
    layer_a: dict[str, list] = {layer: [] for layer in LAYERS}
    layer_b: dict[str, list] = {layer: [] for layer in LAYERS}
    feature_values: list[tuple[dict, dict]] = []  # per aligned word: feats of a, b
    aligned = 0
    for sent_a, sent_b in zip(annot_a.sentences, annot_b.sentences):
        alignment = _align(sent_a, sent_b)
        pairs = alignment.pairs
        aligned += len(pairs)
        for ai, bi in pairs:
            wa, wb = sent_a.words[ai], sent_b.words[bi]
            layer_a["Lemma"].append(wa.lemma)
            layer_b["Lemma"].append(wb.lemma)
            layer_a["UPOS"].append(wa.upos)
            layer_b["UPOS"].append(wb.upos)
            layer_a["FEATS"].append(str(wa.feats))
            layer_b["FEATS"].append(str(wb.feats))
            layer_a["Deprel"].append(wa.deprel)
            layer_b["Deprel"].append(wb.deprel)
            layer_a["Misc"].append(str(wa.misc))
            layer_b["Misc"].append(str(wb.misc))
            feature_values.append((dict(wa.feats.entries), dict(wb.feats.entries)))
        head_a, head_b = _head_labels(sent_a, sent_b, pairs)
        layer_a["Head"].extend(head_a)
        layer_b["Head"].extend(head_b)
    return layer_a, layer_b, feature_values, aligned


def _agreement(labels_a: list, labels_b: list) -> LayerAgreement:
    if not labels_a:
        return LayerAgreement(None, 0)
    disagreements = sum(1 for a, b in zip(labels_a, labels_b) if a != b)
    return LayerAgreement(cohen_kappa(labels_a, labels_b), disagreements)


def iaa(annot_a: Corpus, annot_b: Corpus) -> IaaReport:
    """Full agreement report for two annotations of the same text."""
    words_f1 = _score(annot_a, annot_b)["Words"].f1
    layer_a, layer_b, feature_values, aligned = _collect(annot_a, annot_b)

    layers = {layer: _agreement(layer_a[layer], layer_b[layer]) for layer in LAYERS}

    keys = sorted({k for fa, fb in feature_values for k in (*fa, *fb)})
    features = {}
    for key in keys:
        labels_a = [fa.get(key, ABSENT) for fa, _ in feature_values]
        labels_b = [fb.get(key, ABSENT) for _, fb in feature_values]
        features[key] = _agreement(labels_a, labels_b)

    kappas = [agr.kappa for agr in features.values() if agr.kappa is not None]
    table = KappaTable(
        layers=layers,
        features=features,
        average_feature_kappa=sum(kappas) / len(kappas) if kappas else None,
        total_feature_disagreements=sum(agr.disagreements for agr in features.values()),
    )
    return IaaReport(words_accuracy=words_f1, aligned_word_count=aligned, kappa_table=table)


@dataclass(frozen=True)
class DisagreementAudit:
    total_disagreements: int
    flagged: int
    per_rule: dict[str, int]

    @property
    def flagged_fraction(self) -> float:
        return self.flagged / self.total_disagreements if self.total_disagreements else 0.0


def audit_disagreements(annot_a: Corpus, annot_b: Corpus, ruleset: Ruleset) -> DisagreementAudit:
    """How many layer disagreements would the validator have caught?

    A disagreement (an aligned word whose two annotations differ on any
    layer) is flagged when validating either annotation yields a finding
    whose bindings include that word.
    """
    if len(annot_a.sentences) != len(annot_b.sentences):
        raise AgreementError(
            f"sentence count mismatch: {len(annot_a.sentences)} vs {len(annot_b.sentences)}"
        )
    per_rule: dict[str, int] = {}
    total = 0
    flagged = 0
    for sent_a, sent_b in zip(annot_a.sentences, annot_b.sentences):
        alignment = _align(sent_a, sent_b)
        pairs = alignment.pairs
        head_a, head_b = _head_labels(sent_a, sent_b, pairs)
        report_a = validate_corpus(Corpus((sent_a,)), ruleset)
        report_b = validate_corpus(Corpus((sent_b,)), ruleset)
        flags_a: dict[int, set[str]] = {}
        flags_b: dict[int, set[str]] = {}
        for report, flags in ((report_a, flags_a), (report_b, flags_b)):
            for finding in report.findings:
                for wid in finding.bindings.bindings.values():
                    flags.setdefault(wid, set()).add(finding.rule)
        for k, (ai, bi) in enumerate(pairs):
            wa, wb = sent_a.words[ai], sent_b.words[bi]
            differs = (
                wa.lemma != wb.lemma
                or wa.upos != wb.upos
                or str(wa.feats) != str(wb.feats)
                or head_a[k] != head_b[k]
                or wa.deprel != wb.deprel
                or str(wa.misc) != str(wb.misc)
            )
            if not differs:
                continue
            total += 1
            rules = flags_a.get(wa.id, set()) | flags_b.get(wb.id, set())
            if rules:
                flagged += 1
                for rule in sorted(rules):
                    per_rule[rule] = per_rule.get(rule, 0) + 1
    return DisagreementAudit(total, flagged, per_rule)


def render_report(report: IaaReport, audit: DisagreementAudit | None = None) -> str:
    def fmt(agr: LayerAgreement) -> str:
        return f"{agr.kappa:.3f}" if agr.kappa is not None else "n/a"

    layers = report.kappa_table.layers
    header = ["Words"] + list(LAYERS)
    values = [f"{report.words_accuracy:.1f}%"] + [fmt(layers[layer]) for layer in LAYERS]
    widths = [max(len(h), len(v)) for h, v in zip(header, values)]
    lines = [
        "  ".join(h.rjust(w) for h, w in zip(header, widths)),
        "  ".join(v.rjust(w) for v, w in zip(values, widths)),
        "",
        f"aligned words: {report.aligned_word_count}",
    ]
    if report.kappa_table.features:
        lines += ["", "Label\tKappa\tDisagreements"]
        for key, agr in report.kappa_table.features.items():
            lines.append(f"{key}\t{fmt(agr)}\t{agr.disagreements}")
        avg = report.kappa_table.average_feature_kappa
        lines.append(f"average\t{avg:.3f}\t" if avg is not None else "average\tn/a\t")
        lines.append(f"total\t\t{report.kappa_table.total_feature_disagreements}")
    if audit is not None:
        lines += ["", "Rule\tDifferences"]
        for rule, count in sorted(audit.per_rule.items(), key=lambda kv: (-kv[1], kv[0])):
            lines.append(f"{rule}\t{count}")
        lines.append(
            f"flagged\t{audit.flagged}/{audit.total_disagreements}"
            f" ({100.0 * audit.flagged_fraction:.1f}%)"
        )
    return "\n".join(lines) + "\n"
