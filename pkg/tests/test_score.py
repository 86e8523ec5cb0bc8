import random

import pytest

from treelint.conllu import Corpus
from treelint.score import (
    METRIC_ORDER,
    ScoreError,
    align,
    score,
    sentence_spans,
)

from conftest import FIXTURES, corpus, sent, w
from treelint import conllu


def chain(forms, upos="NOUN", mwts=()):
    """Head-initial chain tree over the given forms."""
    words = [w(i + 1, f, 0 if i == 0 else 1, "root" if i == 0 else "obj", upos=upos)
             for i, f in enumerate(forms)]
    return sent(words, mwts=mwts)


# ------------------------------------------------------------------- spans

def test_concatenative_subtokens_partition_surface():
    s = sent([w(1, "b", 2, "case", upos="ADP"), w(2, "bait", 0, "root")], mwts=[(1, 2, "bbait")])
    spans = [word.span for word in sentence_spans(s).words]
    assert spans == [(0, 1), (1, 5)]


def test_legacy_subtokens_get_lcs_spans():
    s = sent([
        w(1, "be", 3, "case", upos="ADP"),
        w(2, "_ha_", 3, "det", upos="DET"),
        w(3, "bait", 0, "root"),
    ], mwts=[(1, 3, "bbait")])
    spans = [word.span for word in sentence_spans(s).words]
    assert spans == [(0, 1), (1, 1), (1, 5)]


def test_whitespace_stripped_from_forms():
    s = sent([w(1, "New York", 0, "root", upos="PROPN")])
    assert sentence_spans(s).text == "NewYork"


# ------------------------------------------------------------------- align

def test_identical_tokenizations_fully_aligned():
    a = chain(["ha", "yeled", "halax"])
    assert len(align(a, a).pairs) == 3


def test_unsplit_mwt_aligns_nothing():
    gold = sent([w(1, "b", 2, "case", upos="ADP"), w(2, "bait", 0, "root")], mwts=[(1, 2, "bbait")])
    system = sent([w(1, "bbait", 0, "root")])
    assert align(gold, system).pairs == ()


def test_one_differing_mwt_in_ten_words():
    forms = [f"w{i}" for i in range(1, 9)]
    gold_words = [w(1, forms[0], 0, "root")]
    gold_words += [w(i + 1, f, 1, "obj") for i, f in enumerate(forms[1:], start=1)]
    gold_words.insert(2, w(3, "x", 1, "obj"))
    gold_words.insert(3, w(4, "y", 1, "obj"))
    gold_words = [conllu.Word(i + 1, wd.form, wd.lemma, wd.upos, wd.xpos, wd.feats, wd.head, wd.deprel, wd.deps, wd.misc)
                  for i, wd in enumerate(gold_words)]
    gold = sent(gold_words, mwts=[(3, 4, "xy")])
    system_words = [w(1, forms[0], 0, "root"), w(2, forms[1], 1, "obj"), w(3, "xy", 1, "obj")]
    system_words += [w(i + 4, f, 1, "obj") for i, f in enumerate(forms[2:])]
    system = sent(system_words)
    assert len(gold.words) == 10 and len(system.words) == 9
    assert len(align(gold, system).pairs) == 8


def test_align_rejects_text_mismatch():
    with pytest.raises(ScoreError):
        align(chain(["abc"]), chain(["abd"]))


def oracle_pairs(gold_spans, system_spans):
    """Maximal order-preserving pairing of equal spans.

    Spans on each side are distinct and sorted, so the unique maximum is
    the set of spans common to both sides.
    """
    common = set(gold_spans) & set(system_spans)
    gold_idx = {span: i for i, span in enumerate(gold_spans)}
    sys_idx = {span: j for j, span in enumerate(system_spans)}
    return tuple((gold_idx[span], sys_idx[span]) for span in sorted(common))


def random_segmentation(rng, text):
    """Random concatenative tokenization of `text`, with optional MWTs."""
    cuts = sorted(rng.sample(range(1, len(text)), rng.randint(0, min(4, len(text) - 1))))
    pieces = [text[a:b] for a, b in zip([0] + cuts, cuts + [len(text)])]
    words = []
    mwts = []
    wid = 0
    for piece in pieces:
        if len(piece) >= 2 and rng.random() < 0.4:
            k = rng.randint(1, len(piece) - 1)
            parts = [piece[:k], piece[k:]]
            mwts.append((wid + 1, wid + len(parts), piece))
            for part in parts:
                wid += 1
                words.append(w(wid, part, 0 if wid == 1 else 1, "root" if wid == 1 else "obj"))
        else:
            wid += 1
            words.append(w(wid, piece, 0 if wid == 1 else 1, "root" if wid == 1 else "obj"))
    return sent(words, mwts=mwts)


def test_align_matches_oracle_on_random_pairs():
    rng = random.Random(20240819)
    done = 0
    while done < 250:
        text = "".join(rng.choice("abc") for _ in range(rng.randint(1, 8)))
        gold = random_segmentation(rng, text)
        system = random_segmentation(rng, text)
        alignment = align(gold, system)
        expected = oracle_pairs(alignment.gold_spans, alignment.system_spans)
        assert alignment.pairs == expected, (text, gold, system)
        done += 1


# ------------------------------------------------------------------- score

def read(path):
    return conllu.parse_file(FIXTURES / "roundtrip" / path)


@pytest.mark.parametrize("name", [
    "plain_02.conllu", "mwt_new_03_three.conllu", "mwt_old_01.conllu",
    "hebrew_01.conllu", "doc_01.conllu", "feats_01.conllu",
])
def test_identity_scores_100_everywhere(name):
    c = read(name)
    report = score(c, c)
    for metric in METRIC_ORDER:
        m = report[metric]
        assert m.f1 == 100.0, metric
        assert m.precision == 100.0 and m.recall == 100.0
        if m.aligned_accuracy is not None:
            assert m.aligned_accuracy == 100.0


def test_one_wrong_head_in_three_words():
    gold = sent([
        w(1, "a", 2, "nsubj"),
        w(2, "b", 0, "root", upos="VERB"),
        w(3, "c", 2, "obj"),
    ])
    system = sent([
        w(1, "a", 3, "nsubj"),
        w(2, "b", 0, "root", upos="VERB"),
        w(3, "c", 2, "obj"),
    ])
    report = score(corpus(gold), corpus(system))
    assert round(report["UAS"].f1, 2) == 66.67
    assert round(report["LAS"].f1, 2) == 66.67
    assert round(report["UAS"].aligned_accuracy, 2) == 66.67
    assert report["Words"].f1 == 100.0


def test_unsplit_mwt_words_f1_zero():
    gold = corpus(sent([w(1, "b", 2, "case", upos="ADP"), w(2, "bait", 0, "root")],
                       mwts=[(1, 2, "bbait")]))
    system = corpus(sent([w(1, "bbait", 0, "root")]))
    report = score(gold, system)
    assert report["Words"].f1 == 0.0
    assert report["Words"].precision == 0.0 and report["Words"].recall == 0.0
    assert report["Tokens"].f1 == 100.0  # same surface token either way
    assert report["MWT"].f1 == 0.0


def test_mwt_metric_requires_same_partition():
    gold = corpus(sent([w(1, "b", 2, "case", upos="ADP"), w(2, "bait", 0, "root")],
                       mwts=[(1, 2, "bbait")]))
    system = corpus(sent([w(1, "bb", 2, "case", upos="ADP"), w(2, "ait", 0, "root")],
                         mwts=[(1, 2, "bbait")]))
    report = score(gold, system)
    assert report["MWT"].f1 == 0.0
    assert report["Tokens"].f1 == 100.0


def test_deprel_subtypes_ignored_for_scoring():
    gold = corpus(sent([w(1, "bait", 2, "nmod:poss"), w(2, "x", 0, "root")]))
    system = corpus(sent([w(1, "bait", 2, "nmod"), w(2, "x", 0, "root")]))
    assert score(gold, system)["LAS"].f1 == 100.0


def test_nonuniversal_features_ignored_for_scoring():
    gold = corpus(sent([w(1, "x", 0, "root", feats="Gender=Masc|HebBinyan=PAAL")]))
    system = corpus(sent([w(1, "x", 0, "root", feats="Gender=Masc")]))
    assert score(gold, system)["UFeats"].f1 == 100.0
    worse = corpus(sent([w(1, "x", 0, "root", feats="Gender=Fem")]))
    assert score(gold, worse)["UFeats"].f1 == 0.0


def test_gold_underscore_lemma_always_counts():
    gold = corpus(sent([w(1, "x", 0, "root", lemma="_")]))
    system = corpus(sent([w(1, "x", 0, "root", lemma="whatever")]))
    assert score(gold, system)["Lemmas"].f1 == 100.0


def test_mlas_checks_functional_children():
    gold = corpus(sent([
        w(1, "ha", 2, "det", upos="DET", feats="PronType=Art"),
        w(2, "yeled", 0, "root"),
    ]))
    system_bad_child = corpus(sent([
        w(1, "ha", 2, "det", upos="DET", feats="PronType=Dem"),
        w(2, "yeled", 0, "root"),
    ]))
    report = score(gold, system_bad_child)
    # The det child is functional; its FEATS mismatch hits the MLAS key of the noun.
    assert report["MLAS"].f1 == 0.0
    assert report["LAS"].f1 == 100.0


def test_metric_inequalities_hold():
    gold = read("mixed_01.conllu")
    rng = random.Random(13)
    perturbed = []
    for s in gold.sentences:
        words = []
        for word in s.words:
            upos = word.upos if rng.random() < 0.7 else "X"
            head = word.head if rng.random() < 0.7 else (0 if word.deprel == "root" else 1)
            deprel = word.deprel if rng.random() < 0.8 else "dep"
            words.append(conllu.Word(word.id, word.form, word.lemma, upos, word.xpos,
                                     word.feats, head, deprel, word.deps, word.misc))
        perturbed.append(sent(words, sent_id=s.sent_id))
    report = score(gold, Corpus(tuple(perturbed)))
    assert report["LAS"].f1 <= report["UAS"].f1
    assert report["AllTags"].f1 <= min(report["UPOS"].f1, report["XPOS"].f1, report["UFeats"].f1)


def test_words_f1_symmetry():
    gold = corpus(sent([w(1, "b", 2, "case", upos="ADP"), w(2, "ait", 0, "root")],
                       mwts=[(1, 2, "bait")]))
    system = corpus(sent([w(1, "ba", 2, "case", upos="ADP"), w(2, "it", 0, "root")],
                         mwts=[(1, 2, "bait")]))
    fwd = score(gold, system)["Words"]
    rev = score(system, gold)["Words"]
    assert fwd.precision == rev.recall and fwd.recall == rev.precision
    assert fwd.f1 == rev.f1


def test_sentence_count_mismatch_rejected():
    one = corpus(sent([w(1, "a", 0, "root")]))
    two = corpus(sent([w(1, "a", 0, "root")]), sent([w(1, "b", 0, "root")]))
    with pytest.raises(ScoreError):
        score(one, two)


def test_legacy_vs_legacy_scores_identity():
    c = read("mwt_old_02.conllu")
    report = score(c, c)
    assert all(report[m].f1 == 100.0 for m in METRIC_ORDER)
