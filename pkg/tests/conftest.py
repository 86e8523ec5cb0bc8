from pathlib import Path

import pytest

from treelint.conllu import Corpus, Feats, Misc, MwtSpan, Sentence, Word

FIXTURES = Path(__file__).parent / "fixtures"


def w(i, form, head, deprel, upos="NOUN", lemma=None, feats="", xpos="", deps="", misc=""):
    """Word builder with compact defaults for hand-written trees."""
    return Word(
        id=i,
        form=form,
        lemma=lemma if lemma is not None else form,
        upos=upos,
        xpos=xpos,
        feats=Feats.parse(feats or "_"),
        head=head,
        deprel=deprel,
        deps=deps,
        misc=Misc.parse(misc or "_"),
    )


def sent(words, mwts=(), sent_id=None, text=None):
    spans = tuple(MwtSpan(a, b, surface) for a, b, surface in mwts)
    return Sentence(words=tuple(words), mwt_spans=spans, sent_id=sent_id, text=text)


def corpus(*sentences):
    return Corpus(tuple(sentences))


@pytest.fixture
def two_word_tree():
    return sent([w(1, "a", 2, "det", upos="DET"), w(2, "b", 0, "root")])
