from pathlib import Path

import pytest

from treelint import conllu
from treelint.conllu import Feats, ParseError, check_concatenative, parse, serialize, structural_check

from conftest import FIXTURES, corpus, sent, w

ROUNDTRIP = sorted((FIXTURES / "roundtrip").glob("*.conllu"))


def test_parse_minimal_tree():
    c = parse("1\ta\t_\tDET\t_\t_\t2\tdet\t_\t_\n2\tb\t_\tNOUN\t_\t_\t0\troot\t_\t_\n\n")
    s = c.sentences[0]
    assert len(s.words) == 2
    assert s.words[1].head == 0
    assert s.words[1].deprel == "root"


def test_parse_mwt_range():
    c = parse(
        "1-2\tbbait\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "1\tb\t_\tADP\t_\t_\t2\tcase\t_\t_\n"
        "2\tbait\t_\tNOUN\t_\t_\t0\troot\t_\t_\n\n"
    )
    (span,) = c.sentences[0].mwt_spans
    assert (span.start, span.end, span.surface_form) == (1, 2, "bbait")


def test_parse_head_out_of_range():
    text = "1\ta\t_\tDET\t_\t_\t5\tdet\t_\t_\n2\tb\t_\tNOUN\t_\t_\t0\troot\t_\t_\n3\tc\t_\tNOUN\t_\t_\t2\tobj\t_\t_\n\n"
    with pytest.raises(ParseError) as err:
        parse(text)
    assert "head 5 out of range" in str(err.value)
    assert err.value.line == 1


def test_parse_malformed_columns():
    with pytest.raises(ParseError) as err:
        parse("1\ta\tb\n\n")
    assert "10 tab-separated columns" in str(err.value)


def test_parse_non_numeric_id():
    with pytest.raises(ParseError):
        parse("x\ta\t_\tNOUN\t_\t_\t0\troot\t_\t_\n\n")


def test_parse_overlapping_mwt():
    text = (
        "1-3\tabc\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "1\ta\t_\tNOUN\t_\t_\t0\troot\t_\t_\n"
        "2-3\tbc\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "2\tb\t_\tNOUN\t_\t_\t1\tobj\t_\t_\n"
        "3\tc\t_\tNOUN\t_\t_\t1\tobj\t_\t_\n\n"
    )
    with pytest.raises(ParseError) as err:
        parse(text)
    assert "overlaps" in str(err.value)


def test_parse_lenient_keeps_going():
    text = (
        "# sent_id = s1\n1\ta\t_\tNOUN\t_\t_\t9\tdep\t_\t_\n\n"
        "# sent_id = s2\n1\tb\t_\tNOUN\t_\t_\t0\troot\t_\t_\n\n"
    )
    c, issues = conllu.parse_lenient(text)
    assert [s.sent_id for s in c.sentences] == ["s2"]
    assert len(issues) == 1 and issues[0].line == 2


def test_parse_duplicate_sent_id_rejected():
    text = (
        "# sent_id = s1\n1\ta\t_\tNOUN\t_\t_\t0\troot\t_\t_\n\n"
        "# sent_id = s1\n1\tb\t_\tNOUN\t_\t_\t0\troot\t_\t_\n\n"
    )
    with pytest.raises(ParseError):
        parse(text)


@pytest.mark.parametrize("path", ROUNDTRIP, ids=lambda p: p.name)
def test_roundtrip_byte_identity(path):
    raw = path.read_text(encoding="utf-8")
    assert serialize(parse(raw)) == raw


def test_serialize_sorts_feats():
    s = sent([w(1, "a", 0, "root", feats="Number=Sing|Gender=Masc|Definite=Def")])
    line = serialize(corpus(s)).splitlines()[0]
    assert line.split("\t")[5] == "Definite=Def|Gender=Masc|Number=Sing"


def test_feats_sorting_is_case_insensitive():
    f = Feats.make([("abbr", "Yes"), ("Aspect", "Perf")])
    assert [k for k, _ in f.entries] == ["abbr", "Aspect"]


def test_serialize_emits_mwt_line_before_first_word():
    s = sent([w(1, "b", 2, "case", upos="ADP"), w(2, "bait", 0, "root")], mwts=[(1, 2, "bbait")])
    lines = serialize(corpus(s)).splitlines()
    assert lines[0].startswith("1-2\tbbait")
    assert lines[1].startswith("1\tb")


def test_serialize_generates_comments_for_constructed_sentences():
    s = sent([w(1, "a", 0, "root")], sent_id="x1", text="a")
    assert serialize(corpus(s)).splitlines()[:2] == ["# sent_id = x1", "# text = a"]


def test_structural_check_clean(two_word_tree):
    assert structural_check(two_word_tree) == []


def test_structural_check_multiple_roots():
    s = sent([w(1, "a", 0, "root"), w(2, "b", 0, "root")])
    codes = [i.code for i in structural_check(s)]
    assert codes == ["multiple-roots"]


def test_structural_check_cycle():
    s = sent([w(1, "a", 2, "dep"), w(2, "b", 1, "dep")])
    codes = [i.code for i in structural_check(s)]
    assert "cycle" in codes and "no-root" in codes


def test_structural_check_root_deprel_mismatch():
    s = sent([w(1, "a", 0, "nsubj"), w(2, "b", 1, "root")])
    codes = {i.code for i in structural_check(s)}
    assert "root-deprel" in codes


def test_structural_check_head_range():
    s = sent([w(1, "a", 7, "dep"), w(2, "b", 0, "root")])
    assert any(i.code == "head-out-of-range" for i in structural_check(s))


def test_check_concatenative_new_scheme():
    s = sent([w(1, "b", 2, "case", upos="ADP"), w(2, "bait", 0, "root")], mwts=[(1, 2, "bbait")])
    assert check_concatenative(s) == []


def test_check_concatenative_legacy_violation():
    s = sent(
        [w(1, "be", 3, "case", upos="ADP"), w(2, "_ha_", 3, "det", upos="DET"), w(3, "bait", 0, "root")],
        mwts=[(1, 3, "bbait")],
    )
    (violation,) = check_concatenative(s)
    assert violation.surface_form == "bbait"
    assert violation.concatenation == "be_ha_bait"


def test_check_concatenative_no_mwts(two_word_tree):
    assert check_concatenative(two_word_tree) == []


def test_parse_accepts_multiple_roots_for_structural_check():
    # Multiple roots are a structural finding, not a parse failure.
    c = parse("1\ta\t_\tX\t_\t_\t0\troot\t_\t_\n2\tb\t_\tX\t_\t_\t0\troot\t_\t_\n\n")
    assert [i.code for i in structural_check(c.sentences[0])] == ["multiple-roots"]


def test_documents_partition_carries_newdoc_forward():
    c = conllu.parse_file(FIXTURES / "roundtrip" / "doc_01.conllu")
    docs = c.documents()
    assert list(docs) == ["health_01", "law_01"]
    assert [len(v) for v in docs.values()] == [2, 1]
