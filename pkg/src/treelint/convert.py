"""Bidirectional conversion between the legacy and concatenative MWT schemes.

The legacy scheme writes covert function words as pseudo-tokens whose FORM
is wrapped in underscores (possessive `_shel_`, accusative `_et_`, article
`_ha_`), so a multiword token's surface is not the concatenation of its
sub-token forms. The concatenative scheme drops the pseudo-tokens: clitic
pronouns get their suffix surface form back (via the clitic lexicon), the
covert article becomes `Definite=Def` on the fused preposition, and the
deprel subtypes `case:acc`, `case:gen`, and `mark:q` are flattened. Both
directions are deterministic, and each inverts the other exactly.

Forms after pseudo-token removal are re-derived by slicing the MWT surface:
every sub-token but the last must prefix the remaining surface, and the last
takes whatever surface is left, which guarantees the concatenation property.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .conllu import Feats, Misc, MwtSpan, Sentence, Word, renumber

PSEUDO_FORM_RE = re.compile(r"^_.+_$")

SUBTYPE_SIMPLIFICATIONS = {"case:acc": "case", "case:gen": "case", "mark:q": "mark"}

_HEBREW_RE = re.compile(r"[֐-׿]")


class ConversionError(Exception):
    pass


@dataclass(frozen=True)
class PseudoKind:
    """One pseudo-token type: detection lemmas and the legacy word it spawns."""

    name: str
    lemmas: frozenset[str]
    latin_lemma: str
    hebrew_lemma: str
    upos: str
    deprel: str
    feat_entries: tuple[tuple[str, str], ...] = ()


POSSESSIVE = PseudoKind(
    name="possessive-shel",
    lemmas=frozenset({"shel", "של"}),
    latin_lemma="shel",
    hebrew_lemma="של",
    upos="ADP",
    deprel="case:gen",
)
ACCUSATIVE = PseudoKind(
    name="accusative-et",
    lemmas=frozenset({"et", "את"}),
    latin_lemma="et",
    hebrew_lemma="את",
    upos="ADP",
    deprel="case:acc",
)
ARTICLE = PseudoKind(
    name="article-ha",
    lemmas=frozenset({"ha", "ה"}),
    latin_lemma="ha",
    hebrew_lemma="ה",
    upos="DET",
    deprel="det",
    feat_entries=(("PronType", "Art"),),
)
PSEUDO_KINDS = (POSSESSIVE, ACCUSATIVE, ARTICLE)

DEFAULT_QUESTION_MARKER_LEMMAS = frozenset({"haim", "האם"})


def _bundle(feats: Feats) -> tuple[str, str, str]:
    return (feats.get("Person") or "", feats.get("Gender") or "", feats.get("Number") or "")


@dataclass(frozen=True)
class CliticLexicon:
    """Bijective map between clitic surfaces and independent pronoun forms.

    Keyed by the Person/Gender/Number bundle on each side; rows come from a
    tab-separated file `clitic_form  independent_form  Person  Gender  Number`
    with `_` for an unspecified feature.
    """

    to_clitic: dict[tuple[str, str, str, str], str]
    to_independent: dict[tuple[str, str, str, str], str]

    @classmethod
    def from_rows(cls, rows) -> "CliticLexicon":
        to_clitic: dict[tuple[str, str, str, str], str] = {}
        to_independent: dict[tuple[str, str, str, str], str] = {}
        for clitic, independent, person, gender, number in rows:
            person = "" if person == "_" else person
            gender = "" if gender == "_" else gender
            number = "" if number == "_" else number
            ind_key = (independent, person, gender, number)
            cl_key = (clitic, person, gender, number)
            if ind_key in to_clitic or cl_key in to_independent:
                raise ValueError(f"duplicate clitic lexicon entry for {ind_key}")
            to_clitic[ind_key] = clitic
            to_independent[cl_key] = independent
        return cls(to_clitic, to_independent)

    @classmethod
    def from_file(cls, path) -> "CliticLexicon":
        rows = []
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
            if not line.strip() or line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise ValueError(f"clitic lexicon line {lineno}: expected 5 tab-separated columns")
            rows.append(tuple(cols))
        return cls.from_rows(rows)

    def clitic_for(self, independent_form: str, bundle: tuple[str, str, str]) -> str:
        key = (independent_form,) + bundle
        if key not in self.to_clitic:
            raise ConversionError(f"clitic lexicon has no entry for pronoun {key}")
        return self.to_clitic[key]

    def independent_for(self, clitic_form: str, bundle: tuple[str, str, str]) -> str:
        key = (clitic_form,) + bundle
        if key not in self.to_independent:
            raise ConversionError(f"clitic lexicon has no entry for clitic {key}")
        return self.to_independent[key]


@dataclass(frozen=True)
class ConversionConfig:
    lexicon: CliticLexicon
    fused_to_unfused: dict[str, str]  # concatenative ADP form -> legacy form
    question_marker_lemmas: frozenset[str] = DEFAULT_QUESTION_MARKER_LEMMAS

    @property
    def unfused_to_fused(self) -> dict[str, str]:
        return {v: k for k, v in self.fused_to_unfused.items()}

    def fuse(self, form: str) -> str:
        return self.unfused_to_fused.get(form, form)

    def unfuse(self, form: str) -> str:
        return self.fused_to_unfused.get(form, form)


_default_config: ConversionConfig | None = None


def _data_text(name: str) -> str:
    return (resources.files(__package__) / "data" / name).read_text(encoding="utf-8")


def default_config() -> ConversionConfig:
    """Shipped config: Hebrew and romanized clitic paradigms plus b/l/k fusion."""
    global _default_config
    if _default_config is None:
        rows = []
        for line in _data_text("clitic_lexicon.tsv").splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            rows.append(tuple(line.split("\t")))
        fusion = {}
        for line in _data_text("article_fusion.tsv").splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            fused, _, unfused = line.partition("\t")
            fusion[fused] = unfused
        _default_config = ConversionConfig(CliticLexicon.from_rows(rows), fusion)
    return _default_config


def pseudo_kind_of(word: Word) -> PseudoKind | None:
    """Classify a legacy pseudo-token, or None for ordinary words."""
    if not PSEUDO_FORM_RE.match(word.form):
        return None
    lemma = word.lemma.strip("_")
    for kind in PSEUDO_KINDS:
        if lemma in kind.lemmas:
            return kind
    raise ConversionError(f"unrecognized pseudo-token {word.form!r} (lemma {word.lemma!r})")


def _uses_hebrew(text: str) -> bool:
    return bool(_HEBREW_RE.search(text))


def _spawn_word(kind: PseudoKind, head: int, surface_hint: str) -> Word:
    lemma = kind.hebrew_lemma if _uses_hebrew(surface_hint) else kind.latin_lemma
    return Word(
        id=0,  # assigned at renumbering
        form=f"_{lemma}_",
        lemma=lemma,
        upos=kind.upos,
        xpos="",
        feats=Feats(kind.feat_entries),
        head=head,
        deprel=kind.deprel,
        deps="",
        misc=Misc(),
    )


def old_to_new(sentence: Sentence, config: ConversionConfig | None = None) -> Sentence:
    """Drop legacy pseudo-tokens and produce a concatenative sentence.

    Raises ConversionError for pseudo-tokens outside any MWT, pseudo-tokens
    with dependents, missing clitic lexicon entries, and surfaces that cannot
    be sliced over the remaining sub-token forms.
    """
    config = config or default_config()
    words: list[Word | None] = list(sentence.words)
    n = len(words)

    pseudo_ids = []
    for w in sentence.words:
        kind = pseudo_kind_of(w)
        if kind is None:
            continue
        span = sentence.mwt_covering(w.id)
        if span is None:
            raise ConversionError(f"pseudo-token {w.form!r} (word {w.id}) outside any multiword token")
        for other in sentence.words:
            if other.head == w.id:
                raise ConversionError(
                    f"word {other.id} depends on pseudo-token {w.form!r} (word {w.id})"
                )
        pseudo_ids.append((w, kind, span))

    for w, kind, span in pseudo_ids:
        if kind in (POSSESSIVE, ACCUSATIVE):
            if w.head == 0:
                raise ConversionError(f"pseudo-token {w.form!r} is the root")
            pronoun = words[w.head - 1]
            if pronoun is None or pronoun.upos != "PRON" or not span.covers(pronoun.id):
                raise ConversionError(
                    f"pseudo-token {w.form!r} (word {w.id}) is not governed by a pronoun in its MWT"
                )
            clitic = config.lexicon.clitic_for(pronoun.form, _bundle(pronoun.feats))
            words[pronoun.id - 1] = replace(pronoun, form=clitic)
        else:
            if w.id == span.start:
                raise ConversionError(f"article pseudo-token (word {w.id}) has no preceding word in its MWT")
            adjacent = words[w.id - 2]
            if adjacent is None or adjacent.upos != "ADP":
                found = "deleted pseudo-token" if adjacent is None else adjacent.upos
                raise ConversionError(
                    f"article pseudo-token (word {w.id}) not preceded by an ADP (found {found})"
                )
            if adjacent.feats.get("Definite") is not None:
                raise ConversionError(f"word {adjacent.id} already carries Definite")
            words[adjacent.id - 1] = replace(
                adjacent,
                form=config.fuse(adjacent.form),
                feats=adjacent.feats.with_entry("Definite", "Def"),
            )
        words[w.id - 1] = None

    survivors = [w for w in words if w is not None]
    id_map: dict[int, int] = {}
    for new_id, w in enumerate(survivors, start=1):
        id_map[w.id] = new_id

    new_spans = []
    for span in sentence.mwt_spans:
        member_ids = [id_map[i] for i in range(span.start, span.end + 1) if i in id_map]
        if not member_ids:
            raise ConversionError(f"multiword token {span.start}-{span.end} contains only pseudo-tokens")
        new_spans.append(replace(span, start=min(member_ids), end=max(member_ids)))

    simplified = [
        replace(w, deprel=SUBTYPE_SIMPLIFICATIONS.get(w.deprel, w.deprel)) for w in survivors
    ]
    result = renumber(sentence, simplified, id_map, new_spans)
    return _slice_mwt_forms(result)


def _slice_mwt_forms(sentence: Sentence) -> Sentence:
    words = list(sentence.words)
    for span in sentence.mwt_spans:
        remaining = span.surface_form
        for wid in range(span.start, span.end):
            form = words[wid - 1].form
            if not remaining.startswith(form):
                raise ConversionError(
                    f"multiword surface {span.surface_form!r} does not continue with "
                    f"sub-token form {form!r} (word {wid})"
                )
            remaining = remaining[len(form):]
        if not remaining:
            raise ConversionError(
                f"multiword surface {span.surface_form!r} leaves no characters for word {span.end}"
            )
        if words[span.end - 1].form != remaining:
            words[span.end - 1] = replace(words[span.end - 1], form=remaining)
    return replace(sentence, words=tuple(words))


def new_to_old(
    sentence: Sentence,
    config: ConversionConfig | None = None,
    on_issue=None,
) -> Sentence:
    """Reinsert pseudo-tokens: the exact inverse of old_to_new.

    `Definite=Def` on a word outside any MWT is reported through `on_issue`
    (if given) and passed through unchanged.
    """
    config = config or default_config()
    for w in sentence.words:
        if pseudo_kind_of(w) is not None:
            raise ConversionError(f"word {w.id} ({w.form!r}) is already a legacy pseudo-token")

    # Assembled output: (word, old_span) pairs; spawned words carry heads in
    # old ids, fixed up by the id map once positions are final.
    assembled: list[tuple[Word, MwtSpan | None]] = []
    for w in sentence.words:
        span = sentence.mwt_covering(w.id)
        spawn_before: Word | None = None
        word = w
        if span is not None and w.upos == "PRON" and w.head != 0 and span.covers(w.head):
            head_word = sentence.words[w.head - 1]
            if head_word.upos == "NOUN" and w.deprel == "nmod:poss":
                spawn_before = _spawn_word(POSSESSIVE, head=w.id, surface_hint=span.surface_form)
            elif head_word.upos == "VERB" and w.deprel == "obj":
                spawn_before = _spawn_word(ACCUSATIVE, head=w.id, surface_hint=span.surface_form)
            if spawn_before is not None:
                independent = config.lexicon.independent_for(w.form, _bundle(w.feats))
                word = replace(w, form=independent)
        spawn_after: Word | None = None
        if w.upos == "ADP" and w.feats.get("Definite") == "Def":
            if span is None:
                if on_issue is not None:
                    on_issue(f"word {w.id} ({w.form!r}) has Definite=Def outside any multiword token")
            else:
                word = replace(
                    word,
                    form=config.unfuse(word.form),
                    feats=word.feats.without("Definite"),
                )
                spawn_after = _spawn_word(ARTICLE, head=w.head, surface_hint=span.surface_form)
        if spawn_before is not None:
            assembled.append((spawn_before, span))
        assembled.append((word, span))
        if spawn_after is not None:
            assembled.append((spawn_after, span))

    id_map = {}
    for pos, (word, _) in enumerate(assembled, start=1):
        if word.id != 0:
            id_map[word.id] = pos

    restored = []
    for word, _ in assembled:
        deprel = word.deprel
        lemma = word.lemma
        if word.id != 0:  # spawned words already carry their legacy subtype
            if deprel == "case" and lemma in ACCUSATIVE.lemmas:
                deprel = "case:acc"
            elif deprel == "case" and lemma in POSSESSIVE.lemmas:
                deprel = "case:gen"
            elif deprel == "mark" and lemma in config.question_marker_lemmas:
                deprel = "mark:q"
        restored.append(replace(word, deprel=deprel))

    new_spans = []
    for span in sentence.mwt_spans:
        positions = [pos for pos, (_, s) in enumerate(assembled, start=1) if s is span]
        new_spans.append(replace(span, start=min(positions), end=max(positions)))

    return renumber(sentence, restored, id_map, new_spans)


def bies_tags(sentence: Sentence) -> list[tuple[int, str]]:
    """Per-word position within its MWT: Begin, Inside, End, or Single."""
    tags = {w.id: "S" for w in sentence.words}
    for span in sentence.mwt_spans:
        tags[span.start] = "B"
        tags[span.end] = "E"
        for wid in range(span.start + 1, span.end):
            tags[wid] = "I"
    return [(w.id, tags[w.id]) for w in sentence.words]
