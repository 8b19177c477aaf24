import itertools

import pytest
from hypothesis import given, strategies as st

import oracles as oc
from epplan import automata as fa
from epplan.errors import InputError, ParseError, TrackMismatchError

AB = fa.Alphabet(("a", "b"))

word_st = st.text(alphabet="ab", max_size=4).map(tuple)
pair_st = st.tuples(word_st, word_st)
relation_st = st.frozensets(pair_st, max_size=8)
unary_st = st.frozensets(word_st.map(lambda w: (w,)), max_size=8)


def probes(max_len=3):
    out = [()]
    for n in range(1, max_len + 1):
        out.extend(itertools.product(("a", "b"), repeat=n))
    return out


# --- construction and validation ---------------------------------------------

def test_alphabet_validation():
    with pytest.raises(InputError):
        fa.Alphabet(("a", "a"))
    with pytest.raises(InputError):
        fa.Alphabet(("a", fa.PAD))
    with pytest.raises(InputError):
        fa.Alphabet(("a", ""))


def test_automaton_rejects_bad_labels():
    with pytest.raises(InputError):
        fa.Automaton(2, AB, 1, frozenset({0}), frozenset({0}),
                     frozenset({(0, (fa.PAD, fa.PAD), 0)}))
    with pytest.raises(InputError):
        fa.Automaton(1, AB, 1, frozenset({0}), frozenset({0}),
                     frozenset({(0, ("c",), 0)}))
    with pytest.raises((InputError, TrackMismatchError)):
        fa.Automaton(2, AB, 1, frozenset({0}), frozenset({0}),
                     frozenset({(0, ("a",), 0)}))
    with pytest.raises(InputError):
        fa.Automaton(1, AB, 1, frozenset({0}), frozenset({0}),
                     frozenset({(0, ("a",), 5)}))


def test_boolean_combine_rejects_mismatched_operands():
    one = fa.universal_words(AB)
    two = fa.valid_convolutions(AB, 2)
    with pytest.raises(TrackMismatchError):
        fa.boolean_combine(one, two, "and")
    with pytest.raises(InputError):
        fa.boolean_combine(one, one, "xor")


# --- convolution ---------------------------------------------------------------

@given(st.lists(word_st, min_size=1, max_size=3))
def test_convolution_matches_reference(words):
    tup = tuple(words)
    assert fa.convolve(tup) == oc.convolve_words(tup)
    assert fa.deconvolve(fa.convolve(tup), len(tup)) == tup


@given(pair_st)
def test_valid_convolutions_accept_all_real_pairs(pair):
    assert fa.accepts(fa.valid_convolutions(AB, 2), pair)
    assert not fa.accepts(fa.invalid_convolutions(AB, 2), pair)


def test_valid_and_invalid_convolutions_are_disjoint():
    both = fa.boolean_combine(fa.valid_convolutions(AB, 2),
                              fa.invalid_convolutions(AB, 2), "and")
    assert fa.is_empty(both)


# --- membership and boolean algebra --------------------------------------------

@given(relation_st, pair_st)
def test_trie_membership(rel, probe):
    auto = oc.trie_relation(AB, 2, rel)
    assert fa.accepts(auto, probe) == (probe in rel)


@given(relation_st, relation_st)
def test_boolean_ops_match_set_algebra(r1, r2):
    a1 = oc.trie_relation(AB, 2, r1)
    a2 = oc.trie_relation(AB, 2, r2)
    both = fa.boolean_combine(a1, a2, "and")
    either = fa.boolean_combine(a1, a2, "or")
    diff = fa.boolean_combine(a1, a2, "minus")
    for probe in set(r1) | set(r2) | {((), ()), (("a",), ("b", "b"))}:
        assert fa.accepts(both, probe) == (probe in r1 and probe in r2)
        assert fa.accepts(either, probe) == (probe in r1 or probe in r2)
        assert fa.accepts(diff, probe) == (probe in r1 and probe not in r2)


@given(relation_st)
def test_complement_membership_and_involution(rel):
    auto = oc.trie_relation(AB, 2, rel)
    comp = fa.complement(auto)
    for probe in list(rel)[:4] + [((), ()), (("a",), ()), (("b", "a"), ("b",))]:
        assert fa.accepts(comp, probe) == (probe not in rel)
    assert fa.equivalent(fa.complement(comp), auto)


@given(relation_st, relation_st)
def test_determinize_preserves_language(r1, r2):
    union = fa.boolean_combine(oc.trie_relation(AB, 2, r1),
                               oc.trie_relation(AB, 2, r2), "or")
    det = fa.determinize(union)
    assert det.deterministic
    for probe in set(r1) | set(r2) | {((), ("a",))}:
        assert fa.accepts(det, probe) == (probe in r1 or probe in r2)


# --- canonical forms -------------------------------------------------------------

def test_canonicalize_empty_language():
    canon = fa.canonicalize(fa.empty_automaton(AB, 1))
    assert canon.states == 1 and not canon.accepting
    assert fa.is_empty(canon)


def test_canonicalize_is_minimal_on_known_languages():
    # mixed words need one state per "letters seen so far" value
    mixed = fa.regex_to_automaton("(a|b)*·(a·b|b·a)·(a|b)*", AB)
    assert fa.canonicalize(mixed).states == 4
    assert fa.canonicalize(fa.regex_to_automaton("a*", AB)).states == 1
    assert fa.canonicalize(fa.universal_words(AB)).states == 1


@pytest.mark.parametrize("left,right,equal", [
    ("a**", "a*", True),
    ("(a|b)·(a|b)", "a·a|a·b|b·a|b·b", True),
    ("a·(b·a)*", "(a·b)*·a", True),
    ("ε|a·a*", "a*", True),
    ("a*·b*", "b*·a*", False),
    ("(a|b)*", "(a*·b*)*", True),
    ("∅", "ε", False),
])
def test_fingerprint_equality_matches_language_equality(left, right, equal):
    la = fa.regex_to_automaton(left, AB)
    ra = fa.regex_to_automaton(right, AB)
    assert fa.equivalent(la, ra) == equal
    assert (fa.fingerprint(fa.canonicalize(la)) ==
            fa.fingerprint(fa.canonicalize(ra))) == equal


@given(relation_st)
def test_canonicalize_preserves_language(rel):
    auto = oc.trie_relation(AB, 2, rel)
    canon = fa.canonicalize(auto)
    assert canon.deterministic
    assert fa.equivalent(auto, canon)
    # nothing below the count of pairwise-distinguishable live states
    assert canon.states <= max(fa.trim(fa.determinize(auto)).states, 1)


# --- track surgery ----------------------------------------------------------------

def test_substitute_tracks_swap_and_diagonal():
    rel = {(("a",), ("b", "b")), (("a", "a"), ("a", "a")), ((), ("b",))}
    auto = oc.trie_relation(AB, 2, rel)
    swapped = fa.substitute_tracks(auto, (2, 1), 2)
    for u, v in rel:
        assert fa.accepts(swapped, (v, u))
        assert fa.accepts(swapped, (u, v)) == ((v, u) in rel)
    diag = fa.substitute_tracks(auto, (1, 1), 1)
    for w in probes():
        assert fa.accepts(diag, (w,)) == ((w, w) in rel)


def test_substitute_tracks_validation():
    auto = oc.trie_relation(AB, 2, {(("a",), ("b",))})
    with pytest.raises(TrackMismatchError):
        fa.substitute_tracks(auto, (1,), 2)
    with pytest.raises(InputError):
        fa.substitute_tracks(auto, (1, 3), 2)


def test_cylindrify_constrains_new_track_to_universe():
    rel = {(("a",), ("b",))}
    auto = oc.trie_relation(AB, 2, rel)
    dom = oc.finite_domain(AB, [("a",), ("b", "b")])
    wide = fa.cylindrify(auto, 2, dom)
    assert fa.accepts(wide, (("a",), ("b", "b"), ("b",)))
    assert fa.accepts(wide, (("a",), ("a",), ("b",)))
    assert not fa.accepts(wide, (("a",), ("a", "a"), ("b",)))  # not in universe
    assert not fa.accepts(wide, (("b",), ("a",), ("b",)))      # base fails


@given(relation_st)
def test_project_is_existential(rel):
    auto = oc.trie_relation(AB, 2, rel)
    left = fa.project(auto, 2)
    right = fa.project(auto, 1)
    firsts = {u for u, _ in rel}
    seconds = {v for _, v in rel}
    for w in probes():
        assert fa.accepts(left, (w,)) == (w in firsts)
        assert fa.accepts(right, (w,)) == (w in seconds)


def test_project_saturates_pad_tails():
    # the surviving track ends long before the dropped one
    auto = oc.trie_relation(AB, 2, {(("a",), ("a", "b", "b"))})
    assert fa.accepts(fa.project(auto, 2), (("a",),))


# --- concatenation ------------------------------------------------------------------

def test_concatenate_finite_languages():
    left = oc.finite_domain(AB, [("a",), ("a", "b")])
    right = oc.finite_domain(AB, [("b",), ()])
    cat = fa.concatenate(left, right)
    want = {("a",), ("a", "b"), ("a", "b", "b")}
    for w in probes():
        assert fa.accepts(cat, (w,)) == (w in want)


def test_concatenate_rejects_multi_track():
    two = fa.valid_convolutions(AB, 2)
    with pytest.raises(TrackMismatchError):
        fa.concatenate(two, two)


# --- regular expressions --------------------------------------------------------------

@pytest.mark.parametrize("pattern,members,rejects", [
    ("a*", ["", "a", "aaa"], ["b", "ab"]),
    ("ε", [""], ["a"]),
    ("∅", [], ["", "a"]),
    ("a·b*", ["a", "ab", "abb"], ["", "ba"]),
    ("(a|b)·b", ["ab", "bb"], ["a", "b", "abb"]),
    ("a**", ["", "aa"], ["b"]),
])
def test_regex_membership(pattern, members, rejects):
    auto = fa.regex_to_automaton(pattern, AB)
    for w in members:
        assert fa.accepts(auto, (tuple(w),)), (pattern, w)
    for w in rejects:
        assert not fa.accepts(auto, (tuple(w),)), (pattern, w)


def test_regex_star_binds_tighter_than_concat_and_union():
    assert fa.equivalent(fa.regex_to_automaton("a·b*", AB),
                         fa.regex_to_automaton("a·(b*)", AB))
    assert not fa.equivalent(fa.regex_to_automaton("a·b*", AB),
                             fa.regex_to_automaton("(a·b)*", AB))
    assert fa.equivalent(fa.regex_to_automaton("a|b·b", AB),
                         fa.regex_to_automaton("a|(b·b)", AB))


@pytest.mark.parametrize("pattern", ["(a", "a)", "a·", "·a", "a||b", "a*·"])
def test_regex_parse_errors_carry_a_position(pattern):
    with pytest.raises(ParseError) as info:
        fa.regex_to_automaton(pattern, AB)
    assert info.value.position is None or info.value.position >= 0


def test_regex_unknown_letter():
    with pytest.raises(ParseError):
        fa.regex_to_automaton("a·c", AB)


# --- enumeration and witnesses -----------------------------------------------------------

def test_enumerate_upto_is_length_lex_sorted():
    auto = fa.regex_to_automaton("(a|b)*·b", AB)
    got = fa.enumerate_upto(auto, 3)
    flat = [w for (w,) in got]
    keys = [(len(w), tuple(AB.key(c) for c in w)) for w in flat]
    assert keys == sorted(keys)
    assert flat == [w for w in probes() if w and w[-1] == "b"]


def test_witness_is_the_length_lex_least_word():
    auto = fa.regex_to_automaton("b·b|a·b·a", AB)
    assert fa.is_empty_witness(auto) == (("b", "b"),)
    assert fa.is_empty_witness(fa.regex_to_automaton("∅", AB)) is None


@given(relation_st)
def test_witness_agrees_with_enumeration(rel):
    auto = oc.trie_relation(AB, 2, rel)
    wit = fa.is_empty_witness(auto)
    if not rel:
        assert wit is None
    else:
        assert wit == fa.enumerate_upto(auto, 6)[0]


# --- serialization -------------------------------------------------------------------------

@given(relation_st)
def test_json_round_trip(rel):
    auto = oc.trie_relation(AB, 2, rel)
    back = fa.automaton_from_json(fa.automaton_to_json(auto))
    assert fa.equivalent(auto, back)


def test_automaton_or_regex_accepts_both_forms():
    via_regex = fa.automaton_or_regex("a·b*", AB)
    via_json = fa.automaton_or_regex(
        fa.automaton_to_json(fa.regex_to_automaton("a·b*", AB)), AB)
    assert fa.equivalent(via_regex, via_json)
