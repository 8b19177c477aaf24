"""Finite-state acceptors over multi-track padded alphabets.

A k-ary relation on words is recognized by reading the convolution of a
k-tuple: tracks are aligned position by position and shorter tracks are
filled at the end with the reserved pad symbol ``_``.  A convolution is
valid when pads form a suffix on every track and no position is all-pad.
All operations are pure; automata are immutable values.

States are integers ``0..states-1``.  Nondeterminism is allowed
everywhere; ``canonicalize`` produces the minimal trim DFA with a
breadth-first state numbering, so two automata denote the same relation
exactly when their canonical forms are equal.
"""
from __future__ import annotations

import heapq
import itertools
from collections import deque
from dataclasses import dataclass, field
from functools import lru_cache

from .errors import InputError, ParseError, ResourceLimitError, TrackMismatchError

PAD = "_"

# Subset construction refuses to grow beyond this many states.
DEFAULT_STATE_CAP = 1_000_000

Word = tuple[str, ...]
Label = tuple[str, ...]
Transition = tuple[int, Label, int]


@dataclass(frozen=True)
class Alphabet:
    """An ordered set of letters; the pad symbol is reserved and implicit."""

    letters: tuple[str, ...]
    _index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        letters = tuple(self.letters)
        object.__setattr__(self, "letters", letters)
        if len(set(letters)) != len(letters):
            raise InputError("alphabet letters must be distinct")
        if PAD in letters:
            raise InputError(f"the pad symbol {PAD!r} may not be an alphabet letter")
        if any(not isinstance(x, str) or not x for x in letters):
            raise InputError("alphabet letters must be non-empty strings")
        object.__setattr__(self, "_index", {x: i for i, x in enumerate(letters)})

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._index

    def key(self, symbol: str) -> int:
        """Sort index of a symbol; the pad sorts after every letter."""
        if symbol == PAD:
            return len(self.letters)
        try:
            return self._index[symbol]
        except KeyError:
            raise InputError(f"unknown letter {symbol!r}") from None

    def label_key(self, label: Label) -> tuple[int, ...]:
        return tuple(self.key(s) for s in label)

    def tuples(self, tracks: int):
        """All non-all-pad k-tuples over letters plus pad, in sort order."""
        symbols = self.letters + (PAD,)
        for combo in itertools.product(symbols, repeat=tracks):
            if any(s != PAD for s in combo):
                yield combo


@dataclass(frozen=True)
class Automaton:
    """An NFA over k-track labels.  The all-pad label is forbidden.

    The intended invariant, preserved by every operation here, is that
    only valid convolutions are accepted; ``validate`` on a presentation
    checks it for hand-built or deserialized automata.
    """

    tracks: int
    alphabet: Alphabet
    states: int
    initial: frozenset[int]
    accepting: frozenset[int]
    transitions: frozenset[Transition]
    deterministic: bool = False

    def __post_init__(self):
        object.__setattr__(self, "initial", frozenset(self.initial))
        object.__setattr__(self, "accepting", frozenset(self.accepting))
        object.__setattr__(self, "transitions", frozenset(self.transitions))
        if self.tracks < 0:
            raise InputError("track count must be >= 0")
        for s in self.initial | self.accepting:
            if not 0 <= s < self.states:
                raise InputError(f"state {s} out of range")
        seen = set()
        for src, label, dst in self.transitions:
            if not (0 <= src < self.states and 0 <= dst < self.states):
                raise InputError("transition endpoint out of range")
            if len(label) != self.tracks:
                raise TrackMismatchError(
                    f"label {label!r} has {len(label)} tracks, automaton has {self.tracks}"
                )
            if all(s == PAD for s in label):
                raise InputError("the all-pad tuple may not label a transition")
            for sym in label:
                if sym != PAD and sym not in self.alphabet:
                    raise InputError(f"label symbol {sym!r} not in alphabet")
            if self.deterministic:
                if (src, label) in seen:
                    raise InputError("deterministic flag set but transitions branch")
                seen.add((src, label))
        if self.deterministic and len(self.initial) != 1:
            raise InputError("deterministic flag requires exactly one initial state")

    def __repr__(self):  # keep test failure output readable
        return (
            f"Automaton(tracks={self.tracks}, states={self.states}, "
            f"initial={sorted(self.initial)}, accepting={sorted(self.accepting)}, "
            f"transitions={len(self.transitions)})"
        )


def _out_map(a: Automaton) -> dict[int, dict[Label, set[int]]]:
    out: dict[int, dict[Label, set[int]]] = {}
    for src, label, dst in a.transitions:
        out.setdefault(src, {}).setdefault(label, set()).add(dst)
    return out


class _Builder:
    """Collects states keyed by arbitrary hashables, then emits an Automaton."""

    def __init__(self, alphabet: Alphabet, tracks: int):
        self.alphabet = alphabet
        self.tracks = tracks
        self.ids: dict = {}
        self.edges: set[Transition] = set()

    def state(self, key) -> int:
        if key not in self.ids:
            self.ids[key] = len(self.ids)
        return self.ids[key]

    def edge(self, src_key, label: Label, dst_key):
        self.edges.add((self.state(src_key), label, self.state(dst_key)))

    def build(self, initial_keys, accepting_keys, deterministic=False) -> Automaton:
        return Automaton(
            tracks=self.tracks,
            alphabet=self.alphabet,
            states=max(len(self.ids), 1),
            initial=frozenset(self.state(k) for k in initial_keys),
            accepting=frozenset(self.state(k) for k in accepting_keys if k in self.ids),
            transitions=frozenset(self.edges),
            deterministic=deterministic,
        )


def empty_automaton(alphabet: Alphabet, tracks: int) -> Automaton:
    return Automaton(tracks, alphabet, 1, frozenset({0}), frozenset(), frozenset())


def epsilon_automaton(alphabet: Alphabet, tracks: int) -> Automaton:
    """Accepts exactly the tuple of empty words."""
    return Automaton(tracks, alphabet, 1, frozenset({0}), frozenset({0}), frozenset())


def universal_words(alphabet: Alphabet) -> Automaton:
    """One-track automaton accepting every word."""
    edges = frozenset((0, (x,), 0) for x in alphabet.letters)
    return Automaton(1, alphabet, 1, frozenset({0}), frozenset({0}), edges, deterministic=True)


def literal_word(alphabet: Alphabet, word: Word) -> Automaton:
    """One-track automaton accepting exactly ``word``."""
    edges = set()
    for i, sym in enumerate(word):
        if sym not in alphabet:
            raise InputError(f"unknown letter {sym!r}")
        edges.add((i, (sym,), i + 1))
    n = len(word) + 1
    return Automaton(1, alphabet, n, frozenset({0}), frozenset({n - 1}), frozenset(edges), True)


@lru_cache(maxsize=None)
def valid_convolutions(alphabet: Alphabet, tracks: int) -> Automaton:
    """Accepts every valid k-track convolution: pads only as per-track suffixes.

    Cached: the label set grows as |letters|^k, and intersection guards
    request the same instance constantly.  Automata are immutable, so
    sharing is safe.
    """
    if tracks == 0:
        return epsilon_automaton(alphabet, 0)
    b = _Builder(alphabet, tracks)
    start = frozenset()
    b.state(start)
    queue = deque([start])
    seen = {start}
    while queue:
        padded = queue.popleft()
        for label in alphabet.tuples(tracks):
            now = frozenset(i for i, s in enumerate(label) if s == PAD)
            if not padded <= now:
                continue
            b.edge(padded, label, now)
            if now not in seen:
                seen.add(now)
                queue.append(now)
    return b.build([start], list(seen))


def _pad_filter(a: Automaton) -> Automaton:
    """``a`` intersected with the valid convolutions, walking only the
    labels ``a`` actually has; never proportional to |letters|^k."""
    if a.tracks == 0:
        return a
    out = _out_map(a)
    bld = _Builder(a.alphabet, a.tracks)
    start = [(q, frozenset()) for q in a.initial]
    for key in start:
        bld.state(key)
    seen = set(start)
    queue = deque(start)
    while queue:
        key = queue.popleft()
        q, padded = key
        for label, dsts in out.get(q, {}).items():
            pads = frozenset(i for i, s in enumerate(label) if s == PAD)
            if not padded <= pads:
                continue  # a padded track may not resume
            for dst in dsts:
                nxt = (dst, pads)
                if nxt not in seen:
                    seen.add(nxt)
                    bld.state(nxt)
                    queue.append(nxt)
                bld.edge(key, label, nxt)
    accepting = [key for key in seen if key[0] in a.accepting]
    return bld.build(start, accepting)


def invalid_convolutions(alphabet: Alphabet, tracks: int) -> Automaton:
    """Strings of k-track labels where some track resumes after padding.

    Complements ``valid_convolutions`` at the raw string level; useful
    only for diagnosing hand-built automata.
    """
    if tracks == 0:
        return empty_automaton(alphabet, 0)
    b = _Builder(alphabet, tracks)
    START, BAD = "start", "bad"
    labels = list(alphabet.tuples(tracks))
    for label in labels:
        b.edge(START, label, START)
        b.edge(BAD, label, BAD)
        for t in range(tracks):
            if label[t] == PAD:
                b.edge(START, label, ("saw", t))
                b.edge(("saw", t), label, ("saw", t))
            else:
                b.edge(("saw", t), label, BAD)
    return b.build([START], [BAD])


def convolve(words: tuple[Word, ...]) -> list[Label]:
    length = max((len(w) for w in words), default=0)
    return [
        tuple(w[i] if i < len(w) else PAD for w in words) for i in range(length)
    ]


def deconvolve(labels: list[Label], tracks: int) -> tuple[Word, ...]:
    words = []
    for t in range(tracks):
        col = [lab[t] for lab in labels]
        while col and col[-1] == PAD:
            col.pop()
        if PAD in col:
            raise InputError("pad occurs before the end of a track")
        words.append(tuple(col))
    return tuple(words)


def accepts(a: Automaton, words: tuple[Word, ...]) -> bool:
    """Membership of a tuple of words, by direct NFA simulation."""
    if len(words) != a.tracks:
        raise TrackMismatchError(f"expected {a.tracks} words, got {len(words)}")
    for w in words:
        for sym in w:
            if sym not in a.alphabet:
                raise InputError(f"unknown letter {sym!r}")
    out = _out_map(a)
    current = set(a.initial)
    for label in convolve(words):
        current = {q for s in current for q in out.get(s, {}).get(label, ())}
        if not current:
            return False
    return bool(current & a.accepting)


def trim(a: Automaton) -> Automaton:
    """Drop states that are unreachable or cannot reach acceptance."""
    fwd: dict[int, set[int]] = {}
    bwd: dict[int, set[int]] = {}
    for src, _, dst in a.transitions:
        fwd.setdefault(src, set()).add(dst)
        bwd.setdefault(dst, set()).add(src)

    def closure(seeds, adj):
        seen = set(seeds)
        stack = list(seeds)
        while stack:
            for nxt in adj.get(stack.pop(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen

    reach = closure(a.initial, fwd)
    co = closure(a.accepting, bwd)
    alive = sorted(reach & co)
    if not alive:
        return empty_automaton(a.alphabet, a.tracks)
    ids = {q: i for i, q in enumerate(alive)}
    return Automaton(
        a.tracks,
        a.alphabet,
        len(alive),
        frozenset(ids[q] for q in a.initial if q in ids),
        frozenset(ids[q] for q in a.accepting if q in ids),
        frozenset(
            (ids[s], lab, ids[d]) for s, lab, d in a.transitions if s in ids and d in ids
        ),
    )


def _check_compatible(a: Automaton, b: Automaton):
    if a.tracks != b.tracks:
        raise TrackMismatchError(f"track mismatch: {a.tracks} vs {b.tracks}")
    if a.alphabet != b.alphabet:
        raise TrackMismatchError("operands use different alphabets")


def _product_and(a: Automaton, b: Automaton) -> Automaton:
    _check_compatible(a, b)
    out_a, out_b = _out_map(a), _out_map(b)
    bld = _Builder(a.alphabet, a.tracks)
    start = [(p, q) for p in a.initial for q in b.initial]
    queue = deque(start)
    seen = set(start)
    for k in start:
        bld.state(k)
    while queue:
        p, q = queue.popleft()
        row_a = out_a.get(p, {})
        row_b = out_b.get(q, {})
        small, large = (row_a, row_b) if len(row_a) <= len(row_b) else (row_b, row_a)
        for label in small:
            if label not in large:
                continue
            for p2 in row_a[label]:
                for q2 in row_b[label]:
                    if (p2, q2) not in seen:
                        seen.add((p2, q2))
                        queue.append((p2, q2))
                    bld.edge((p, q), label, (p2, q2))
    accepting = [k for k in seen if k[0] in a.accepting and k[1] in b.accepting]
    return trim(bld.build(start, accepting))


def _union(a: Automaton, b: Automaton) -> Automaton:
    _check_compatible(a, b)
    off = a.states
    edges = set(a.transitions)
    edges |= {(s + off, lab, d + off) for s, lab, d in b.transitions}
    return Automaton(
        a.tracks,
        a.alphabet,
        a.states + b.states,
        a.initial | frozenset(q + off for q in b.initial),
        a.accepting | frozenset(q + off for q in b.accepting),
        frozenset(edges),
    )


def boolean_combine(a: Automaton, b: Automaton, op: str,
                    state_cap: int = DEFAULT_STATE_CAP) -> Automaton:
    """Intersection, union, or difference of two same-shape automata."""
    if op == "and":
        return _product_and(a, b)
    if op == "or":
        return _union(a, b)
    if op == "minus":
        return _minus(a, b, state_cap=state_cap)
    raise InputError(f"unknown boolean op {op!r}")


def _minus(a: Automaton, b: Automaton, state_cap: int) -> Automaton:
    """Exact difference L(a) \\ L(b), walking only labels ``a`` actually has.

    ``b`` is determinized and read with an implicit sink, so the label
    space is never enumerated; the cost is bounded by the edges of ``a``.
    """
    _check_compatible(a, b)
    det = determinize(b, state_cap=state_cap)
    out_a, out_d = _out_map(a), _out_map(det)
    det_initial = next(iter(det.initial))
    SINK = -1

    bld = _Builder(a.alphabet, a.tracks)
    start = [(p, det_initial) for p in a.initial]
    queue = deque(start)
    seen = set(start)
    for k in start:
        bld.state(k)
    while queue:
        p, dq = queue.popleft()
        row_d = out_d.get(dq, {}) if dq != SINK else {}
        for label, pdsts in out_a.get(p, {}).items():
            dd = row_d.get(label)
            d2 = next(iter(dd)) if dd else SINK
            for p2 in pdsts:
                key = (p2, d2)
                if key not in seen:
                    seen.add(key)
                    queue.append(key)
                bld.edge((p, dq), label, key)
    accepting = [
        (p, dq)
        for (p, dq) in seen
        if p in a.accepting and (dq == SINK or dq not in det.accepting)
    ]
    return trim(bld.build(start, accepting))


def determinize(a: Automaton, state_cap: int = DEFAULT_STATE_CAP) -> Automaton:
    """Subset construction; only labels with outgoing moves are materialized."""
    out = _out_map(a)
    start = frozenset(a.initial)
    bld = _Builder(a.alphabet, a.tracks)
    bld.state(start)
    queue = deque([start])
    seen = {start}
    while queue:
        subset = queue.popleft()
        moves: dict[Label, set[int]] = {}
        for q in subset:
            for label, dsts in out.get(q, {}).items():
                moves.setdefault(label, set()).update(dsts)
        for label, dsts in moves.items():
            nxt = frozenset(dsts)
            if nxt not in seen:
                if len(seen) >= state_cap:
                    raise ResourceLimitError(
                        f"determinization exceeded the state cap ({state_cap})"
                    )
                seen.add(nxt)
                queue.append(nxt)
            bld.edge(subset, label, nxt)
    accepting = [s for s in seen if s & a.accepting]
    return bld.build([start], accepting, deterministic=True)


def complement(a: Automaton, state_cap: int = DEFAULT_STATE_CAP) -> Automaton:
    """Valid convolutions of the same shape not accepted by ``a``.

    Complementation is relative to the valid-convolution language, so
    the result again satisfies the padding invariant.
    """
    return _minus(valid_convolutions(a.alphabet, a.tracks), a, state_cap=state_cap)


_JOIN_DONE = -1  # a component whose tracks have all run out of letters


def _track_join(alphabet: Alphabet, tracks: int,
                components: list[tuple[Automaton, tuple[int, ...]]],
                wild: tuple[int, ...] = ()) -> Automaton:
    """Synchronous product of automata each reading its own 0-based track
    positions; ``wild`` positions range over every symbol.

    Walks only labels the components actually have, so nothing here is
    proportional to |alphabet|^tracks.  Suffix-only padding is enforced
    with a per-position mask, and a finished component keeps consuming
    all-pad sub-labels.
    """
    outs = [_out_map(c) for c, _ in components]
    symbols = alphabet.letters + (PAD,)

    def moves(index: int, state: int):
        auto, positions = components[index]
        pad_sub = (PAD,) * len(positions)
        if state == _JOIN_DONE:
            return [(pad_sub, _JOIN_DONE)]
        found = [(lab, dst)
                 for lab, dsts in outs[index].get(state, {}).items()
                 for dst in dsts]
        if state in auto.accepting:
            found.append((pad_sub, _JOIN_DONE))
        return found

    def finished(index: int, state: int) -> bool:
        return state == _JOIN_DONE or state in components[index][0].accepting

    bld = _Builder(alphabet, tracks)
    start = [(combo, frozenset())
             for combo in itertools.product(*(c.initial for c, _ in components))]
    for key in start:
        bld.state(key)
    seen = set(start)
    queue = deque(start)
    while queue:
        key = queue.popleft()
        combo, padded = key
        for choice in itertools.product(*(moves(i, q) for i, q in enumerate(combo))):
            label: list[str | None] = [None] * tracks
            ok = True
            for (sub, _), (_, positions) in zip(choice, components):
                for sym, pos in zip(sub, positions):
                    if label[pos] is not None and label[pos] != sym:
                        ok = False  # repeated positions must agree
                        break
                    label[pos] = sym
                if not ok:
                    break
            if not ok:
                continue
            base = tuple(label)
            nxt_combo = tuple(dst for _, dst in choice)
            for fill in itertools.product(symbols, repeat=len(wild)):
                full = list(base)
                for sym, pos in zip(fill, wild):
                    full[pos] = sym
                if all(s == PAD for s in full):
                    continue
                if any(full[pos] != PAD for pos in padded):
                    continue  # a padded track may not resume
                new_padded = padded | {p for p, s in enumerate(full) if s == PAD}
                nxt = (nxt_combo, new_padded)
                if nxt not in seen:
                    seen.add(nxt)
                    bld.state(nxt)
                    queue.append(nxt)
                bld.edge(key, tuple(full), nxt)
    accepting = [key for key in seen
                 if all(finished(i, q) for i, q in enumerate(key[0]))]
    return trim(bld.build(start, accepting))


def substitute_tracks(a: Automaton, sigma: tuple[int, ...], tracks: int,
                      universe: Automaton | None = None) -> Automaton:
    """Reindex tracks: the result accepts (w1..wk) iff (w_sigma(1)..w_sigma(m))
    is accepted by ``a``.

    ``sigma`` is 1-based, need not be injective, and need not be onto;
    tracks outside its range are unconstrained except for membership in
    ``universe`` when one is supplied.
    """
    if len(sigma) != a.tracks:
        raise TrackMismatchError(f"sigma has {len(sigma)} entries, automaton {a.tracks} tracks")
    if any(not 1 <= t <= tracks for t in sigma):
        raise InputError("sigma entry out of range")
    if universe is not None and universe.tracks != 1:
        raise TrackMismatchError("universe must be a one-track automaton")

    free = tuple(p for p in range(tracks) if (p + 1) not in sigma)
    components = [(a, tuple(t - 1 for t in sigma))]
    if universe is not None:
        components.extend((universe, (p,)) for p in free)
        wild: tuple[int, ...] = ()
    else:
        wild = free
    return _track_join(a.alphabet, tracks, components, wild)


def cylindrify(a: Automaton, position: int, universe: Automaton | None = None) -> Automaton:
    """Insert a fresh track at ``position`` (1-based), ranging over ``universe``."""
    if not 1 <= position <= a.tracks + 1:
        raise InputError(f"cannot insert track at position {position}")
    sigma = tuple(m if m < position else m + 1 for m in range(1, a.tracks + 1))
    return substitute_tracks(a, sigma, a.tracks + 1, universe)


def project(a: Automaton, position: int) -> Automaton:
    """Drop one track, closing over the pads the removed track leaves behind.

    A surviving tuple is accepted iff some word can be reinserted at
    ``position`` to make ``a`` accept; runs where only the dropped track
    kept going are folded into the accepting set first.
    """
    if a.tracks < 1:
        raise TrackMismatchError("cannot project a 0-track automaton")
    if not 1 <= position <= a.tracks:
        raise InputError(f"no track at position {position}")
    src = _pad_filter(a)
    pos = position - 1
    rest = a.tracks - 1

    def drop(label: Label) -> Label:
        return label[:pos] + label[pos + 1:]

    # states from which acceptance is reachable while every remaining track pads
    tail: dict[int, set[int]] = {}
    for s, lab, d in src.transitions:
        if all(x == PAD for x in drop(lab)):
            tail.setdefault(d, set()).add(s)
    saturated = set(src.accepting)
    stack = list(saturated)
    while stack:
        for prev in tail.get(stack.pop(), ()):
            if prev not in saturated:
                saturated.add(prev)
                stack.append(prev)

    edges = set()
    for s, lab, d in src.transitions:
        new = drop(lab)
        if any(x != PAD for x in new):
            edges.add((s, new, d))
    return trim(
        Automaton(rest, a.alphabet, src.states, src.initial, frozenset(saturated),
                  frozenset(edges))
    )


def canonicalize(a: Automaton, state_cap: int = DEFAULT_STATE_CAP) -> Automaton:
    """Minimal trim DFA of the accepted tuple set, BFS-numbered.

    Missing transitions mean rejection; the sink is implicit and never
    stored, so the label space is not enumerated.  Equal relations yield
    structurally identical results, so canonical forms can be compared
    or hashed directly.
    """
    det = determinize(
        _pad_filter(a), state_cap=state_cap
    )
    rows: dict[int, dict[Label, int]] = {q: {} for q in range(det.states)}
    bwd: dict[int, set[int]] = {}
    for s, lab, d in det.transitions:
        rows[s][lab] = d
        bwd.setdefault(d, set()).add(s)

    # every determinized state is reachable, so live = co-reachable
    live: set[int] = set()
    stack = list(det.accepting)
    while stack:
        q = stack.pop()
        if q not in live:
            live.add(q)
            stack.extend(bwd.get(q, ()))
    start = next(iter(det.initial))
    if start not in live:
        return Automaton(a.tracks, a.alphabet, 1, frozenset({0}), frozenset(),
                         frozenset(), deterministic=True)

    key = a.alphabet.label_key
    lrows = {
        q: {lab: d for lab, d in rows[q].items() if d in live} for q in live
    }

    # Moore refinement; absent labels all go to the implicit dead block,
    # which no live state can join, so present-label signatures suffice
    part = {q: (1 if q in det.accepting else 0) for q in live}
    blocks = len(set(part.values()))
    while True:
        sigs: dict = {}
        new = {}
        for q in sorted(live):
            sig = (part[q],
                   tuple(sorted((key(lab), part[d]) for lab, d in lrows[q].items())))
            new[q] = sigs.setdefault(sig, len(sigs))
        part = new
        if len(sigs) == blocks:
            break
        blocks = len(sigs)

    # BFS numbering from the initial block, labels in sort order
    rep_rows: dict[int, list[tuple[tuple[int, ...], Label, int]]] = {}
    for q in live:
        if part[q] not in rep_rows:
            rep_rows[part[q]] = sorted(
                (key(lab), lab, part[d]) for lab, d in lrows[q].items()
            )
    order = {part[start]: 0}
    queue = deque([part[start]])
    edges = set()
    while queue:
        blk = queue.popleft()
        for _, lab, dblk in rep_rows[blk]:
            if dblk not in order:
                order[dblk] = len(order)
                queue.append(dblk)
            edges.add((order[blk], lab, order[dblk]))
    accepting = frozenset(order[part[q]] for q in live if q in det.accepting)
    return Automaton(a.tracks, a.alphabet, len(order), frozenset({0}),
                     accepting, frozenset(edges), deterministic=True)


def fingerprint(a: Automaton) -> tuple:
    """Hashable structural summary; canonical automata with equal languages collide."""
    key = a.alphabet.label_key
    return (
        a.tracks,
        a.alphabet.letters,
        a.states,
        tuple(sorted(a.initial)),
        tuple(sorted(a.accepting)),
        tuple(sorted(a.transitions, key=lambda t: (t[0], key(t[1]), t[2]))),
    )


def is_empty(a: Automaton) -> bool:
    """True iff no valid convolution is accepted."""
    t = trim(_pad_filter(a))
    return not (t.accepting and t.initial)


def equivalent(a: Automaton, b: Automaton,
               state_cap: int = DEFAULT_STATE_CAP) -> bool:
    """Language equality, via emptiness of both differences."""
    _check_compatible(a, b)
    return is_empty(boolean_combine(a, b, "minus", state_cap=state_cap)) and is_empty(
        boolean_combine(b, a, "minus", state_cap=state_cap)
    )


def is_empty_witness(a: Automaton) -> tuple[Word, ...] | None:
    """The length-lex least accepted tuple, or None if the language is empty.

    Convolutions are compared by length first, then letter by letter in
    alphabet order with the pad sorting last.
    """
    src = trim(_pad_filter(a))
    if not (src.initial and src.accepting):
        return None
    if src.tracks == 0:
        return ()
    out = _out_map(src)
    key = src.alphabet.label_key
    heap = [(0, (), q, ()) for q in sorted(src.initial)]
    heapq.heapify(heap)
    visited: set[int] = set()
    while heap:
        length, path_keys, q, path = heapq.heappop(heap)
        if q in visited:
            continue
        visited.add(q)
        if q in src.accepting:
            return deconvolve(list(path), src.tracks)
        for label, dsts in out.get(q, {}).items():
            for d in dsts:
                if d not in visited:
                    heapq.heappush(
                        heap,
                        (length + 1, path_keys + (key(label),), d, path + (label,)),
                    )
    return None


def enumerate_upto(a: Automaton, max_length: int) -> list[tuple[Word, ...]]:
    """All accepted tuples whose convolution is at most ``max_length`` long,
    in length-lex order."""
    src = trim(_pad_filter(a))
    found: list[tuple[Word, ...]] = []
    if not src.initial:
        return found
    if src.initial & src.accepting:
        found.append(deconvolve([], src.tracks))
    if src.tracks == 0:
        return found
    out = _out_map(src)
    key = src.alphabet.label_key
    level: list[tuple[tuple[Label, ...], frozenset[int]]] = [((), frozenset(src.initial))]
    for _ in range(max_length):
        nxt: list[tuple[tuple[Label, ...], frozenset[int]]] = []
        for path, states in level:
            moves: dict[Label, set[int]] = {}
            for q in states:
                for label, dsts in out.get(q, {}).items():
                    moves.setdefault(label, set()).update(dsts)
            for label in sorted(moves, key=key):
                reached = frozenset(moves[label])
                nxt.append((path + (label,), reached))
                if reached & src.accepting:
                    found.append(deconvolve(list(path + (label,)), src.tracks))
        level = nxt
        if not level:
            break
    return found


def concatenate(a: Automaton, b: Automaton) -> Automaton:
    """Concatenation of one-track languages (pads make this unsound for k > 1)."""
    _check_compatible(a, b)
    if a.tracks != 1:
        raise TrackMismatchError("concatenation is defined for one-track automata")
    off = a.states
    edges = set(a.transitions)
    edges |= {(s + off, lab, d + off) for s, lab, d in b.transitions}
    b_initial = {q + off for q in b.initial}
    for f in a.accepting:
        for s, lab, d in b.transitions:
            if s in b.initial:
                edges.add((f, lab, d + off))
    accepting = {q + off for q in b.accepting}
    if b.initial & b.accepting:
        accepting |= set(a.accepting)
    initial = set(a.initial)
    if a.initial & a.accepting:
        initial |= b_initial
    return trim(
        Automaton(1, a.alphabet, a.states + b.states, frozenset(initial),
                  frozenset(accepting), frozenset(edges))
    )


# --- regular expressions -------------------------------------------------

_REGEX_OPS = set("()|*·")


def _regex_tokens(pattern: str, alphabet: Alphabet):
    tokens: list[tuple[str, str, int]] = []
    i = 0
    letters = sorted(alphabet.letters, key=len, reverse=True)
    while i < len(pattern):
        ch = pattern[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _REGEX_OPS:
            tokens.append(("op", ch, i))
            i += 1
            continue
        for letter in letters:  # explicit letters win over the constants below
            if pattern.startswith(letter, i):
                tokens.append(("letter", letter, i))
                i += len(letter)
                break
        else:
            if ch == "ε":  # epsilon
                tokens.append(("eps", ch, i))
                i += 1
            elif ch == "∅":  # empty set
                tokens.append(("void", ch, i))
                i += 1
            else:
                raise ParseError(f"unknown symbol {ch!r} in regex", i)
    return tokens


class _RegexParser:
    """Recursive descent over |, concatenation (juxtaposition or ·), and *."""

    def __init__(self, tokens, alphabet: Alphabet):
        self.tokens = tokens
        self.pos = 0
        self.alphabet = alphabet
        self.counter = itertools.count()
        self.eps_edges: list[tuple[int, str | None, int]] = []

    def fresh(self) -> int:
        return next(self.counter)

    def peek(self):
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def parse(self) -> tuple[int, int]:
        frag = self.alternation()
        if self.peek() is not None:
            raise ParseError("unexpected trailing input in regex", self.peek()[2])
        return frag

    def alternation(self):
        frags = [self.sequence()]
        while self.peek() and self.peek()[:2] == ("op", "|"):
            self.pos += 1
            frags.append(self.sequence())
        if len(frags) == 1:
            return frags[0]
        start, end = self.fresh(), self.fresh()
        for s, e in frags:
            self.eps_edges.append((start, None, s))
            self.eps_edges.append((e, None, end))
        return start, end

    def sequence(self):
        frags = []
        pending_dot = None
        while True:
            tok = self.peek()
            if tok is None or tok[:2] in {("op", "|"), ("op", ")")}:
                break
            if tok[:2] == ("op", "·"):
                if not frags:
                    raise ParseError("concatenation needs a left operand", tok[2])
                pending_dot = tok[2]
                self.pos += 1
                continue
            frags.append(self.starred())
            pending_dot = None
        if pending_dot is not None:
            raise ParseError("concatenation needs a right operand", pending_dot)
        if not frags:
            at = self.peek()[2] if self.peek() else None
            raise ParseError("empty pattern here; write ε for the empty word", at)
        start, end = frags[0]
        for s, e in frags[1:]:
            self.eps_edges.append((end, None, s))
            end = e
        return start, end

    def starred(self):
        frag = self.primary()
        while self.peek() and self.peek()[:2] == ("op", "*"):
            self.pos += 1
            s, e = frag
            hub = self.fresh()
            self.eps_edges.append((hub, None, s))
            self.eps_edges.append((e, None, hub))
            frag = (hub, hub)
        return frag

    def primary(self):
        tok = self.peek()
        if tok is None:
            raise ParseError("regex ended unexpectedly", None)
        kind, value, at = tok
        if kind == "letter":
            self.pos += 1
            s, e = self.fresh(), self.fresh()
            self.eps_edges.append((s, value, e))
            return s, e
        if kind == "eps":
            self.pos += 1
            s = self.fresh()
            return s, s
        if kind == "void":
            self.pos += 1
            return self.fresh(), self.fresh()
        if (kind, value) == ("op", "("):
            self.pos += 1
            frag = self.alternation()
            tok = self.peek()
            if not tok or tok[:2] != ("op", ")"):
                raise ParseError("unbalanced parenthesis in regex", at)
            self.pos += 1
            return frag
        raise ParseError(f"unexpected {value!r} in regex", at)


def regex_to_automaton(pattern: str, alphabet: Alphabet) -> Automaton:
    """Compile a regex over the alphabet's letters into a one-track automaton.

    Supported syntax: letters, ``|``, juxtaposition or ``·`` for
    concatenation, ``*``, parentheses, ``ε`` and ``∅``.
    """
    parser = _RegexParser(_regex_tokens(pattern, alphabet), alphabet)
    start, end = parser.parse()

    eps: dict[int, set[int]] = {}
    moves: dict[int, set[tuple[str, int]]] = {}
    nodes = {start, end}
    for s, sym, d in parser.eps_edges:
        nodes |= {s, d}
        if sym is None:
            eps.setdefault(s, set()).add(d)
        else:
            moves.setdefault(s, set()).add((sym, d))

    def closure(qs: frozenset[int]) -> frozenset[int]:
        seen = set(qs)
        stack = list(qs)
        while stack:
            for nxt in eps.get(stack.pop(), ()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return frozenset(seen)

    bld = _Builder(alphabet, 1)
    init = closure(frozenset({start}))
    bld.state(init)
    queue = deque([init])
    seen = {init}
    while queue:
        cur = queue.popleft()
        grouped: dict[str, set[int]] = {}
        for q in cur:
            for sym, d in moves.get(q, ()):
                grouped.setdefault(sym, set()).add(d)
        for sym, dsts in grouped.items():
            nxt = closure(frozenset(dsts))
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
            bld.edge(cur, (sym,), nxt)
    accepting = [qs for qs in seen if end in qs]
    return trim(bld.build([init], accepting))


# --- JSON wire format -----------------------------------------------------

def automaton_to_json(a: Automaton) -> dict:
    key = a.alphabet.label_key
    return {
        "tracks": a.tracks,
        "alphabet": list(a.alphabet.letters),
        "states": a.states,
        "initial": sorted(a.initial),
        "accepting": sorted(a.accepting),
        "transitions": [
            [s, list(lab), d]
            for s, lab, d in sorted(a.transitions, key=lambda t: (t[0], key(t[1]), t[2]))
        ],
    }


def automaton_from_json(obj: dict) -> Automaton:
    try:
        alphabet = Alphabet(tuple(obj["alphabet"]))
        return Automaton(
            tracks=int(obj["tracks"]),
            alphabet=alphabet,
            states=int(obj["states"]),
            initial=frozenset(int(q) for q in obj["initial"]),
            accepting=frozenset(int(q) for q in obj["accepting"]),
            transitions=frozenset(
                (int(s), tuple(lab), int(d)) for s, lab, d in obj["transitions"]
            ),
        )
    except KeyError as missing:
        raise InputError(f"automaton object lacks field {missing}") from None


def automaton_or_regex(value, alphabet: Alphabet) -> Automaton:
    """Decode an automaton object, or a regex string as one-track shorthand."""
    if isinstance(value, str):
        return regex_to_automaton(value, alphabet)
    if isinstance(value, dict):
        a = automaton_from_json(value)
        if a.alphabet != alphabet:
            raise InputError("embedded automaton disagrees with the declared alphabet")
        return a
    raise InputError(f"expected a regex string or automaton object, got {type(value).__name__}")
