"""Planning over repeated applications of one action model.

A history is a start world followed by events whose preconditions all
held along the way.  Interpretations evolve deterministically with the
events, so histories fall into finitely many interpretation classes
whenever the postconditions are quantifier-free.  The class automaton
reads a history and lands in its class; from it the set of histories
becomes an automatic presentation, goals compile to automata via the
standard translation, and planning reduces to emptiness.

For goals or actions outside that fragment, ``bfs_plan`` searches the
history tree level by level instead: sound, never claiming "no".
"""
from __future__ import annotations

import hashlib
import itertools
from collections import deque
from dataclasses import dataclass, field

from . import automata as fa
from .errors import FragmentError, InputError, ResourceLimitError
from .logic import (
    And,
    Atom,
    Formula,
    Signature,
    classify,
    free_variables,
    fresh_history_var,
    hat_name,
    history_signature,
    knows_name,
    origin_name,
    standard_translation,
    validate_against,
    DOM_NAME,
)
from .presentation import AutomaticPresentation, check_sentence, compile_formula
from .epistemic import (
    ActionModel,
    EpistemicModel,
    UpdateCache,
    WORLD_SEP,
    apply_event,
    eval_on_presentation,
    model_presentation,
)

# Quotient computation refuses to collect more classes than this unless
# told otherwise; with quantifier-free posts it always stops on its own.
DEFAULT_CLASS_CAP = 10_000


@dataclass(frozen=True)
class InterpClass:
    """An interpretation up to language equality.

    Members are canonical automata in signature order, so structural
    equality of two values coincides with per-predicate language
    equality, and the value is hashable.
    """

    predicates: tuple[tuple[str, fa.Automaton], ...]

    @property
    def id(self) -> str:
        digest = hashlib.sha1(
            repr(tuple(fa.fingerprint(a) for _, a in self.predicates)).encode()
        )
        return digest.hexdigest()[:12]

    def automaton(self, name: str) -> fa.Automaton:
        for n, a in self.predicates:
            if n == name:
                return a
        raise InputError(f"class has no predicate {name!r}")

    def as_interpretation(self) -> dict[str, fa.Automaton]:
        return dict(self.predicates)


def interp_class(signature: Signature, interp: dict[str, fa.Automaton],
                 cache: UpdateCache | None = None) -> InterpClass:
    """Canonicalize an interpretation into its class value."""
    cache = cache or UpdateCache()
    return InterpClass(
        tuple((name, cache.canon(interp[name])) for name, _ in signature.predicates)
    )


def apply_event_to_class(cls: InterpClass, event: str, action: ActionModel,
                         signature: Signature, alphabet: fa.Alphabet,
                         domain: fa.Automaton,
                         cache: UpdateCache | None = None) -> InterpClass | None:
    """The class reached by one more event, or None when the precondition
    fails there.  Well defined because preconditions and postconditions
    only see the languages."""
    cache = cache or UpdateCache()
    survives, updated = apply_event(signature, alphabet, domain, action, cache,
                                    cls.as_interpretation(), event)
    if not survives:
        return None
    return interp_class(signature, updated, cache)


@dataclass
class ClassAutomaton:
    """Deterministic map from histories to interpretation classes.

    Reading a history from the start symbol: the first letter must be a
    world and moves to that world's class; each event letter moves along
    ``delta`` when applicable.  A missing ``delta`` entry means the
    precondition fails there, i.e. no extension is a history.
    """

    worlds: tuple[str, ...]
    events: tuple[str, ...]
    initial: dict[str, str]
    delta: dict[tuple[str, str], str]
    classes: dict[str, InterpClass]

    def state_of(self, history: tuple[str, ...]) -> str | None:
        """Class id of a history; None when it is not a history at all."""
        if not history or history[0] not in self.initial:
            return None
        current = self.initial[history[0]]
        for event in history[1:]:
            nxt = self.delta.get((current, event))
            if nxt is None:
                return None
            current = nxt
        return current

    def history_automaton(self, alphabet: fa.Alphabet,
                          start_world: str | None = None,
                          final_ids: frozenset[str] | None = None) -> fa.Automaton:
        """One-track automaton accepting the histories whose class lies in
        ``final_ids`` (all classes by default), optionally pinned to one
        start world."""
        bld = fa._Builder(alphabet, 1)
        START = "i"
        bld.state(START)
        worlds = (start_world,) if start_world is not None else self.worlds
        for w in worlds:
            bld.edge(START, (w,), ("c", self.initial[w]))
        for (cid, event), nxt in self.delta.items():
            bld.edge(("c", cid), (event,), ("c", nxt))
        finals = final_ids if final_ids is not None else frozenset(self.classes)
        return fa.trim(bld.build([START], [("c", cid) for cid in finals]))


@dataclass
class QuotientResult:
    classes: dict[str, InterpClass]
    automaton: ClassAutomaton
    cap_exceeded: bool
    stats: dict = field(default_factory=dict)


def class_quotient(model: EpistemicModel, action: ActionModel,
                   cap: int = DEFAULT_CLASS_CAP,
                   cache: UpdateCache | None = None) -> QuotientResult:
    """Close the world classes under the events of the action model.

    With quantifier-free postconditions the closure is finite and the
    cap is never reached.  Otherwise the cap stops the expansion and the
    result is marked ``cap_exceeded`` (a partial automaton, not an
    error: callers decide whether partial is useful).
    """
    action.check_against(model.signature)
    cache = cache or UpdateCache()
    classes: dict[str, InterpClass] = {}
    initial: dict[str, str] = {}
    delta: dict[tuple[str, str], str] = {}
    frontier: deque[InterpClass] = deque()
    cap_exceeded = False

    def register(cls: InterpClass) -> str | None:
        cid = cls.id
        if cid not in classes:
            nonlocal cap_exceeded
            if len(classes) >= cap:
                cap_exceeded = True
                return None
            classes[cid] = cls
            frontier.append(cls)
        return cid

    for w in model.worlds:
        cid = register(interp_class(model.signature, model.interpretations[w], cache))
        if cid is None:
            break
        initial[w] = cid
    applications = 0
    while frontier and not cap_exceeded:
        cls = frontier.popleft()
        for event in action.events:
            nxt = apply_event_to_class(cls, event, action, model.signature,
                                       model.alphabet, model.domain, cache)
            applications += 1
            if nxt is None:
                continue
            nid = register(nxt)
            if nid is None:
                break
            delta[(cls.id, event)] = nid
    automaton = ClassAutomaton(model.worlds, action.events, initial, delta, classes)
    return QuotientResult(classes, automaton, cap_exceeded,
                          stats={"classes": len(classes), "applications": applications})


@dataclass
class HistoryPresentation:
    """The history structure of a model/action pair, as automata.

    The combined alphabet lists world letters, then event letters, then
    the copy marker ``#``, then the domain letters.  Universe words are
    histories ``h`` and tagged elements ``h # u``.
    """

    presentation: AutomaticPresentation
    quotient: QuotientResult
    alphabet: fa.Alphabet
    world_letters: tuple[str, ...]
    event_letters: tuple[str, ...]


def _combined_alphabet(model: EpistemicModel, action: ActionModel) -> fa.Alphabet:
    letters = model.worlds + action.events + ("#",) + model.alphabet.letters
    if len(set(letters)) != len(letters):
        raise InputError("world, event, domain letters and '#' must all differ")
    if fa.PAD in letters:
        raise InputError(f"{fa.PAD!r} is reserved for padding")
    return fa.Alphabet(letters)


def history_presentation(model: EpistemicModel, action: ActionModel,
                         cap: int = DEFAULT_CLASS_CAP,
                         quotient: QuotientResult | None = None) -> HistoryPresentation:
    """Automatic presentation of all histories and their tagged elements.

    Raises ResourceLimitError when the quotient did not close under the
    cap, since only a finite quotient yields finite automata.
    """
    quotient = quotient or class_quotient(model, action, cap=cap)
    if quotient.cap_exceeded:
        raise ResourceLimitError(
            f"interpretation classes exceeded the cap ({cap}); "
            "the history structure is not finitely presented this way"
        )
    big = _combined_alphabet(model, action)
    hist_sig = history_signature(model.signature, model.agents, model.worlds)
    ca = quotient.automaton
    START = "i"

    def aligned_spine(bld: fa._Builder, width: int) -> set:
        """Edges reading one history per track, all of the same length.

        Each track walks the class automaton on its own; the element
        tracks only need to name valid copies, while the first track's
        class picks the interpretation.  Equal length keeps the element
        payloads aligned behind the separator, which is what makes the
        lifted relations regular, and knowledge edges never mix lengths.
        """
        seen: set = set()
        queue: deque = deque()
        for combo in itertools.product(model.worlds, repeat=width):
            state = ("h",) + tuple(ca.initial[w] for w in combo)
            bld.edge(START, combo, state)
            if state not in seen:
                seen.add(state)
                queue.append(state)
        while queue:
            state = queue.popleft()
            for evs in itertools.product(action.events, repeat=width):
                nxts = tuple(ca.delta.get((cid, e))
                             for cid, e in zip(state[1:], evs))
                if any(n is None for n in nxts):
                    continue
                nxt = ("h",) + nxts
                bld.edge(state, evs, nxt)
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return seen

    def universe() -> fa.Automaton:
        bld = fa._Builder(big, 1)
        bld.state(START)
        spine = aligned_spine(bld, 1)
        accepting = list(spine)
        for state in spine:
            for i in model.domain.initial:
                bld.edge(state, ("#",), ("d", i))
        for s, lab, d in model.domain.transitions:
            bld.edge(("d", s), lab, ("d", d))
        accepting.extend(("d", q) for q in model.domain.accepting)
        return fa.trim(bld.build([START], accepting))

    relations: dict[str, fa.Automaton] = {}

    # two histories an agent cannot tell apart: same length, pairwise
    # related letters, both surviving all preconditions
    for agent in model.agents:
        bld = fa._Builder(big, 2)
        bld.state(START)
        accepting = set()
        for w, v in sorted(model.access.get(agent, frozenset())):
            key = (ca.initial[w], ca.initial[v])
            bld.edge(START, (w, v), key)
            accepting.add(key)
        event_pairs = sorted(action.access.get(agent, frozenset()))
        queue = deque(accepting)
        seen = set(accepting)
        while queue:
            pair = queue.popleft()
            for e1, e2 in event_pairs:
                n1 = ca.delta.get((pair[0], e1))
                n2 = ca.delta.get((pair[1], e2))
                if n1 is None or n2 is None:
                    continue
                nxt = (n1, n2)
                bld.edge(pair, (e1, e2), nxt)
                if nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        relations[knows_name(agent)] = fa.trim(bld.build([START], sorted(seen)))

    # lifted predicates, guided by the class of the first track's history;
    # classes whose automata for this predicate coincide share one copy
    for name, arity in model.signature.predicates:
        bld = fa._Builder(big, arity + 1)
        bld.state(START)
        spine = aligned_spine(bld, arity + 1)
        accepting = []
        if arity == 0:
            accepting = [state for state in spine
                         if not fa.is_empty(ca.classes[state[1]].automaton(name))]
        else:
            groups: dict[tuple, int] = {}
            for state in spine:
                rel = ca.classes[state[1]].automaton(name)
                key = fa.fingerprint(rel)
                fresh = key not in groups
                gid = groups.setdefault(key, len(groups))
                for i in rel.initial:
                    bld.edge(state, (fa.PAD,) + ("#",) * arity, ("p", gid, i))
                if fresh:
                    for s, lab, d in rel.transitions:
                        bld.edge(("p", gid, s), (fa.PAD,) + lab, ("p", gid, d))
                    accepting.extend(("p", gid, q) for q in rel.accepting)
        relations[hat_name(name)] = fa.trim(bld.build([START], accepting))

    # origin: histories beginning at one world
    for w in model.worlds:
        relations[origin_name(w)] = ca.history_automaton(big, start_world=w)

    # element-of: (h, g#u) for same-length histories h, g — every copy of
    # an element of the shared domain belongs to every equally long history
    bld = fa._Builder(big, 2)
    bld.state(START)
    for state in aligned_spine(bld, 2):
        for i in model.domain.initial:
            bld.edge(state, (fa.PAD, "#"), ("d", i))
    for s, lab, d in model.domain.transitions:
        bld.edge(("d", s), (fa.PAD,) + lab, ("d", d))
    relations[DOM_NAME] = fa.trim(
        bld.build([START], [("d", q) for q in model.domain.accepting])
    )

    pres = AutomaticPresentation(hist_sig, big, universe(), relations)
    return HistoryPresentation(pres, quotient, big, model.worlds, action.events)


def _history_letters_only(a: fa.Automaton, letters: tuple[str, ...]) -> fa.Automaton:
    """Re-home a one-track automaton onto the world/event alphabet.

    After trimming, every edge lies on some accepted word; solution
    languages contain histories only, so re-validation against the small
    alphabet fails loudly if a stray letter ever survives.
    """
    t = fa.trim(a)
    return fa.Automaton(1, fa.Alphabet(letters), t.states, t.initial,
                        t.accepting, t.transitions, t.deterministic)


def solution_automaton(model: EpistemicModel, world: str, action: ActionModel,
                       goal: Formula, cap: int = DEFAULT_CLASS_CAP,
                       presentation: HistoryPresentation | None = None) -> fa.Automaton:
    """Automaton over world/event letters accepting exactly the histories
    from ``world`` at which the goal holds."""
    if world not in model.worlds:
        raise InputError(f"unknown world {world!r}")
    validate_against(goal, model.signature)
    if free_variables(goal):
        raise InputError("a planning goal must be a closed formula")
    hp = presentation or history_presentation(model, action, cap=cap)
    y = fresh_history_var(goal)
    query = And(standard_translation(goal, y), Atom(origin_name(world), (y,)))
    compiled = compile_formula(hp.presentation, query, (y,))
    return _history_letters_only(compiled, model.worlds + action.events)


@dataclass
class PlanResult:
    """Outcome of a planning call; ``plan`` is the event sequence (the
    start world stripped) when the answer is yes."""

    answer: str
    plan: tuple[str, ...] | None
    depth: int | None
    classes: int | None
    stats: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "answer": self.answer,
            "plan": list(self.plan) if self.plan is not None else None,
            "depth": self.depth,
            "classes": self.classes,
            "stats": self.stats,
        }


def _require_decidable_fragment(action: ActionModel):
    if not action.is_quantifier_free():
        raise FragmentError(
            "the decision procedure needs quantifier-free postconditions "
            "without native rewrites; use bfs_plan for the general case"
        )


def decide_plan(model: EpistemicModel, world: str, action: ActionModel,
                goal: Formula, cap: int = DEFAULT_CLASS_CAP) -> PlanResult:
    """Decide plan existence and return the length-lex minimal plan.

    Complete for quantifier-free postconditions; anything else raises a
    fragment error instead of risking a wrong answer.
    """
    action.check_against(model.signature)
    _require_decidable_fragment(action)
    hp = history_presentation(model, action, cap=cap)
    sol = solution_automaton(model, world, action, goal, presentation=hp)
    witness = fa.is_empty_witness(sol)
    classes = len(hp.quotient.classes)
    stats = dict(hp.quotient.stats)
    stats["solution_states"] = sol.states
    if witness is None:
        return PlanResult("no", None, None, classes, stats)
    history = witness[0]
    plan = history[1:]
    return PlanResult("yes", plan, len(plan), classes, stats)


def bfs_plan(model: EpistemicModel, world: str, action: ActionModel,
             goal: Formula, max_depth: int,
             cap: int = DEFAULT_CLASS_CAP) -> PlanResult:
    """Search histories from ``world`` level by level, length-lex within
    each level.  Sound for every expressible goal and action; answers
    yes with the minimal plan or unknown at the depth bound, never no.

    Non-modal goals only see the history's own interpretation, so the
    walk runs on interpretation classes with one truth check per class.
    Modal goals need the surrounding histories: those are evaluated on
    the standard translation over each level's updated model.
    """
    if world not in model.worlds:
        raise InputError(f"unknown world {world!r}")
    if max_depth < 0:
        raise InputError("max_depth must be >= 0")
    action.check_against(model.signature)
    validate_against(goal, model.signature)
    if free_variables(goal):
        raise InputError("a planning goal must be a closed formula")
    if classify(goal).modal:
        return _bfs_modal(model, world, action, goal, max_depth)
    return _bfs_classes(model, world, action, goal, max_depth)


def _bfs_classes(model: EpistemicModel, world: str, action: ActionModel,
                 goal: Formula, max_depth: int) -> PlanResult:
    cache = UpdateCache()
    truth: dict[InterpClass, bool] = {}

    def holds(cls: InterpClass) -> bool:
        hit = truth.get(cls)
        if hit is None:
            pres = AutomaticPresentation(model.signature, model.alphabet,
                                         model.domain, cls.as_interpretation())
            hit = check_sentence(pres, goal)
            truth[cls] = hit
        return hit

    start = interp_class(model.signature, model.interpretations[world], cache)
    # pruning same-class histories keeps the first (length-lex least)
    # representative, so the first hit is still the minimal plan
    seen = {start}
    level: list[tuple[tuple[str, ...], InterpClass]] = [((), start)]
    for depth in range(max_depth + 1):
        for plan, cls in level:
            if holds(cls):
                return PlanResult("yes", plan, len(plan), len(seen),
                                  {"visited_classes": len(seen), "levels": depth})
        if depth == max_depth:
            break
        nxt: list[tuple[tuple[str, ...], InterpClass]] = []
        for plan, cls in level:
            for event in action.events:
                out = apply_event_to_class(cls, event, action, model.signature,
                                           model.alphabet, model.domain, cache)
                if out is None or out in seen:
                    continue
                seen.add(out)
                nxt.append((plan + (event,), out))
        if not nxt:
            break
        level = nxt
    return PlanResult("unknown", None, None, len(seen),
                      {"visited_classes": len(seen), "levels": max_depth})


def _bfs_modal(model: EpistemicModel, world: str, action: ActionModel,
               goal: Formula, max_depth: int) -> PlanResult:
    from .epistemic import product_update
    from .errors import EmptyModelError

    cache = UpdateCache()
    y = fresh_history_var(goal)
    current = model
    # histories tracked structurally: world names after an update are
    # joined strings, which would be ambiguous to split
    level: list[tuple[tuple[str, ...], str]] = [((), world)]
    visited = 1
    for depth in range(max_depth + 1):
        pres = model_presentation(current)
        for plan, name in level:
            if eval_on_presentation(pres, goal, y, {y: (name,)}):
                return PlanResult("yes", plan, len(plan), None,
                                  {"visited_histories": visited, "levels": depth})
        if depth == max_depth:
            break
        try:
            current = product_update(current, action, cache)
        except EmptyModelError:
            break
        alive = set(current.worlds)
        nxt = []
        for plan, name in level:
            for event in action.events:
                child = f"{name}{WORLD_SEP}{event}"
                if child in alive:
                    nxt.append((plan + (event,), child))
                    visited += 1
        if not nxt:
            break
        level = nxt
    return PlanResult("unknown", None, None, None,
                      {"visited_histories": visited, "levels": max_depth})
