"""Epistemic models over a shared automatic domain, action models, and
the product update.

Every world carries its own interpretation of the signature while the
domain stays fixed, so an update only rewrites predicate automata.
Postconditions are non-modal formulas over designated variables
``x1..xk``; concatenation-style rewrites that first-order posts cannot
express are attached as native transformers per (event, predicate).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from . import automata as fa
from .errors import (
    EmptyModelError,
    FragmentError,
    InputError,
    TrackMismatchError,
)
from .logic import (
    Atom,
    Formula,
    Signature,
    classify,
    format_formula,
    free_variables,
    fresh_history_var,
    hat_name,
    history_signature,
    knows_name,
    origin_name,
    parse_formula,
    standard_translation,
    validate_against,
    DOM_NAME,
)
from .presentation import (
    AutomaticPresentation,
    check_sentence,
    compile_formula,
    defined_relation,
)

WORLD_SEP = "·"  # joins world and event names after an update


def post_variables(arity: int) -> tuple[str, ...]:
    """The designated variables a postcondition for a k-ary predicate may use."""
    return tuple(f"x{i}" for i in range(1, arity + 1))


def identity_post(predicate: str, arity: int) -> Formula:
    return Atom(predicate, post_variables(arity))


@dataclass(frozen=True)
class NativeTransformer:
    """A built-in regular rewrite for one unary predicate.

    ``op`` is ``concat-right`` or ``concat-left``; ``generator`` is the
    one-track language glued onto the predicate.  ``source`` keeps the
    regex a JSON file used, so dumps reproduce their input.
    """

    op: str
    generator: fa.Automaton
    source: str | None = None

    def __post_init__(self):
        if self.op not in ("concat-right", "concat-left"):
            raise InputError(f"unknown native op {self.op!r}")
        if self.generator.tracks != 1:
            raise TrackMismatchError("native generators must be one-track automata")

    def apply(self, relation: fa.Automaton) -> fa.Automaton:
        if relation.tracks != 1:
            raise FragmentError("native transformers apply to unary predicates only")
        if self.op == "concat-right":
            return fa.concatenate(relation, self.generator)
        return fa.concatenate(self.generator, relation)


@dataclass
class EpistemicModel:
    """Finitely many worlds, per-agent accessibility, per-world relations."""

    agents: tuple[str, ...]
    worlds: tuple[str, ...]
    access: dict[str, frozenset[tuple[str, str]]]
    signature: Signature
    alphabet: fa.Alphabet
    domain: fa.Automaton
    interpretations: dict[str, dict[str, fa.Automaton]]

    def __post_init__(self):
        if not self.worlds:
            raise EmptyModelError("a model needs at least one world")
        if len(set(self.worlds)) != len(self.worlds):
            raise InputError("duplicate world names")
        known = set(self.worlds)
        for agent in self.agents:
            for w, v in self.access.get(agent, frozenset()):
                if w not in known or v not in known:
                    raise InputError(f"accessibility of {agent!r} mentions unknown worlds")
        for w in self.worlds:
            if w not in self.interpretations:
                raise InputError(f"world {w!r} has no interpretation")

    def presentation_at(self, world: str) -> AutomaticPresentation:
        return AutomaticPresentation(
            self.signature, self.alphabet, self.domain, self.interpretations[world]
        )

    def validate(self):
        from .presentation import validate as validate_presentation

        issues = []
        for w in self.worlds:
            for diag in validate_presentation(self.presentation_at(w)):
                issues.append((w, diag))
        return issues


@dataclass
class ActionModel:
    """Events with closed non-modal preconditions and per-predicate posts."""

    events: tuple[str, ...]
    access: dict[str, frozenset[tuple[str, str]]]
    pre: dict[str, Formula]
    post: dict[str, dict[str, Formula]]
    native: dict[str, dict[str, NativeTransformer]] = field(default_factory=dict)

    def __post_init__(self):
        if not self.events:
            raise InputError("an action model needs at least one event")
        if len(set(self.events)) != len(self.events):
            raise InputError("duplicate event names")
        for e in self.events:
            self.pre.setdefault(e, None)
            self.post.setdefault(e, {})

    def check_against(self, signature: Signature):
        """Validate formulas and fragments relative to a model signature."""
        for e in self.events:
            pre = self.pre.get(e)
            if pre is not None:
                validate_against(pre, signature)
                info = classify(pre)
                if info.modal:
                    raise FragmentError(f"precondition of {e!r} is modal")
                if not info.closed:
                    raise FragmentError(f"precondition of {e!r} has free variables")
            for p, phi in self.post.get(e, {}).items():
                if p not in signature:
                    raise InputError(f"post of {e!r} rewrites unknown predicate {p!r}")
                validate_against(phi, signature)
                info = classify(phi)
                if info.modal:
                    raise FragmentError(f"post of {e!r} for {p!r} is modal")
                allowed = set(post_variables(signature.arity(p)))
                stray = [v for v in info.free_vars if v not in allowed]
                if stray:
                    raise InputError(
                        f"post of {e!r} for {p!r} uses variables {stray} outside x1..xk"
                    )
            for p, nt in self.native.get(e, {}).items():
                if p not in signature:
                    raise InputError(f"native rewrite targets unknown predicate {p!r}")
                if signature.arity(p) != 1:
                    raise FragmentError("native transformers apply to unary predicates only")

    def is_quantifier_free(self) -> bool:
        """True when every post is quantifier-free and nothing is native."""
        if any(self.native.get(e) for e in self.events):
            return False
        return all(
            classify(phi).quantifier_free
            for e in self.events
            for phi in self.post.get(e, {}).values()
        )


class UpdateCache:
    """Memoizes per-(interpretation, event) work across update steps.

    Interpretations are keyed by the canonical forms of their predicate
    automata, so worlds whose relations define equal languages share one
    computation.
    """

    def __init__(self):
        self.canonical: dict[fa.Automaton, fa.Automaton] = {}
        self.outcomes: dict[tuple, tuple[bool, dict[str, fa.Automaton] | None]] = {}

    def canon(self, a: fa.Automaton) -> fa.Automaton:
        hit = self.canonical.get(a)
        if hit is None:
            hit = fa.canonicalize(a)
            self.canonical[a] = hit
            self.canonical[hit] = hit
        return hit

    def interp_key(self, signature: Signature, interp: dict[str, fa.Automaton]) -> tuple:
        return tuple(self.canon(interp[name]) for name, _ in signature.predicates)


def apply_event(signature: Signature, alphabet: fa.Alphabet, domain: fa.Automaton,
                action: ActionModel, cache: UpdateCache,
                interp: dict[str, fa.Automaton], event: str
                ) -> tuple[bool, dict[str, fa.Automaton] | None]:
    """Evaluate the precondition and rewrite one interpretation.

    Results are memoized by the canonical forms of the input relations,
    so language-equal interpretations share one computation.
    """
    key = (cache.interp_key(signature, interp), event)
    hit = cache.outcomes.get(key)
    if hit is not None:
        return hit
    pres = AutomaticPresentation(signature, alphabet, domain, interp)
    pre = action.pre.get(event)
    if pre is not None and not check_sentence(pres, pre):
        cache.outcomes[key] = (False, None)
        return False, None
    native = action.native.get(event, {})
    posts = action.post.get(event, {})
    updated: dict[str, fa.Automaton] = {}
    for name, arity in signature.predicates:
        if name in native:
            updated[name] = cache.canon(native[name].apply(interp[name]))
        else:
            phi = posts.get(name)
            if phi is None:
                updated[name] = interp[name]  # identity post
            else:
                rewritten = defined_relation(pres, phi, post_variables(arity))
                updated[name] = cache.canon(rewritten)
    cache.outcomes[key] = (True, updated)
    return True, updated


def product_update(model: EpistemicModel, action: ActionModel,
                   cache: UpdateCache | None = None) -> EpistemicModel:
    """The updated model: surviving (world, event) pairs, componentwise access."""
    action.check_against(model.signature)
    cache = cache or UpdateCache()
    worlds: list[str] = []
    interps: dict[str, dict[str, fa.Automaton]] = {}
    for w in model.worlds:
        for e in action.events:
            survives, updated = apply_event(model.signature, model.alphabet,
                                            model.domain, action, cache,
                                            model.interpretations[w], e)
            if survives:
                name = f"{w}{WORLD_SEP}{e}"
                worlds.append(name)
                interps[name] = updated
    if not worlds:
        raise EmptyModelError("no world survived the update")
    alive = set(worlds)
    access: dict[str, frozenset[tuple[str, str]]] = {}
    for agent in model.agents:
        world_pairs = model.access.get(agent, frozenset())
        event_pairs = action.access.get(agent, frozenset())
        access[agent] = frozenset(
            (f"{w1}{WORLD_SEP}{e1}", f"{w2}{WORLD_SEP}{e2}")
            for w1, w2 in world_pairs
            for e1, e2 in event_pairs
            if f"{w1}{WORLD_SEP}{e1}" in alive and f"{w2}{WORLD_SEP}{e2}" in alive
        )
    return EpistemicModel(
        agents=model.agents,
        worlds=tuple(worlds),
        access=access,
        signature=model.signature,
        alphabet=model.alphabet,
        domain=model.domain,
        interpretations=interps,
    )


def iterate_update(model: EpistemicModel, action: ActionModel, steps: int) -> EpistemicModel:
    """Apply the same action ``steps`` times, sharing one memo cache."""
    if steps < 0:
        raise InputError("step count must be >= 0")
    cache = UpdateCache()
    current = model
    for _ in range(steps):
        current = product_update(current, action, cache)
    return current


# --- histories of depth zero as an automatic presentation -------------------

def _letter_checks(model: EpistemicModel, letters: dict[str, str]):
    values = list(letters.values())
    if len(set(values)) != len(values):
        raise InputError("world letters must be distinct")
    for letter in values:
        if letter in model.alphabet or letter == "#" or letter == fa.PAD:
            raise InputError(
                f"world letter {letter!r} clashes with the domain alphabet or a reserved symbol"
            )


def model_presentation(model: EpistemicModel,
                       world_letters: dict[str, str] | None = None
                       ) -> AutomaticPresentation:
    """Present a model as the history structure of its bare worlds.

    Universe words are ``w`` for each world and ``w # d`` for each domain
    word ``d``; every relation of the history signature is produced as an
    explicit automaton.
    """
    letters = world_letters or {w: w for w in model.worlds}
    if set(letters) != set(model.worlds):
        raise InputError("world_letters must name every world exactly once")
    _letter_checks(model, letters)

    base = model.alphabet.letters
    big = fa.Alphabet(tuple(letters[w] for w in model.worlds) + ("#",) + base)
    hist_sig = history_signature(model.signature, model.agents, model.worlds)

    def universe() -> fa.Automaton:
        # one shared post-letter state: every world owns an identical copy
        # of the domain, and products blow up if each world gets its own
        bld = fa._Builder(big, 1)
        ROOT, SEEN = "root", "seen"
        for w in model.worlds:
            bld.edge(ROOT, (letters[w],), SEEN)
        for i in model.domain.initial:
            bld.edge(SEEN, ("#",), ("d", i))
        for s, lab, d in model.domain.transitions:
            bld.edge(("d", s), lab, ("d", d))
        accepting = [SEEN] + [("d", q) for q in model.domain.accepting]
        return fa.trim(bld.build([ROOT], accepting))

    relations: dict[str, fa.Automaton] = {}

    # accessibility: one-letter pairs from the access relation
    for agent in model.agents:
        bld = fa._Builder(big, 2)
        START, END = "s", "t"
        bld.state(START)
        for w, v in sorted(model.access.get(agent, frozenset())):
            bld.edge(START, (letters[w], letters[v]), END)
        relations[knows_name(agent)] = bld.build([START], [END])

    # lifted predicates: (w, v1#u1, .., vk#uk) for tuples in w's relation.
    # The element tracks accept every world's copy of a domain word; only
    # the first track decides which interpretation is consulted.  Without
    # this, an element bound at one world would fail the dom-guards after
    # crossing a knowledge operator and make the translation vacuous.
    # Worlds with language-equal interpretations share one tail copy.
    world_letters = tuple(letters[w] for w in model.worlds)
    for name, arity in model.signature.predicates:
        bld = fa._Builder(big, arity + 1)
        START, TRUE0 = "s", "t"
        bld.state(START)
        accepting = []
        groups: dict[tuple, int] = {}
        for w in model.worlds:
            rel = model.interpretations[w][name]
            if arity == 0:
                if not fa.is_empty(rel):
                    bld.edge(START, (letters[w],), TRUE0)
                    accepting.append(TRUE0)
                continue
            canon = fa.canonicalize(rel)
            key = fa.fingerprint(canon)
            fresh = key not in groups
            gid = groups.setdefault(key, len(groups))
            for combo in itertools.product(world_letters, repeat=arity):
                bld.edge(START, (letters[w],) + combo, ("g", gid))
            if fresh:
                for i in canon.initial:
                    bld.edge(("g", gid), (fa.PAD,) + ("#",) * arity, ("q", gid, i))
                for s, lab, d in canon.transitions:
                    bld.edge(("q", gid, s), (fa.PAD,) + lab, ("q", gid, d))
                accepting.extend(("q", gid, q) for q in canon.accepting)
        relations[hat_name(name)] = fa.trim(bld.build([START], accepting))

    # origin: exactly the one-letter word of each world
    for w in model.worlds:
        bld = fa._Builder(big, 1)
        bld.edge("s", (letters[w],), "t")
        relations[origin_name(w)] = bld.build(["s"], ["t"])

    # element-of: (w, v#u) for domain words u and any worlds w, v.  The
    # domain is shared, so every copy of an element belongs to every
    # world's structure; see the note on the lifted predicates above.
    bld = fa._Builder(big, 2)
    START, SEEN = "s", "seen"
    bld.state(START)
    for w in model.worlds:
        for v in model.worlds:
            bld.edge(START, (letters[w], letters[v]), SEEN)
    for i in model.domain.initial:
        bld.edge(SEEN, (fa.PAD, "#"), ("q", i))
    for s, lab, d in model.domain.transitions:
        bld.edge(("q", s), (fa.PAD,) + lab, ("q", d))
    accepting = [("q", q) for q in model.domain.accepting]
    relations[DOM_NAME] = fa.trim(bld.build([START], accepting))

    return AutomaticPresentation(hist_sig, big, universe(), relations)


def element_word(world_letter: str, value: fa.Word) -> fa.Word:
    """The universe word encoding a domain element inside a world's copy."""
    return (world_letter, "#") + tuple(value)


def eval_on_presentation(pres: AutomaticPresentation, phi: Formula, hist_var: str,
                         bindings: dict[str, fa.Word]) -> bool:
    """Check the translated formula with history and element variables pinned
    to singleton languages."""
    translated = standard_translation(phi, hist_var)
    scope = (hist_var,) + tuple(v for v in free_variables(phi))
    compiled = compile_formula(pres, translated, scope)
    for index, var in enumerate(scope, start=1):
        pin = fa.literal_word(pres.alphabet, bindings[var])
        guard = fa.substitute_tracks(pin, (index,), len(scope), None)
        compiled = fa.boolean_combine(compiled, guard, "and")
    return not fa.is_empty(compiled)


def eval_foel(model: EpistemicModel, world: str, phi: Formula,
              assignment: dict[str, fa.Word] | None = None) -> bool:
    """Truth of an epistemic formula at a world, free variables supplied
    as domain words."""
    if world not in model.worlds:
        raise InputError(f"unknown world {world!r}")
    validate_against(phi, model.signature)
    assignment = assignment or {}
    for var in free_variables(phi):
        if var not in assignment:
            raise InputError(f"no value for free variable {var!r}")
        if not fa.accepts(model.domain, (assignment[var],)):
            raise InputError(f"value for {var!r} is not a domain word")
    pres = model_presentation(model)
    y = fresh_history_var(phi)
    bindings = {y: (world,)}
    for var in free_variables(phi):
        bindings[var] = element_word(world, assignment[var])
    return eval_on_presentation(pres, phi, y, bindings)


# --- JSON wire format -----------------------------------------------------

def _access_to_json(access: dict[str, frozenset[tuple[str, str]]]) -> dict:
    return {agent: sorted([list(p) for p in pairs]) for agent, pairs in access.items()}


def _access_from_json(obj: dict) -> dict[str, frozenset[tuple[str, str]]]:
    return {agent: frozenset((p[0], p[1]) for p in pairs) for agent, pairs in obj.items()}


def model_to_json(model: EpistemicModel) -> dict:
    return {
        "agents": list(model.agents),
        "worlds": list(model.worlds),
        "access": _access_to_json(model.access),
        "signature": {n: k for n, k in model.signature.predicates},
        "alphabet": list(model.alphabet.letters),
        "domain": fa.automaton_to_json(model.domain),
        "interpretations": {
            w: {
                name: fa.automaton_to_json(model.interpretations[w][name])
                for name, _ in model.signature.predicates
            }
            for w in model.worlds
        },
    }


def model_from_json(obj: dict) -> EpistemicModel:
    try:
        alphabet = fa.Alphabet(tuple(obj["alphabet"]))
        signature = Signature(tuple((n, int(k)) for n, k in obj["signature"].items()))
        model = EpistemicModel(
            agents=tuple(obj["agents"]),
            worlds=tuple(obj["worlds"]),
            access=_access_from_json(obj["access"]),
            signature=signature,
            alphabet=alphabet,
            domain=fa.automaton_or_regex(obj["domain"], alphabet),
            interpretations={
                w: {
                    name: fa.automaton_or_regex(value, alphabet)
                    for name, value in interp.items()
                }
                for w, interp in obj["interpretations"].items()
            },
        )
    except KeyError as missing:
        raise InputError(f"model object lacks field {missing}") from None
    return model


def action_to_json(action: ActionModel) -> dict:
    out: dict = {
        "events": list(action.events),
        "access": _access_to_json(action.access),
        "pre": {
            e: format_formula(action.pre[e])
            for e in action.events
            if action.pre.get(e) is not None
        },
        "post": {
            e: {p: format_formula(phi) for p, phi in action.post[e].items()}
            for e in action.events
            if action.post.get(e)
        },
    }
    native = {}
    for e in action.events:
        table = action.native.get(e)
        if table:
            native[e] = {
                p: {
                    "op": nt.op,
                    "with": nt.source
                    if nt.source is not None
                    else fa.automaton_to_json(nt.generator),
                }
                for p, nt in table.items()
            }
    if native:
        out["native"] = native
    return out


def action_from_json(obj: dict, signature: Signature, alphabet: fa.Alphabet) -> ActionModel:
    try:
        events = tuple(obj["events"])
        access = _access_from_json(obj.get("access", {}))
        pre = {
            e: parse_formula(text, signature) for e, text in obj.get("pre", {}).items()
        }
        post = {
            e: {p: parse_formula(text, signature) for p, text in table.items()}
            for e, table in obj.get("post", {}).items()
        }
        native = {}
        for e, table in obj.get("native", {}).items():
            native[e] = {}
            for p, entry in table.items():
                generator = fa.automaton_or_regex(entry["with"], alphabet)
                source = entry["with"] if isinstance(entry["with"], str) else None
                native[e][p] = NativeTransformer(entry["op"], generator, source)
    except KeyError as missing:
        raise InputError(f"action object lacks field {missing}") from None
    action = ActionModel(events=events, access=access, pre=pre, post=post, native=native)
    action.check_against(signature)
    return action
