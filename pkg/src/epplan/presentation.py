"""First-order model checking over automata-presented structures.

A presentation gives the domain as a one-track automaton and each k-ary
predicate as a k-track automaton over convolutions of domain words.
Non-modal formulas compile to automata over assignment tuples, so
sentences are decided by an emptiness test even when the domain is
infinite.  ``brute_force_check`` is the independent finite-domain
evaluator used to cross-check the compiled route.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from . import automata as fa
from .errors import FragmentError, InfiniteDomainError, InputError, TrackMismatchError
from .logic import (
    And,
    Atom,
    Exists,
    FalseFormula,
    Forall,
    Formula,
    Iff,
    Implies,
    Know,
    Not,
    Or,
    Signature,
    TrueFormula,
    classify,
    free_variables,
    validate_against,
)

# Intermediate results are minimized once they exceed this many states.
DEFAULT_CANON_THRESHOLD = 5_000


@dataclass
class AutomaticPresentation:
    """Domain plus one relation automaton per signature predicate."""

    signature: Signature
    alphabet: fa.Alphabet
    domain: fa.Automaton
    relations: dict[str, fa.Automaton]

    def __post_init__(self):
        if self.domain.tracks != 1:
            raise TrackMismatchError("the domain must be a one-track automaton")
        if self.domain.alphabet != self.alphabet:
            raise TrackMismatchError("domain alphabet differs from the presentation's")
        for name, arity in self.signature.predicates:
            if name not in self.relations:
                raise InputError(f"no automaton for predicate {name!r}")
            rel = self.relations[name]
            if rel.tracks != arity:
                raise TrackMismatchError(
                    f"predicate {name!r} has arity {arity} but its automaton "
                    f"reads {rel.tracks} tracks"
                )
            if rel.alphabet != self.alphabet:
                raise TrackMismatchError(f"predicate {name!r} uses a foreign alphabet")
        extra = set(self.relations) - set(self.signature.names())
        if extra:
            raise InputError(f"relations not in the signature: {sorted(extra)}")


@dataclass(frozen=True)
class Diagnostic:
    relation: str | None
    message: str
    witness: tuple | None = None


def domain_power(domain: fa.Automaton, tracks: int) -> fa.Automaton:
    """All k-tuples of domain words, as a k-track automaton."""
    if tracks == 0:
        return fa.epsilon_automaton(domain.alphabet, 0)
    # one fused join; building the power track by track squares the work
    return fa.substitute_tracks(domain, (1,), tracks, domain)


def validate(pres: AutomaticPresentation) -> list[Diagnostic]:
    """Diagnose violations of the presentation contract; empty means valid."""
    found: list[Diagnostic] = []
    if fa.is_empty(pres.domain):
        found.append(Diagnostic(None, "the domain language is empty"))
    for name, arity in pres.signature.predicates:
        rel = pres.relations[name]
        junk = fa.boolean_combine(rel, domain_power(pres.domain, arity), "minus")
        witness = fa.is_empty_witness(junk)
        if witness is not None:
            found.append(
                Diagnostic(name, "accepts a tuple outside the domain", witness)
            )
        stray = fa.trim(
            fa.boolean_combine(rel, fa.invalid_convolutions(pres.alphabet, arity), "and")
        )
        if stray.initial and stray.accepting:
            found.append(
                Diagnostic(name, "accepts a string that is not a valid convolution")
            )
    return found


class _Compiler:
    """Compiles each subformula over its own free variables and lifts at
    the joins; the track count then follows the formula's width, not its
    nesting depth, which is what keeps deeply nested binders affordable."""

    def __init__(self, pres: AutomaticPresentation, canon_threshold: int, state_cap: int):
        self.pres = pres
        self.canon_threshold = canon_threshold
        self.state_cap = state_cap
        self.powers: dict[int, fa.Automaton] = {}

    def power(self, k: int) -> fa.Automaton:
        if k not in self.powers:
            self.powers[k] = domain_power(self.pres.domain, k)
        return self.powers[k]

    def shrink(self, a: fa.Automaton) -> fa.Automaton:
        if a.states > self.canon_threshold:
            return fa.canonicalize(a, state_cap=self.state_cap)
        return a

    def lift(self, a: fa.Automaton, frm: tuple[str, ...],
             to: tuple[str, ...]) -> fa.Automaton:
        """Re-home tracks onto ``to``; new positions range over the domain."""
        if frm == to:
            return a
        sigma = tuple(to.index(v) + 1 for v in frm)
        return self.shrink(
            fa.substitute_tracks(a, sigma, len(to), self.pres.domain)
        )

    def narrow(self, node: Formula) -> tuple[fa.Automaton, tuple[str, ...]]:
        """The automaton of satisfying assignments over exactly free(node),
        tracks in first-occurrence order."""
        if isinstance(node, TrueFormula):
            return self.power(0), ()
        if isinstance(node, FalseFormula):
            return fa.empty_automaton(self.pres.alphabet, 0), ()
        if isinstance(node, Atom):
            rel = self.pres.relations[node.predicate]
            vars_ = tuple(dict.fromkeys(node.args))
            sigma = tuple(vars_.index(v) + 1 for v in node.args)
            a = self.shrink(
                fa.substitute_tracks(rel, sigma, len(vars_), self.pres.domain)
            )
            return a, vars_
        if isinstance(node, Not):
            a, vs = self.narrow(node.operand)
            out = self.shrink(
                fa.boolean_combine(self.power(len(vs)), a, "minus",
                                   state_cap=self.state_cap)
            )
            return out, vs
        if isinstance(node, (And, Or)):
            a, va = self.narrow(node.left)
            b, vb = self.narrow(node.right)
            vs = va + tuple(v for v in vb if v not in va)
            op = "and" if isinstance(node, And) else "or"
            out = self.shrink(
                fa.boolean_combine(self.lift(a, va, vs), self.lift(b, vb, vs), op)
            )
            return out, vs
        if isinstance(node, Implies):
            return self.narrow(Or(Not(node.left), node.right))
        if isinstance(node, Iff):
            return self.narrow(
                And(Implies(node.left, node.right), Implies(node.right, node.left))
            )
        if isinstance(node, Exists):
            a, vb = self.narrow(node.body)
            if node.var in vb:
                pos = vb.index(node.var) + 1
                return self.shrink(fa.project(a, pos)), vb[:pos - 1] + vb[pos:]
            # vacuous binder still asserts the domain is inhabited
            ext = vb + (node.var,)
            return self.shrink(fa.project(self.lift(a, vb, ext), len(ext))), vb
        if isinstance(node, Forall):
            return self.narrow(Not(Exists(node.var, Not(node.body))))
        if isinstance(node, Know):
            raise FragmentError("knowledge operators cannot be compiled over a presentation")
        raise InputError(f"not a formula node: {node!r}")

    def compile(self, node: Formula, scope: tuple[str, ...]) -> fa.Automaton:
        a, vs = self.narrow(node)
        return self.lift(a, vs, tuple(scope))


def compile_formula(pres: AutomaticPresentation, node: Formula, scope: tuple[str, ...],
                    canon_threshold: int = DEFAULT_CANON_THRESHOLD,
                    state_cap: int = fa.DEFAULT_STATE_CAP) -> fa.Automaton:
    """Automaton of satisfying assignments, one track per scope variable.

    Universal quantifiers go through double negation; every track of the
    result is restricted to domain words.
    """
    validate_against(node, pres.signature)
    if len(set(scope)) != len(scope):
        raise InputError("scope variables must be distinct")
    missing = [v for v in free_variables(node) if v not in scope]
    if missing:
        raise InputError(f"free variables {missing} are not in the scope")
    return _Compiler(pres, canon_threshold, state_cap).compile(node, tuple(scope))


# the query surface

def defined_relation(pres: AutomaticPresentation, node: Formula,
                     scope: tuple[str, ...], **kwargs) -> fa.Automaton:
    """The relation a formula defines, with tracks ordered by ``scope``."""
    return compile_formula(pres, node, scope, **kwargs)


def check_sentence(pres: AutomaticPresentation, node: Formula, **kwargs) -> bool:
    """Truth of a closed non-modal formula in the presented structure."""
    info = classify(node)
    if not info.closed:
        raise InputError(f"not a sentence; free variables {info.free_vars}")
    if info.modal:
        raise FragmentError("check_sentence handles non-modal sentences only")
    return not fa.is_empty(compile_formula(pres, node, (), **kwargs))


def enumerate_domain(domain: fa.Automaton, limit: int = 10_000) -> list[fa.Word]:
    """All domain words, when the (trimmed) domain automaton is acyclic."""
    t = fa.trim(domain)
    adjacency: dict[int, set[int]] = {}
    for s, _, d in t.transitions:
        adjacency.setdefault(s, set()).add(d)
    color: dict[int, int] = {}

    def cyclic(q: int) -> bool:
        color[q] = 1
        for nxt in adjacency.get(q, ()):
            mark = color.get(nxt, 0)
            if mark == 1 or (mark == 0 and cyclic(nxt)):
                return True
        color[q] = 2
        return False

    if any(color.get(q, 0) == 0 and cyclic(q) for q in range(t.states)):
        raise InfiniteDomainError("the domain automaton has a reachable cycle")
    words = fa.enumerate_upto(t, t.states)
    if len(words) > limit:
        raise InfiniteDomainError(f"domain enumeration exceeded {limit} words")
    return [w[0] for w in words]


def brute_force_check(pres: AutomaticPresentation, node: Formula,
                      assignment: dict[str, fa.Word] | None = None) -> bool:
    """Naive evaluation over an explicitly enumerated finite domain.

    This is the oracle route: it never builds formula automata, it just
    recurses over the syntax with an environment.
    """
    validate_against(node, pres.signature)
    info = classify(node)
    if info.modal:
        raise FragmentError("brute_force_check handles non-modal formulas only")
    domain = enumerate_domain(pres.domain)
    env = dict(assignment or {})
    for v in info.free_vars:
        if v not in env:
            raise InputError(f"no value for free variable {v!r}")

    def ev(phi: Formula, env: dict[str, fa.Word]) -> bool:
        if isinstance(phi, TrueFormula):
            return True
        if isinstance(phi, FalseFormula):
            return False
        if isinstance(phi, Atom):
            words = tuple(env[v] for v in phi.args)
            return fa.accepts(pres.relations[phi.predicate], words)
        if isinstance(phi, Not):
            return not ev(phi.operand, env)
        if isinstance(phi, And):
            return ev(phi.left, env) and ev(phi.right, env)
        if isinstance(phi, Or):
            return ev(phi.left, env) or ev(phi.right, env)
        if isinstance(phi, Implies):
            return not ev(phi.left, env) or ev(phi.right, env)
        if isinstance(phi, Iff):
            return ev(phi.left, env) == ev(phi.right, env)
        if isinstance(phi, Exists):
            return any(ev(phi.body, {**env, phi.var: d}) for d in domain)
        if isinstance(phi, Forall):
            return all(ev(phi.body, {**env, phi.var: d}) for d in domain)
        raise InputError(f"not a formula node: {phi!r}")

    return ev(node, env)


# --- JSON wire format -----------------------------------------------------

def presentation_to_json(pres: AutomaticPresentation) -> dict:
    return {
        "signature": {name: arity for name, arity in pres.signature.predicates},
        "alphabet": list(pres.alphabet.letters),
        "domain": fa.automaton_to_json(pres.domain),
        "relations": {
            name: fa.automaton_to_json(pres.relations[name])
            for name, _ in pres.signature.predicates
        },
    }


def presentation_from_json(obj: dict) -> AutomaticPresentation:
    try:
        alphabet = fa.Alphabet(tuple(obj["alphabet"]))
        signature = Signature(tuple((n, int(k)) for n, k in obj["signature"].items()))
        domain = fa.automaton_or_regex(obj["domain"], alphabet)
        relations = {
            name: fa.automaton_or_regex(value, alphabet)
            for name, value in obj["relations"].items()
        }
    except KeyError as missing:
        raise InputError(f"presentation object lacks field {missing}") from None
    return AutomaticPresentation(signature, alphabet, domain, relations)
