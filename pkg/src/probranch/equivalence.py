"""Deciders for strong, branching and rooted-branching probabilistic
bisimilarity, inertness classification, concreteness predicates and the
direct-matching preorder used by the conditional axioms.

Strategy.  All three relations are decided by partition refinement over
the joint derivative state set, with transfer conditions checked by
exact-rational linear feasibility:

* strong — a state pair survives iff every transition of one is matched
  by a combined transition of the other with the same class-mass vector.

* branching — silent transitions are classified inert or not, bottom-up
  by structural complexity (silent steps strictly lower complexity, so
  the classification is well-founded).  Firing inert transitions to
  exhaustion canonicalizes any distribution to a stable form; two
  distributions are related iff their stable forms have equal class
  masses.  The transfer check for a state pair then asks, per challenge,
  for a weak derivative of the responder that stabilizes onto the
  challenger's class, followed by a (possibly partial) step whose result
  stabilizes onto the challenge target's classes.  All of this is one
  linear feasibility problem over firing masses.

* rooted-branching — strong first step, branching continuations.

The classes of the final branching partition group states whose point
distributions are branching bisimilar; distribution-level equivalence
additionally identifies a point distribution with the mixture it
silently dissolves into, which the stable-form signature captures.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Optional

from .dist import Distribution, den, derivatives, dirac, distribution
from .lp import LP
from .parse import print_nd
from .rat import ONE, ZERO, format_rat
from .semantics import (
    StateTransition,
    add_flow_result,
    nd_transitions,
    state_targets,
)
from .terms import (
    Action,
    Dirac,
    NdTerm,
    PTerm,
    action_key,
    complexity,
    nd_key,
)


class ArgumentError(ValueError):
    """A transition passed to a classifier does not belong to the state."""


@dataclass(frozen=True)
class Partition:
    universe: frozenset
    classes: tuple  # tuple[frozenset, ...] canonically ordered

    def class_of(self, state: NdTerm) -> frozenset:
        for cls in self.classes:
            if state in cls:
                return cls
        raise KeyError(f"state not in partition universe: {state!r}")

    def index_of(self, state: NdTerm) -> int:
        for k, cls in enumerate(self.classes):
            if state in cls:
                return k
        raise KeyError(f"state not in partition universe: {state!r}")

    def sig(self, mu: Distribution) -> tuple:
        out = [ZERO] * len(self.classes)
        for t, m in mu.entries:
            out[self.index_of(t)] += m
        return tuple(out)


def partition_from_classes(classes: Iterable) -> Partition:
    canon = tuple(sorted((frozenset(c) for c in classes if c),
                         key=lambda c: min(nd_key(s) for s in c)))
    universe = frozenset().union(*canon) if canon else frozenset()
    return Partition(universe, canon)


def discrete_partition(states: Iterable[NdTerm]) -> Partition:
    return partition_from_classes([{s} for s in states])


@dataclass(frozen=True)
class Verdict:
    equivalent: bool
    relation: str
    witness: Optional[dict] = None

    def to_json(self) -> dict:
        out = {"equivalent": self.equivalent, "relation": self.relation}
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def _class_label(cls) -> str:
    return print_nd(min(cls, key=nd_key))


def _sig_dict(partition: Partition, sig: tuple) -> dict:
    return {
        _class_label(cls): format_rat(sig[k])
        for k, cls in enumerate(partition.classes)
        if sig[k] != ZERO
    }


# ---------------------------------------------------------------------------
# Classification tables: inert transitions and stable signatures


class _Tables:
    """Inertness classification and stable-form machinery for a fixed
    partition over a fixed state set."""

    def __init__(self, states, partition: Partition):
        self.states = tuple(sorted(states, key=lambda s: (complexity(s), nd_key(s))))
        self.partition = partition
        self.inert: dict = {}
        self.unstable: set = set()
        self.stabsig_state: dict = {}
        self._stable_cache: dict = {}
        self._lp_cache: dict = {}
        self._classify()

    # -- plain signatures

    def sig_of(self, mu: Distribution) -> tuple:
        return self.partition.sig(mu)

    def unit_sig(self, state: NdTerm) -> tuple:
        out = [ZERO] * len(self.partition.classes)
        out[self.partition.index_of(state)] = ONE
        return tuple(out)

    # -- stable forms: fire inert transitions to exhaustion

    def stable_form(self, mu: Distribution) -> Distribution:
        cached = self._stable_cache.get(mu)
        if cached is not None:
            return cached
        work = {t: m for t, m in mu.entries}
        while True:
            movers = [s for s in work if s in self.unstable]
            if not movers:
                break
            state = min(movers, key=nd_key)
            idx = self.inert[state][0]
            target = nd_transitions(state)[idx].target
            mass = work.pop(state)
            for t, q in target.entries:
                work[t] = work.get(t, ZERO) + mass * q
        out = distribution(work)
        self._stable_cache[mu] = out
        return out

    def stab_sig(self, mu: Distribution) -> tuple:
        return self.sig_of(self.stable_form(mu))

    def inert_transitions(self, states) -> tuple:
        out = []
        for s in sorted(states, key=nd_key):
            for idx in self.inert.get(s, ()):
                out.append((s, idx, nd_transitions(s)[idx].target))
        return tuple(out)

    def tau_transitions(self, states) -> tuple:
        out = []
        for s in sorted(states, key=nd_key):
            for idx, tr in enumerate(nd_transitions(s)):
                if tr.action.is_tau:
                    out.append((s, idx, tr.target))
        return tuple(out)

    # -- inertness classification, bottom-up in complexity

    def _classify(self):
        for state in self.states:
            trs = nd_transitions(state)
            inert_idxs = []
            for idx, tr in enumerate(trs):
                if tr.action.is_tau and self._is_inert(state, tr.target, trs):
                    inert_idxs.append(idx)
            self.inert[state] = tuple(inert_idxs)
            if inert_idxs:
                self.unstable.add(state)
                first = nd_transitions(state)[inert_idxs[0]].target
                self.stabsig_state[state] = self.stab_sig(first)
            else:
                self.stabsig_state[state] = self.unit_sig(state)

    def _is_inert(self, state, rho, challenges) -> bool:
        """Is the silent move from `state` to `rho` equivalence-preserving?

        Point mass on `state` and `rho` must be branching bisimilar: the
        challenges of `state` must be answerable from `rho`.  (The reverse
        challenges are answered by the state silently dissolving into rho
        first.)  Only strictly lower-complexity classification is needed.
        """
        rho_sig = self.stab_sig(rho)
        for tr in challenges:
            if tr.action.is_tau and tr.target == rho:
                continue  # answered by rho staying put
            if not self.transfer_feasible(
                    rho, tr.action, self.stab_sig(tr.target),
                    weak_first=True, mid_sig=rho_sig, stabilize_end=True):
                return False
        return True

    # -- the transfer feasibility LP

    def transfer_feasible(self, start: Distribution, action: Action,
                          end_sig: tuple, *, weak_first: bool,
                          mid_sig: Optional[tuple], stabilize_end: bool,
                          full_step: bool = False) -> bool:
        """full_step forces a complete combined transition even for the
        silent action (the rooted first-step reading); otherwise a silent
        step may move any fraction, including none."""
        key = (start, action, end_sig, weak_first, mid_sig, stabilize_end,
               full_step)
        hit = self._lp_cache.get(key)
        if hit is not None:
            return hit
        out = self._transfer_lp(start, action, end_sig, weak_first=weak_first,
                                mid_sig=mid_sig, stabilize_end=stabilize_end,
                                full_step=full_step)
        self._lp_cache[key] = out
        return out

    def _reach(self, mu: Distribution):
        return tuple(sorted(set().union(*(derivatives(s) for s in mu.support)),
                            key=nd_key))

    def _transfer_lp(self, start, action, end_sig, *, weak_first, mid_sig,
                     stabilize_end, full_step=False) -> bool:
        states = self._reach(start)
        lp = LP()
        taus = self.tau_transitions(states) if weak_first else ()
        nubar = add_flow_result(lp, "w", dict(start.entries), states, taus)

        if mid_sig is not None:
            omid = add_flow_result(lp, "m", {s: ("w", "m", s) for s in states},
                                   states, self.inert_transitions(states))
            self._require_stable_sig(lp, omid, states, mid_sig)

        nu2 = self._step_stage(lp, nubar, states, action, full_step=full_step)

        if stabilize_end:
            oend = add_flow_result(lp, "e", {s: ("s", "m", s) for s in states},
                                   states, self.inert_transitions(states))
            self._require_stable_sig(lp, oend, states, end_sig)
        else:
            self._require_sig(lp, nu2, states, end_sig)
        return lp.feasible() is not None

    def _step_stage(self, lp: LP, nubar: dict, states, action: Action,
                    full_step: bool = False) -> dict:
        """One action step from the stage-1 masses: a full combined step
        for a visible action (or when forced), a partial and possibly
        trivial step for tau."""
        partial = action.is_tau and not full_step
        result = {}
        moves = {
            s: [(i, tr.target) for i, tr in enumerate(nd_transitions(s))
                if tr.action == action]
            for s in states
        }
        for s in states:
            for i, _ in moves[s]:
                lp.var(("y", s, i))
        for s in states:
            coeffs = {("y", s, i): ONE for i, _ in moves[s]}
            coeffs[nubar[s]] = coeffs.get(nubar[s], ZERO) - ONE
            if partial:
                lp.add_le(coeffs, ZERO)  # may move any fraction
            else:
                lp.add_eq(coeffs, ZERO)  # must move everything
        for s in states:
            v = lp.var(("s", "m", s))
            result[s] = v
            coeffs = {v: ONE}
            if partial:
                coeffs[nubar[s]] = coeffs.get(nubar[s], ZERO) - ONE
                for i, _ in moves[s]:
                    coeffs[("y", s, i)] = coeffs.get(("y", s, i), ZERO) + ONE
            for src in states:
                for i, target in moves[src]:
                    m = target.mass(s)
                    if m != ZERO:
                        coeffs[("y", src, i)] = coeffs.get(("y", src, i), ZERO) - m
            lp.add_eq(coeffs, ZERO)
        return result

    def _require_sig(self, lp: LP, masses: dict, states, sig: tuple):
        for k, cls in enumerate(self.partition.classes):
            members = [s for s in states if s in cls]
            lp.add_eq({masses[s]: ONE for s in members}, sig[k])

    def _require_stable_sig(self, lp: LP, masses: dict, states, sig: tuple):
        for s in states:
            if s in self.unstable:
                lp.add_eq({masses[s]: ONE}, ZERO)
        self._require_sig(lp, masses, states, sig)


# ---------------------------------------------------------------------------
# Branching analysis: refinement to the coarsest self-consistent partition


@dataclass
class BranchingAnalysis:
    partition: Partition
    tables: _Tables
    split_trace: tuple

    def stab_sig(self, mu: Distribution) -> tuple:
        return self.tables.stab_sig(mu)

    def stable_form(self, mu: Distribution) -> Distribution:
        return self.tables.stable_form(mu)

    def equivalent(self, mu: Distribution, nu: Distribution) -> bool:
        return self.stab_sig(mu) == self.stab_sig(nu)

    def state_equivalent(self, e: NdTerm, f: NdTerm) -> bool:
        return self.partition.class_of(e) is self.partition.class_of(f)


def _sig_sort_key(sig):
    if sig is None:
        return ()
    return tuple((m.numerator, m.denominator) for m in sig)


def _refine(check, initial: Partition):
    """Generic signature-refinement loop.

    Per round, each class collects its members' challenges (action plus
    required continuation signature) and mid signatures, and every member
    is profiled by which (challenge, mid) combinations it can answer.
    Members with identical profiles stay together.  A state always
    answers its own challenges, so equal profiles imply the mutual
    transfer condition; grouping by profile is order-independent.
    """
    partition = initial
    trace = []
    while True:
        ctx = check.context(partition)
        new_classes = []
        changed = False
        for cls in partition.classes:
            if len(cls) == 1:
                new_classes.append(cls)
                continue
            members = sorted(cls, key=nd_key)
            pool = sorted(
                {(tr.action, check.challenge_sig(ctx, tr.target))
                 for m in members for tr in nd_transitions(m)},
                key=lambda c: (action_key(c[0]), _sig_sort_key(c[1])))
            mids = sorted({check.mid_of(ctx, m) for m in members},
                          key=_sig_sort_key)
            profiles: dict = {}
            for m in members:
                answered = frozenset(
                    (action, end, mid)
                    for action, end in pool for mid in mids
                    if check.respond(ctx, m, action, end, mid))
                key = (check.mid_of(ctx, m), answered)
                profiles.setdefault(key, []).append(m)
            if len(profiles) > 1:
                changed = True
                keys = sorted(profiles, key=lambda k: nd_key(profiles[k][0]))
                base = keys[0]
                for other in keys[1:]:
                    diff = (base[1] ^ other[1]) or {(a, e, None)
                                                   for a, e in pool}
                    action = sorted(diff, key=lambda d: action_key(d[0]))[0][0]
                    trace.append({
                        "class": _class_label(cls),
                        "action": action.name,
                        "left": print_nd(profiles[base][0]),
                        "right": print_nd(profiles[other][0]),
                    })
            new_classes.extend(frozenset(g) for g in profiles.values())
        if not changed:
            return partition, ctx, tuple(trace)
        partition = partition_from_classes(new_classes)


class _BranchingCheck:
    def context(self, partition: Partition) -> _Tables:
        return _Tables(partition.universe, partition)

    def challenge_sig(self, tables: _Tables, target: Distribution):
        return tables.stab_sig(target)

    def mid_of(self, tables: _Tables, state: NdTerm):
        return tables.stabsig_state[state]

    def respond(self, tables: _Tables, state, action, end_sig, mid):
        return tables.transfer_feasible(
            dirac(state), action, end_sig,
            weak_first=True, mid_sig=mid, stabilize_end=True)


@lru_cache(maxsize=512)
def _branching_analysis(roots: frozenset) -> BranchingAnalysis:
    states = frozenset().union(*(derivatives(r) for r in roots)) if roots else frozenset()
    initial = partition_from_classes([states]) if states else Partition(frozenset(), ())
    partition, tables, trace = _refine(_BranchingCheck(), initial)
    return BranchingAnalysis(partition, tables, trace)


def branching_analysis(roots: Iterable[NdTerm]) -> BranchingAnalysis:
    return _branching_analysis(frozenset(roots))


def branching_partition(roots: Iterable[NdTerm]) -> Partition:
    """Coarsest self-consistent branching partition of the derivative set."""
    return branching_analysis(roots).partition


def _support_roots(*dists: Distribution) -> frozenset:
    out = set()
    for d in dists:
        out.update(d.support)
    return frozenset(out)


def _mismatch_witness(analysis: BranchingAnalysis, left_sig, right_sig,
                      action_path=()) -> dict:
    partition = analysis.partition
    return {
        "action_path": list(action_path),
        "class_signature_left": _sig_dict(partition, left_sig),
        "class_signature_right": _sig_dict(partition, right_sig),
    }


def branching_equiv(mu: Distribution, nu: Distribution) -> Verdict:
    """Branching probabilistic bisimilarity of two distributions: equal
    class masses of their stable forms."""
    analysis = branching_analysis(_support_roots(mu, nu))
    left = analysis.stab_sig(mu)
    right = analysis.stab_sig(nu)
    if left == right:
        return Verdict(True, "branching")
    path = [analysis.split_trace[-1]["action"]] if analysis.split_trace else []
    return Verdict(False, "branching",
                   _mismatch_witness(analysis, left, right, path))


# ---------------------------------------------------------------------------
# Strong bisimilarity


class _StrongCheck:
    def context(self, partition: Partition):
        return partition

    def challenge_sig(self, partition: Partition, target: Distribution):
        return partition.sig(target)

    def mid_of(self, partition: Partition, state: NdTerm):
        return None

    def respond(self, partition: Partition, state, action, end_sig, mid):
        return _strong_match(partition, state, action, end_sig)


@lru_cache(maxsize=100000)
def _strong_match(partition: Partition, responder: NdTerm,
                  action: Action, sig: tuple) -> bool:
    """Some combined action-step of the responder hits the signature."""
    targets = state_targets(responder, action)
    if not targets:
        return False
    lp = LP()
    for i, _ in enumerate(targets):
        lp.var(("x", i))
    lp.add_eq({("x", i): ONE for i in range(len(targets))}, ONE)
    for k, cls in enumerate(partition.classes):
        coeffs = {}
        for i, g in enumerate(targets):
            m = g.class_mass(cls)
            if m != ZERO:
                coeffs[("x", i)] = m
        lp.add_eq(coeffs, sig[k])
    return lp.feasible() is not None


@lru_cache(maxsize=512)
def _strong_setup(roots: frozenset):
    states = frozenset().union(*(derivatives(r) for r in roots)) if roots else frozenset()
    initial = partition_from_classes([states]) if states else Partition(frozenset(), ())
    partition, _, trace = _refine(_StrongCheck(), initial)
    return partition, trace


def strong_partition(roots: Iterable[NdTerm]) -> Partition:
    """Coarsest strong-bisimulation partition of the joint derivative set."""
    return _strong_setup(frozenset(roots))[0]


def strong_equiv(mu: Distribution, nu: Distribution) -> Verdict:
    """Strong probabilistic bisimilarity: equal class masses per strong class."""
    partition, trace = _strong_setup(_support_roots(mu, nu))
    left, right = partition.sig(mu), partition.sig(nu)
    if left == right:
        return Verdict(True, "strong")
    witness = {
        "action_path": [trace[-1]["action"]] if trace else [],
        "class_signature_left": _sig_dict(partition, left),
        "class_signature_right": _sig_dict(partition, right),
    }
    return Verdict(False, "strong", witness)


# ---------------------------------------------------------------------------
# Rooted branching bisimilarity


def _rooted_pair_ok(analysis: BranchingAnalysis, e: NdTerm, f: NdTerm):
    """Strong first step with branching continuations, both directions."""
    tables = analysis.tables
    for challenger, responder in ((e, f), (f, e)):
        for tr in nd_transitions(challenger):
            ok = tables.transfer_feasible(
                dirac(responder), tr.action, tables.stab_sig(tr.target),
                weak_first=False, mid_sig=None, stabilize_end=True,
                full_step=True)
            if not ok:
                return challenger, tr.action
    return None


def rooted_branching_equiv_states(e: NdTerm, f: NdTerm) -> Verdict:
    """Rooted branching bisimilarity of two states."""
    analysis = branching_analysis(frozenset({e, f}))
    failure = _rooted_pair_ok(analysis, e, f)
    if failure is None:
        return Verdict(True, "rooted-branching")
    witness = {
        "action_path": [failure[1].name],
        "class_signature_left": _sig_dict(
            analysis.partition, analysis.stab_sig(dirac(e))),
        "class_signature_right": _sig_dict(
            analysis.partition, analysis.stab_sig(dirac(f))),
    }
    return Verdict(False, "rooted-branching", witness)


def rooted_partition_over(analysis: BranchingAnalysis,
                          states: Iterable[NdTerm]) -> Partition:
    """Rooted-branching state classes restricted to the given states.

    Rooted refines branching, so members of each branching class are
    grouped by the set of first-step challenges they can answer; a state
    answers its own challenges, so equal profiles give mutual matching.
    """
    tables = analysis.tables
    by_class: dict = {}
    for s in set(states):
        by_class.setdefault(analysis.partition.class_of(s), []).append(s)
    groups = []
    for _, members in sorted(by_class.items(),
                             key=lambda kv: min(nd_key(s) for s in kv[1])):
        pool = sorted(
            {(tr.action, tables.stab_sig(tr.target))
             for m in members for tr in nd_transitions(m)},
            key=lambda c: (action_key(c[0]), _sig_sort_key(c[1])))
        profiles: dict = {}
        for m in members:
            answered = frozenset(
                (action, end) for action, end in pool
                if tables.transfer_feasible(
                    dirac(m), action, end,
                    weak_first=False, mid_sig=None, stabilize_end=True,
                    full_step=True))
            profiles.setdefault(answered, []).append(m)
        groups.extend(profiles.values())
    return partition_from_classes(groups)


def rooted_branching_equiv(p, q) -> Verdict:
    """Rooted branching bisimilarity of two probabilistic terms or
    distributions: equal mass per rooted-branching state class."""
    mu = den(p) if isinstance(p, PTerm) else p
    nu = den(q) if isinstance(q, PTerm) else q
    analysis = branching_analysis(_support_roots(mu, nu))
    partition = rooted_partition_over(analysis, set(mu.support) | set(nu.support))
    left, right = partition.sig(mu), partition.sig(nu)
    if left == right:
        return Verdict(True, "rooted-branching")
    k = next(i for i in range(len(left)) if left[i] != right[i])
    witness = {
        "action_path": [],
        "class": _class_label(partition.classes[k]),
        "class_signature_left": _sig_dict(partition, left),
        "class_signature_right": _sig_dict(partition, right),
    }
    return Verdict(False, "rooted-branching", witness)


def check(relation: str, left, right) -> Verdict:
    """Dispatch a named relation over terms of either sort."""
    as_dist = lambda t: den(t) if isinstance(t, PTerm) else dirac(t)
    if relation == "strong":
        return strong_equiv(as_dist(left), as_dist(right))
    if relation == "branching":
        return branching_equiv(as_dist(left), as_dist(right))
    if relation == "rooted-branching":
        if isinstance(left, NdTerm) and isinstance(right, NdTerm):
            return rooted_branching_equiv_states(left, right)
        return rooted_branching_equiv(as_dist(left), as_dist(right))
    raise ValueError(f"unknown relation: {relation!r}")


# ---------------------------------------------------------------------------
# Inertness, concreteness, rigidity, and the matching preorder


INERT = "inert"
PARTIALLY_INERT = "partially_inert"
NEITHER = "neither"


@dataclass(frozen=True)
class InertnessResult:
    kind: str
    fraction: object = None  # maximal equivalent fraction for partial inertness


def _tables_for(partition: Partition, extra_states: Iterable[NdTerm]) -> _Tables:
    states = set(partition.universe)
    for s in extra_states:
        states |= derivatives(s)
    covered = set(partition.universe)
    classes = list(partition.classes)
    classes.extend(frozenset({s}) for s in sorted(states - covered, key=nd_key))
    return _Tables(states, partition_from_classes(classes))


def inertness(state: NdTerm, transition: StateTransition,
              partition: Partition) -> InertnessResult:
    """Classify a silent transition relative to a candidate partition.

    inert: the target stabilizes onto the same signature as the source
    point mass.  partially inert: a maximal fraction r in (0,1] of the
    target is equivalent to the source; the canonical split puts the
    support states of the source's class on the equivalent side.
    """
    if transition.source != state or not transition.action.is_tau:
        raise ArgumentError("expected a silent transition of the given state")
    if transition not in nd_transitions(state):
        raise ArgumentError("transition is not derivable from the state")
    tables = _tables_for(partition, [state])
    target = transition.target
    source_sig = tables.stabsig_state[state]
    if tables.stab_sig(target) == source_sig:
        return InertnessResult(INERT, ONE)
    r = _max_equivalent_fraction(tables, target, source_sig)
    if r > ZERO:
        return InertnessResult(PARTIALLY_INERT, r)
    return InertnessResult(NEITHER)


def _max_equivalent_fraction(tables: _Tables, mu: Distribution,
                             ref_sig: tuple):
    """Largest r such that mu = r*mu1 (+) (1-r)*mu2 with mu1 stabilizing
    onto ref_sig.  Stabilization scales linearly, so this is one LP."""
    states = tables._reach(mu)
    lp = LP()
    part = {}
    for s in states:
        part[s] = lp.var(("p", s))
        lp.add_le({part[s]: ONE}, mu.mass(s))
    omega = add_flow_result(lp, "q", {s: ("p", s) for s in states},
                            states, tables.inert_transitions(states))
    for s in states:
        if s in tables.unstable:
            lp.add_eq({omega[s]: ONE}, ZERO)
    for k, cls in enumerate(tables.partition.classes):
        coeffs = {omega[s]: ONE for s in states if s in cls}
        for s in states:
            if ref_sig[k] != ZERO:
                coeffs[part[s]] = coeffs.get(part[s], ZERO) - ref_sig[k]
        lp.add_eq(coeffs, ZERO)
    sol = lp.maximize({part[s]: ONE for s in states})
    return sol["__value__"] if sol else ZERO


def is_rigid(state: NdTerm) -> bool:
    """No fully inert silent transition."""
    analysis = branching_analysis(frozenset({state}))
    tables = analysis.tables
    src = tables.stabsig_state[state]
    for tr in nd_transitions(state):
        if tr.action.is_tau and tables.stab_sig(tr.target) == src:
            return False
    return True


def is_concrete(p) -> bool:
    """No derivative can perform an even partially inert silent transition."""
    roots = derivatives(p if isinstance(p, PTerm) else Dirac(p))
    analysis = branching_analysis(roots)
    tables = analysis.tables
    for state in roots:
        for tr in nd_transitions(state):
            if not tr.action.is_tau:
                continue
            ref = tables.stabsig_state[state]
            if tables.stab_sig(tr.target) == ref:
                return False
            if _max_equivalent_fraction(tables, tr.target, ref) > ZERO:
                return False
    return True


def sqsubseteq(state: NdTerm, p: PTerm) -> bool:
    """Every transition of the state is directly matched by the
    probabilistic term: for each E -a-> mu there is den(P) -(a)-> nu with
    mu and nu branching bisimilar.  The silent case may move only part of
    den(P) (or nothing); a visible step is a full combined transition."""
    target = den(p)
    analysis = branching_analysis(frozenset({state}) | frozenset(target.support))
    tables = analysis.tables
    for tr in nd_transitions(state):
        ok = tables.transfer_feasible(
            target, tr.action, tables.stab_sig(tr.target),
            weak_first=False, mid_sig=None, stabilize_end=True)
        if not ok:
            return False
    return True
