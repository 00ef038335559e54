"""The equational theories as an executable rewriting system.

Axioms (unconditional unless noted):

    A1  E + F = F + E                    P1  P (+r) Q = Q (+1-r) P
    A2  (E + F) + G = E + (F + G)        P2  P (+r) (Q (+s) R) =
    A3  E + E = E                              (P (+rb) Q) (+sb) R
    A4  E + 0 = E                                 rb*sb = r, (1-r)(1-s) = 1-sb
    B   a.(F + tau.(E + F)) = a.(E + F)  P3  P (+r) P = P
        (pure non-deterministic fragment only)
    C   a.P + a.Q = a.P + a.(P (+r) Q) + a.Q
    BP  if E matched-by P:   a.(D(E + tau.P) (+r) Q) = a.(P (+r) Q)
    G   if E matched-by D(F): a.(D(E + F) (+r) Q) = a.(D(F) (+r) Q)

plus the derived laws SBP1..SBP3 (simplified BP forms).  Every rewrite
is recorded as a replayable step: axiom, position, direction, full
metavariable substitution and, for conditional axioms, the side
condition witness.  Side conditions are re-verified on every
application through the semantic checker.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from typing import Optional

from .dist import den, derivatives, dirac
from .equivalence import (
    branching_analysis,
    branching_equiv,
    check as relation_check,
    rooted_partition_over,
    sqsubseteq,
    strong_partition,
)
from .lp import LP
from .parse import print_term
from .rat import ONE, ZERO, format_rat, rat
from .terms import (
    Action,
    Dirac,
    NdTerm,
    PChoice,
    Prefix,
    PTerm,
    Sum,
    TAU,
    Zero,
    ZERO_TERM,
    complexity,
    is_nd_fragment,
    nd_key,
    p_key,
    summands,
)


class PositionError(ValueError):
    """A step's position does not exist in the term."""


class SubstitutionError(ValueError):
    """The subterm at the position does not match the axiom instance."""


class SideConditionError(ValueError):
    """A conditional axiom's side condition fails."""


class ShapeError(ValueError):
    """A term does not have the shape a derived law requires."""


class FragmentError(ValueError):
    """An operation restricted to the non-deterministic fragment was
    applied outside it."""


class BudgetExceededError(RuntimeError):
    """The prover ran out of its step budget (a resource condition, never
    a verdict)."""


class AxiomId(str, Enum):
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    A4 = "A4"
    B = "B"
    P1 = "P1"
    P2 = "P2"
    P3 = "P3"
    C = "C"
    BP = "BP"
    G = "G"
    SBP1 = "SBP1"
    SBP2 = "SBP2"
    SBP3 = "SBP3"


@dataclass(frozen=True)
class RewriteStep:
    axiom: AxiomId
    position: tuple
    direction: str  # "LR" | "RL"
    substitution: tuple  # sorted ((name, value), ...)
    witness: Optional[dict] = None

    @property
    def side_condition_witness(self):
        return self.witness

    def subst(self) -> dict:
        return dict(self.substitution)

    def to_json(self, index: int, before, after) -> dict:
        out = {
            "index": index,
            "rule": self.axiom.value,
            "direction": self.direction,
            "position": list(self.position),
            "before": print_term(before),
            "after": print_term(after),
        }
        if self.witness is not None:
            out["witness"] = self.witness
        return out


def _subst_value_str(value) -> str:
    if isinstance(value, (NdTerm, PTerm)):
        return print_term(value)
    if isinstance(value, Action):
        return value.name
    return format_rat(value)


@dataclass(frozen=True)
class ProofTrace:
    start: object
    steps: tuple
    end: object

    def replay(self):
        """Re-apply every step; returns the end term, raising if any step
        fails to apply or the result disagrees."""
        term = self.start
        for step in self.steps:
            term = apply_axiom(term, step)
        if term != self.end:
            raise ValueError("trace does not replay to its end term")
        return term

    def to_jsonl(self) -> str:
        lines = []
        term = self.start
        for i, step in enumerate(self.steps):
            after = apply_axiom(term, step)
            lines.append(json.dumps(step.to_json(i, term, after)))
            term = after
        return "\n".join(lines)

    def rule_multiset(self) -> dict:
        out: dict = {}
        for step in self.steps:
            out[step.axiom.value] = out.get(step.axiom.value, 0) + 1
        return out


# ---------------------------------------------------------------------------
# Positions


def get_subterm(term, position: tuple):
    node = term
    for i in position:
        if isinstance(node, Sum) and i in (0, 1):
            node = node.left if i == 0 else node.right
        elif isinstance(node, PChoice) and i in (0, 1):
            node = node.left if i == 0 else node.right
        elif isinstance(node, Prefix) and i == 0:
            node = node.body
        elif isinstance(node, Dirac) and i == 0:
            node = node.body
        else:
            raise PositionError(f"no child {i} at {node!r}")
    return node


def replace_subterm(term, position: tuple, new):
    if not position:
        return new
    i, rest = position[0], position[1:]
    if isinstance(term, Sum) and i == 0:
        return Sum(replace_subterm(term.left, rest, new), term.right)
    if isinstance(term, Sum) and i == 1:
        return Sum(term.left, replace_subterm(term.right, rest, new))
    if isinstance(term, PChoice) and i == 0:
        return PChoice(replace_subterm(term.left, rest, new), term.weight,
                       term.right)
    if isinstance(term, PChoice) and i == 1:
        return PChoice(term.left, term.weight,
                       replace_subterm(term.right, rest, new))
    if isinstance(term, Prefix) and i == 0:
        return Prefix(term.action, replace_subterm(term.body, rest, new))
    if isinstance(term, Dirac) and i == 0:
        return Dirac(replace_subterm(term.body, rest, new))
    raise PositionError(f"no child {i} at {term!r}")


# ---------------------------------------------------------------------------
# Axiom schemas


def _p2_derived(sub: dict) -> dict:
    """Complete a P2 substitution: (r, s) <-> (rbar, sbar)."""
    out = dict(sub)
    if "r" in out and "s" in out:
        r, s = out["r"], out["s"]
        sbar = ONE - (ONE - r) * (ONE - s)
        rbar = r / sbar
        out.setdefault("rbar", rbar)
        out.setdefault("sbar", sbar)
        if out["rbar"] != rbar or out["sbar"] != sbar:
            raise SubstitutionError("inconsistent P2 re-weighting parameters")
    elif "rbar" in out and "sbar" in out:
        rbar, sbar = out["rbar"], out["sbar"]
        r = rbar * sbar
        if r == ONE:
            raise SubstitutionError("degenerate P2 parameters")
        s = ONE - (ONE - sbar) / (ONE - r)
        out["r"] = r
        out["s"] = s
    else:
        raise SubstitutionError("P2 requires (r, s) or (rbar, sbar)")
    return out


def _axiom_sides(axiom: AxiomId, sub: dict):
    """Concrete (lhs, rhs) instance of the axiom under a substitution."""
    try:
        if axiom == AxiomId.A1:
            return Sum(sub["E"], sub["F"]), Sum(sub["F"], sub["E"])
        if axiom == AxiomId.A2:
            e, f, g = sub["E"], sub["F"], sub["G"]
            return Sum(Sum(e, f), g), Sum(e, Sum(f, g))
        if axiom == AxiomId.A3:
            return Sum(sub["E"], sub["E"]), sub["E"]
        if axiom == AxiomId.A4:
            return Sum(sub["E"], ZERO_TERM), sub["E"]
        if axiom == AxiomId.B:
            a, e, f = sub["alpha"], sub["E"], sub["F"]
            lhs = Prefix(a, Dirac(Sum(f, Prefix(TAU, Dirac(Sum(e, f))))))
            rhs = Prefix(a, Dirac(Sum(e, f)))
            return lhs, rhs
        if axiom == AxiomId.P1:
            p, q, r = sub["P"], sub["Q"], sub["r"]
            return PChoice(p, r, q), PChoice(q, ONE - r, p)
        if axiom == AxiomId.P2:
            sub = _p2_derived(sub)
            p, q, r3 = sub["P"], sub["Q"], sub["R"]
            lhs = PChoice(p, sub["r"], PChoice(q, sub["s"], r3))
            rhs = PChoice(PChoice(p, sub["rbar"], q), sub["sbar"], r3)
            return lhs, rhs
        if axiom == AxiomId.P3:
            return PChoice(sub["P"], sub["r"], sub["P"]), sub["P"]
        if axiom == AxiomId.C:
            a, p, q, r = sub["alpha"], sub["P"], sub["Q"], sub["r"]
            lhs = Sum(Prefix(a, p), Prefix(a, q))
            rhs = Sum(Sum(Prefix(a, p), Prefix(a, PChoice(p, r, q))),
                      Prefix(a, q))
            return lhs, rhs
        if axiom == AxiomId.BP:
            a, e, p, q, r = sub["alpha"], sub["E"], sub["P"], sub["Q"], sub["r"]
            lhs = Prefix(a, PChoice(Dirac(Sum(e, Prefix(TAU, p))), r, q))
            rhs = Prefix(a, PChoice(p, r, q))
            return lhs, rhs
        if axiom == AxiomId.G:
            a, e, f, q, r = sub["alpha"], sub["E"], sub["F"], sub["Q"], sub["r"]
            lhs = Prefix(a, PChoice(Dirac(Sum(e, f)), r, q))
            rhs = Prefix(a, PChoice(Dirac(f), r, q))
            return lhs, rhs
        if axiom == AxiomId.SBP1:
            a, e, p = sub["alpha"], sub["E"], sub["P"]
            return Prefix(a, Dirac(Sum(e, Prefix(TAU, p)))), Prefix(a, p)
        if axiom == AxiomId.SBP2:
            a, p, r2, r = sub["alpha"], sub["P"], sub["R"], sub["r"]
            lhs = Prefix(a, PChoice(Dirac(Prefix(TAU, p)), r, r2))
            rhs = Prefix(a, PChoice(p, r, r2))
            return lhs, rhs
        if axiom == AxiomId.SBP3:
            a, p = sub["alpha"], sub["P"]
            return Prefix(a, Dirac(Prefix(TAU, p))), Prefix(a, p)
    except KeyError as missing:
        raise SubstitutionError(f"missing metavariable {missing}") from None
    raise SubstitutionError(f"unknown axiom {axiom}")


def _verify_side_condition(axiom: AxiomId, sub: dict, instance):
    if axiom in (AxiomId.BP, AxiomId.SBP1):
        if not sqsubseteq(sub["E"], sub["P"]):
            raise SideConditionError(
                f"{axiom.value}: E is not directly matched by P")
    elif axiom == AxiomId.G:
        if not sqsubseteq(sub["E"], Dirac(sub["F"])):
            raise SideConditionError("G: E is not directly matched by D(F)")
    elif axiom == AxiomId.B:
        if not (is_nd_fragment(sub["E"]) and is_nd_fragment(sub["F"])):
            raise FragmentError(
                "B applies only in the pure non-deterministic fragment")
    elif axiom in (AxiomId.C, AxiomId.P3):
        r = sub["r"]
        if not (ZERO < r < ONE):
            raise SideConditionError(f"{axiom.value}: weight {r} outside (0,1)")


def _side_condition_witness(axiom: AxiomId, sub: dict) -> Optional[dict]:
    if axiom in (AxiomId.BP, AxiomId.SBP1):
        return {"matched_by": {"state": print_term(sub["E"]),
                               "process": print_term(sub["P"])}}
    if axiom == AxiomId.G:
        return {"matched_by": {"state": print_term(sub["E"]),
                               "process": print_term(Dirac(sub["F"]))}}
    if axiom == AxiomId.C:
        return {"mixture_weight": format_rat(sub["r"])}
    return None


def apply_axiom(term, step: RewriteStep):
    """Apply one recorded rewrite step, re-verifying position, matching
    and side conditions."""
    sub = step.subst()
    if step.axiom == AxiomId.P2:
        sub = _p2_derived(sub)
    lhs, rhs = _axiom_sides(step.axiom, sub)
    src, dst = (lhs, rhs) if step.direction == "LR" else (rhs, lhs)
    actual = get_subterm(term, step.position)
    if actual != src:
        raise SubstitutionError(
            f"{step.axiom.value} {step.direction} does not match at "
            f"{step.position}: expected {print_term(src)}, "
            f"found {print_term(actual)}")
    _verify_side_condition(step.axiom, sub, actual)
    return replace_subterm(term, step.position, dst)


# ---------------------------------------------------------------------------
# Step-emitting rewriter and the chain/spine toolkits


class _Budget:
    def __init__(self, limit: int):
        self.limit = limit
        self.used = 0

    def spend(self, n: int = 1):
        self.used += n
        if self.used > self.limit:
            raise BudgetExceededError(
                f"step budget of {self.limit} exhausted")


class _Rewriter:
    """Holds a working term plus the steps that produced it.  Every step
    is routed through apply_axiom, so emitted traces replay by
    construction."""

    def __init__(self, term, budget: _Budget):
        self.term = term
        self.steps: list = []
        self.budget = budget

    def at(self, position):
        return get_subterm(self.term, position)

    def apply(self, axiom: AxiomId, position, direction: str, sub: dict):
        if axiom == AxiomId.P2:
            sub = _p2_derived(sub)
        step = RewriteStep(axiom, tuple(position), direction,
                           tuple(sorted(sub.items())),
                           _side_condition_witness(axiom, sub))
        self.term = apply_axiom(self.term, step)
        self.steps.append(step)
        self.budget.spend()

    def splice(self, position, steps):
        """Apply steps produced for the subterm rooted at `position`."""
        for step in steps:
            shifted = RewriteStep(step.axiom, tuple(position) + step.position,
                                  step.direction, step.substitution,
                                  step.witness)
            self.term = apply_axiom(self.term, shifted)
            self.steps.append(shifted)
            self.budget.spend()


def invert_steps(steps):
    flipped = []
    for step in reversed(steps):
        flipped.append(RewriteStep(
            step.axiom, step.position,
            "RL" if step.direction == "LR" else "LR",
            step.substitution, step.witness))
    return flipped


# -- non-deterministic chains (left-nested sums)


def _chain_items(term) -> list:
    return summands(term)


def _left_assoc(rw: _Rewriter, pos):
    """Reassociate the sum at pos into left-nested form."""
    while True:
        node = rw.at(pos)
        if not isinstance(node, Sum):
            return
        while isinstance(rw.at(pos).right, Sum):
            node = rw.at(pos)
            rw.apply(AxiomId.A2, pos, "RL", {
                "E": node.left, "F": node.right.left, "G": node.right.right})
        pos = list(pos) + [0]


def _right_assoc_nd(rw: _Rewriter, pos):
    """Reassociate the sum at pos into right-nested form."""
    while isinstance(rw.at(pos), Sum) and isinstance(rw.at(pos).left, Sum):
        node = rw.at(pos)
        rw.apply(AxiomId.A2, pos, "LR", {
            "E": node.left.left, "F": node.left.right, "G": node.right})
    node = rw.at(pos)
    if isinstance(node, Sum):
        _right_assoc_nd(rw, list(pos) + [1])


def _chain_node_pos(base, n: int, j: int) -> list:
    """Position of the sum node whose right child is element j (1<=j<n)
    of a left-nested n-element chain."""
    return list(base) + [0] * (n - 1 - j)


def _chain_elem_pos(base, n: int, j: int) -> list:
    """Position of element j (0-based) of a left-nested n-element chain."""
    if n == 1:
        return list(base)
    if j == 0:
        return list(base) + [0] * (n - 1)
    return list(base) + [0] * (n - 1 - j) + [1]


def _chain_swap(rw: _Rewriter, base, n: int, i: int):
    """Swap chain elements i and i+1 (0-based) in a left-nested chain."""
    node_pos = _chain_node_pos(base, n, i + 1)
    node = rw.at(node_pos)
    if i == 0:
        rw.apply(AxiomId.A1, node_pos, "LR",
                 {"E": node.left, "F": node.right})
        return
    rw.apply(AxiomId.A2, node_pos, "LR", {
        "E": node.left.left, "F": node.left.right, "G": node.right})
    inner = rw.at(list(node_pos) + [1])
    rw.apply(AxiomId.A1, list(node_pos) + [1], "LR",
             {"E": inner.left, "F": inner.right})
    node = rw.at(node_pos)
    rw.apply(AxiomId.A2, node_pos, "RL", {
        "E": node.left, "F": node.right.left, "G": node.right.right})


def _chain_move(rw: _Rewriter, base, n: int, src: int, dst: int):
    """Move element src to index dst by adjacent swaps."""
    i = src
    while i > dst:
        _chain_swap(rw, base, n, i - 1)
        i -= 1
    while i < dst:
        _chain_swap(rw, base, n, i)
        i += 1


def _chain_sort(rw: _Rewriter, base, key=nd_key):
    items = _chain_items(rw.at(base))
    n = len(items)
    if n < 2:
        return
    for end in range(n - 1, 0, -1):  # bubble sort, deterministic
        for i in range(end):
            items = _chain_items(rw.at(base))
            if key(items[i]) > key(items[i + 1]):
                _chain_swap(rw, base, n, i)


def _chain_dedupe(rw: _Rewriter, base):
    """Merge adjacent equal elements (A3) of a sorted chain."""
    while True:
        items = _chain_items(rw.at(base))
        n = len(items)
        hit = next((i for i in range(n - 1) if items[i] == items[i + 1]), None)
        if hit is None:
            return
        node_pos = _chain_node_pos(base, n, hit + 1)
        node = rw.at(node_pos)
        if hit == 0:
            rw.apply(AxiomId.A3, node_pos, "LR", {"E": node.left})
        else:
            rw.apply(AxiomId.A2, node_pos, "LR", {
                "E": node.left.left, "F": node.left.right, "G": node.right})
            rw.apply(AxiomId.A3, list(node_pos) + [1], "LR",
                     {"E": node.left.right})


def _chain_drop_zeros(rw: _Rewriter, base):
    """Remove 0 summands from a sorted deduplicated chain (0 sorts first)."""
    items = _chain_items(rw.at(base))
    n = len(items)
    if n >= 2 and isinstance(items[0], Zero):
        node_pos = _chain_node_pos(base, n, 1)
        node = rw.at(node_pos)
        rw.apply(AxiomId.A1, node_pos, "LR", {"E": node.left, "F": node.right})
        node = rw.at(node_pos)
        rw.apply(AxiomId.A4, node_pos, "LR", {"E": node.left})


# -- probabilistic spines (right-nested choices)


def _spine_items(term) -> list:
    out = []
    node = term
    while isinstance(node, PChoice):
        out.append(node.left)
        node = node.right
    out.append(node)
    return out


def _spine_weights(term) -> list:
    """Flat weights of a right-nested spine: p_i = r_i * prod(1 - r_j)."""
    out = []
    node = term
    carry = ONE
    while isinstance(node, PChoice):
        out.append(carry * node.weight)
        carry *= ONE - node.weight
        node = node.right
    out.append(carry)
    return out


def _right_assoc_p(rw: _Rewriter, pos):
    """Reassociate the choice at pos into a right-nested spine."""
    while isinstance(rw.at(pos), PChoice) and isinstance(rw.at(pos).left, PChoice):
        node = rw.at(pos)
        rw.apply(AxiomId.P2, pos, "RL", {
            "P": node.left.left, "Q": node.left.right, "R": node.right,
            "rbar": node.left.weight, "sbar": node.weight})
    node = rw.at(pos)
    if isinstance(node, PChoice):
        _right_assoc_p(rw, list(pos) + [1])


def _spine_node_pos(base, i: int) -> list:
    return list(base) + [1] * i


def _spine_swap(rw: _Rewriter, base, n: int, i: int):
    """Swap spine components i and i+1 of a right-nested n-spine."""
    node_pos = _spine_node_pos(base, i)
    node = rw.at(node_pos)
    if i + 1 == n - 1:  # both components are leaves of this node
        rw.apply(AxiomId.P1, node_pos, "LR", {
            "P": node.left, "Q": node.right, "r": node.weight})
        return
    rw.apply(AxiomId.P2, node_pos, "LR", {
        "P": node.left, "Q": node.right.left, "R": node.right.right,
        "r": node.weight, "s": node.right.weight})
    node = rw.at(node_pos)
    rw.apply(AxiomId.P1, list(node_pos) + [0], "LR", {
        "P": node.left.left, "Q": node.left.right, "r": node.left.weight})
    node = rw.at(node_pos)
    rw.apply(AxiomId.P2, node_pos, "RL", {
        "P": node.left.left, "Q": node.left.right, "R": node.right,
        "rbar": node.left.weight, "sbar": node.weight})


def _spine_move(rw: _Rewriter, base, n: int, src: int, dst: int):
    i = src
    while i > dst:
        _spine_swap(rw, base, n, i - 1)
        i -= 1
    while i < dst:
        _spine_swap(rw, base, n, i)
        i += 1


def _spine_sort(rw: _Rewriter, base, key=p_key):
    items = _spine_items(rw.at(base))
    n = len(items)
    if n < 2:
        return
    for end in range(n - 1, 0, -1):
        for i in range(end):
            items = _spine_items(rw.at(base))
            if key(items[i]) > key(items[i + 1]):
                _spine_swap(rw, base, n, i)


def _spine_merge(rw: _Rewriter, base):
    """Merge adjacent equal components (P3) of a sorted spine."""
    while True:
        items = _spine_items(rw.at(base))
        n = len(items)
        if n < 2:
            return
        hit = next((i for i in range(n - 1) if items[i] == items[i + 1]), None)
        if hit is None:
            return
        node_pos = _spine_node_pos(base, hit)
        node = rw.at(node_pos)
        if hit + 1 == n - 1:
            rw.apply(AxiomId.P3, node_pos, "LR",
                     {"P": node.left, "r": node.weight})
        else:
            rw.apply(AxiomId.P2, node_pos, "LR", {
                "P": node.left, "Q": node.right.left, "R": node.right.right,
                "r": node.weight, "s": node.right.weight})
            node = rw.at(node_pos)
            rw.apply(AxiomId.P3, list(node_pos) + [0], "LR", {
                "P": node.left.left, "r": node.left.weight})


# ---------------------------------------------------------------------------
# Normalizers


def _normalize_nd_at(rw: _Rewriter, pos):
    node = rw.at(pos)
    if isinstance(node, Zero):
        return
    if isinstance(node, Prefix):
        _normalize_p_at(rw, list(pos) + [0])
        return
    _left_assoc(rw, pos)
    n = len(_chain_items(rw.at(pos)))
    for j in range(n):
        elem_pos = _chain_elem_pos(pos, n, j)
        elem = rw.at(elem_pos)
        if isinstance(elem, Prefix):
            _normalize_p_at(rw, elem_pos + [0])
    _chain_sort(rw, pos)
    _chain_dedupe(rw, pos)
    _chain_drop_zeros(rw, pos)


def _normalize_p_at(rw: _Rewriter, pos):
    node = rw.at(pos)
    if isinstance(node, Dirac):
        _normalize_nd_at(rw, list(pos) + [0])
        return
    _right_assoc_p(rw, pos)
    n = len(_spine_items(rw.at(pos)))
    for i in range(n):
        comp_pos = _spine_node_pos(pos, i) + ([0] if i < n - 1 else [])
        comp = rw.at(comp_pos)
        if isinstance(comp, Dirac):
            _normalize_nd_at(rw, comp_pos + [0])
    _spine_sort(rw, pos)
    _spine_merge(rw, pos)


def normalize_nd(term: NdTerm, budget: int = 100000):
    """Canonical form under A1-A4: flattened, sorted, duplicate- and
    zero-free (deeply, through prefix bodies).  Returns (term, trace)."""
    rw = _Rewriter(term, _Budget(budget))
    _normalize_nd_at(rw, [])
    return rw.term, ProofTrace(term, tuple(rw.steps), rw.term)


def normalize_p(term: PTerm, budget: int = 100000):
    """Canonical flat probabilistic form: a right-nested spine of Dirac
    components with normalized, sorted, distinct states.  Returns the
    flat decomposition [(mass, state), ...] plus the trace."""
    rw = _Rewriter(term, _Budget(budget))
    _normalize_p_at(rw, [])
    items = _spine_items(rw.term)
    weights = _spine_weights(rw.term)
    decomposition = tuple(
        (w, comp.body) for w, comp in zip(weights, items))
    return decomposition, ProofTrace(term, tuple(rw.steps), rw.term)


def canonical_pterm(term: PTerm, budget: int = 100000):
    """The canonical spine itself plus its trace."""
    rw = _Rewriter(term, _Budget(budget))
    _normalize_p_at(rw, [])
    return rw.term, ProofTrace(term, tuple(rw.steps), rw.term)


# ---------------------------------------------------------------------------
# Derived simplified laws (Lemma-8 style chains)


def derived_simple_bp(variant: int, term, budget: int = 100000):
    """Expand one of the derived laws into its primitive chain.

    variant 1: a.D(E + tau.P) = a.P        (needs E matched-by P)
    variant 2: a.(D(tau.P) +[r] R) = a.(P +[r] R)
    variant 3: a.D(tau.P) = a.P
    """
    rw = _Rewriter(term, _Budget(budget))
    if variant == 1:
        shape = term
        if not (isinstance(shape, Prefix) and isinstance(shape.body, Dirac)
                and isinstance(shape.body.body, Sum)
                and isinstance(shape.body.body.right, Prefix)
                and shape.body.body.right.action.is_tau):
            raise ShapeError("expected a.D(E + tau.P)")
        alpha = shape.action
        e = shape.body.body.left
        p = shape.body.body.right.body
        if not sqsubseteq(e, p):
            raise SideConditionError("variant 1: E is not matched by P")
        half = rat(1, 2)
        rw.apply(AxiomId.P3, [0], "RL", {"P": shape.body, "r": half})
        rw.apply(AxiomId.BP, [], "LR",
                 {"alpha": alpha, "E": e, "P": p, "Q": shape.body, "r": half})
        node = rw.at([0])
        rw.apply(AxiomId.P1, [0], "LR",
                 {"P": node.left, "Q": node.right, "r": node.weight})
        rw.apply(AxiomId.BP, [], "LR",
                 {"alpha": alpha, "E": e, "P": p, "Q": p, "r": half})
        rw.apply(AxiomId.P3, [0], "LR", {"P": p, "r": half})
    elif variant == 2:
        shape = term
        if not (isinstance(shape, Prefix) and isinstance(shape.body, PChoice)
                and isinstance(shape.body.left, Dirac)
                and isinstance(shape.body.left.body, Prefix)
                and shape.body.left.body.action.is_tau):
            raise ShapeError("expected a.(D(tau.P) +[r] R)")
        _sbp2_chain(rw, [], shape.action)
    elif variant == 3:
        shape = term
        if not (isinstance(shape, Prefix) and isinstance(shape.body, Dirac)
                and isinstance(shape.body.body, Prefix)
                and shape.body.body.action.is_tau):
            raise ShapeError("expected a.D(tau.P)")
        alpha = shape.action
        p = shape.body.body.body
        half = rat(1, 2)
        rw.apply(AxiomId.P3, [0], "RL", {"P": shape.body, "r": half})
        _sbp2_chain(rw, [], alpha)
        node = rw.at([0])
        rw.apply(AxiomId.P1, [0], "LR",
                 {"P": node.left, "Q": node.right, "r": node.weight})
        _sbp2_chain(rw, [], alpha)
        rw.apply(AxiomId.P3, [0], "LR", {"P": p, "r": half})
    else:
        raise ValueError("variant must be 1, 2 or 3")
    return rw.term, ProofTrace(term, tuple(rw.steps), rw.term)


def _sbp2_chain(rw: _Rewriter, pos, alpha):
    """A4 then BP: a.(D(tau.P) +[r] R) = a.(P +[r] R) at pos."""
    shape = rw.at(pos)
    tau_state = shape.body.left.body
    p = tau_state.body
    r = shape.body.weight
    rest = shape.body.right
    rw.apply(AxiomId.A4, list(pos) + [0, 0, 0], "RL", {"E": tau_state})
    node = rw.at(list(pos) + [0, 0, 0])
    rw.apply(AxiomId.A1, list(pos) + [0, 0, 0], "LR",
             {"E": node.left, "F": node.right})
    rw.apply(AxiomId.BP, pos, "LR",
             {"alpha": alpha, "E": ZERO_TERM, "P": p, "Q": rest, "r": r})


# ---------------------------------------------------------------------------
# Matching-weight extraction (feasible points of the transfer LPs)


def _strong_match_solution(partition, responder_summands, action, sig):
    """Convex weights over the responder's action-summands whose combined
    step hits the signature; None when no match exists."""
    cands = [(i, s.body, den(s.body)) for i, s in enumerate(responder_summands)
             if s.action == action]
    if not cands:
        return None
    lp = LP()
    for i, _, _ in cands:
        lp.var(("y", i))
    lp.add_eq({("y", i): ONE for i, _, _ in cands}, ONE)
    for k, cls in enumerate(partition.classes):
        coeffs = {}
        for i, _, target in cands:
            m = target.class_mass(cls)
            if m != ZERO:
                coeffs[("y", i)] = m
        lp.add_eq(coeffs, sig[k])
    sol = lp.feasible()
    if sol is None:
        return None
    return [(body, sol[("y", i)]) for i, body, _ in cands
            if sol[("y", i)] != ZERO]


def _rooted_match_solution(tables, responder_summands, action, end_sig):
    """Weights over the responder's action-summands whose combined step
    stabilizes onto the required signature."""
    from .semantics import add_flow_result

    cands = [(i, s.body, den(s.body)) for i, s in enumerate(responder_summands)
             if s.action == action]
    if not cands:
        return None
    states = sorted(set().union(*(derivatives(b) for _, b, _ in cands)),
                    key=nd_key)
    lp = LP()
    for i, _, _ in cands:
        lp.var(("y", i))
    lp.add_eq({("y", i): ONE for i, _, _ in cands}, ONE)
    nu = {}
    for s in states:
        v = lp.var(("n", s))
        nu[s] = v
        coeffs = {v: ONE}
        for i, _, target in cands:
            m = target.mass(s)
            if m != ZERO:
                coeffs[("y", i)] = coeffs.get(("y", i), ZERO) - m
        lp.add_eq(coeffs, ZERO)
    omega = add_flow_result(lp, "e", {s: ("n", s) for s in states}, states,
                            tables.inert_transitions(states))
    for s in states:
        if s in tables.unstable:
            lp.add_eq({omega[s]: ONE}, ZERO)
    for k, cls in enumerate(tables.partition.classes):
        lp.add_eq({omega[s]: ONE for s in states if s in cls}, end_sig[k])
    sol = lp.feasible()
    if sol is None:
        return None
    return [(body, sol[("y", i)]) for i, body, _ in cands
            if sol[("y", i)] != ZERO]


# ---------------------------------------------------------------------------
# Chain editing for the saturation proofs


class _ChainEditor:
    """Summand-level editing of a whole-term chain with C saturation."""

    def __init__(self, rw: _Rewriter):
        self.rw = rw

    def items(self):
        return _chain_items(self.rw.term)

    def move(self, src: int, dst: int):
        _chain_move(self.rw, [], len(self.items()), src, dst)

    def build_combo(self, action: Action, weighted_bodies):
        """Introduce the summand action.(fold of weighted bodies) by C
        applications; returns (combo_body, fold_records)."""
        (cur_body, cur_w), rest = weighted_bodies[0], weighted_bodies[1:]
        records = []
        for body, w in rest:
            r = cur_w / (cur_w + w)
            i = self.items().index(Prefix(action, cur_body))
            self.move(i, 0)
            j = self.items().index(Prefix(action, body), 1)
            self.move(j, 1)
            n = len(self.items())
            self.rw.apply(AxiomId.C, [0] * (n - 2), "LR",
                          {"alpha": action, "P": cur_body, "Q": body, "r": r})
            records.append((cur_body, body, r))
            cur_body = PChoice(cur_body, r, body)
            cur_w = cur_w + w
        return cur_body, records

    def remove_intermediates(self, action: Action, records):
        """Reverse the fold steps except the final combo (records must
        exclude the last fold)."""
        for left_body, right_body, r in reversed(records):
            combo = PChoice(left_body, r, right_body)
            i = self.items().index(Prefix(action, left_body))
            self.move(i, 0)
            j = self.items().index(Prefix(action, combo), 1)
            self.move(j, 1)
            k = self.items().index(Prefix(action, right_body), 2)
            self.move(k, 2)
            n = len(self.items())
            self.rw.apply(AxiomId.C, [0] * (n - 3), "RL",
                          {"alpha": action, "P": left_body, "Q": right_body,
                           "r": r})

    def rewrite_summand_body(self, index: int, steps):
        n = len(self.items())
        self.rw.splice(_chain_elem_pos([], n, index) + [0], steps)

    def rewrite_summand(self, index: int, steps):
        n = len(self.items())
        self.rw.splice(_chain_elem_pos([], n, index), steps)


def _saturate_and_pair(prover, rw_left: _Rewriter, rw_right: _Rewriter,
                       matcher, prefix_prover, group_key):
    """Shared skeleton of the completeness argument.

    Both sides are normalized chains.  Every summand of one side is
    matched by a convex combination over the other side's same-action
    summands; multi-summand matches are realized as new summands by C
    saturation (fold intermediates unwound afterwards).  At that point
    each side's (action, continuation-class) groups cover the other's,
    so rewriting every summand body onto a canonical per-group
    representative makes both chains normalize to the same term.
    """
    left = _ChainEditor(rw_left)
    right = _ChainEditor(rw_right)
    orig_left = [s for s in left.items() if isinstance(s, Prefix)]
    orig_right = [s for s in right.items() if isinstance(s, Prefix)]

    for originals, responders, editor in (
            (orig_left, orig_right, right), (orig_right, orig_left, left)):
        for s in originals:
            match = matcher(s, responders)
            if match is None:
                raise ValueError("transfer match vanished during proof search")
            if len(match) > 1:
                _, records = editor.build_combo(s.action, match)
                editor.remove_intermediates(s.action, records[:-1])

    # Canonical representative per (action, continuation class).
    reps: dict = {}
    for editor in (left, right):
        for s in editor.items():
            if not isinstance(s, Prefix):
                continue
            key = (s.action, group_key(s.body))
            cur = reps.get(key)
            if cur is None or (complexity(s.body), p_key(s.body)) < (
                    complexity(cur), p_key(cur)):
                reps[key] = s.body
    for editor in (left, right):
        idx = 0
        while idx < len(editor.items()):
            s = editor.items()[idx]
            if isinstance(s, Prefix):
                rep = reps[(s.action, group_key(s.body))]
                if s.body != rep:
                    editor.rewrite_summand(
                        idx, prefix_prover(s.action, s.body, rep))
            idx += 1

    _normalize_nd_at(rw_left, [])
    _normalize_nd_at(rw_right, [])
    if rw_left.term != rw_right.term:
        raise ValueError("saturation did not converge to a common form")


# ---------------------------------------------------------------------------
# The prover


class _Prover:
    """Shared memoized engine behind the concretizers and prove_equal."""

    def __init__(self, budget: int = 100000):
        self.budget = _Budget(budget)
        self._conc_memo: dict = {}
        self._conc_nd_memo: dict = {}
        self._strong_state_memo: dict = {}
        self._strong_pterm_memo: dict = {}
        self._rooted_state_memo: dict = {}

    # -- strong completeness (A1-A4, P1-P3, C)

    def strong_states(self, e: NdTerm, f: NdTerm) -> list:
        if e == f:
            return []
        key = (e, f)
        if key in self._strong_state_memo:
            return list(self._strong_state_memo[key])
        rw_e = _Rewriter(e, self.budget)
        _normalize_nd_at(rw_e, [])
        rw_f = _Rewriter(f, self.budget)
        _normalize_nd_at(rw_f, [])
        if rw_e.term != rw_f.term:
            partition = strong_partition({e, f, rw_e.term, rw_f.term})

            def matcher(summand, responders):
                return _strong_match_solution(
                    partition, responders, summand.action,
                    partition.sig(den(summand.body)))

            _saturate_and_pair(self, rw_e, rw_f, matcher, self.strong_prefix,
                               lambda body: partition.sig(den(body)))
        steps = rw_e.steps + invert_steps(rw_f.steps)
        self._strong_state_memo[key] = tuple(steps)
        return steps

    def strong_prefix(self, action: Action, p: PTerm, q: PTerm) -> list:
        """Steps for action.p = action.q when den(p) ~ den(q), relative to
        the prefix term."""
        inner = self.strong_pterms(p, q)
        rw = _Rewriter(Prefix(action, p), self.budget)
        rw.splice([0], inner)
        return rw.steps

    def strong_pterms(self, p: PTerm, q: PTerm) -> list:
        if p == q:
            return []
        key = (p, q)
        if key in self._strong_pterm_memo:
            return list(self._strong_pterm_memo[key])
        rw_p = _Rewriter(p, self.budget)
        _normalize_p_at(rw_p, [])
        rw_q = _Rewriter(q, self.budget)
        _normalize_p_at(rw_q, [])
        if rw_p.term != rw_q.term:
            comps_p = [c.body for c in _spine_items(rw_p.term)]
            comps_q = [c.body for c in _spine_items(rw_q.term)]
            partition = strong_partition(set(comps_p) | set(comps_q))
            reps: dict = {}
            for state in comps_p + comps_q:
                cls = partition.class_of(state)
                cur = reps.get(cls)
                if cur is None or (complexity(state), nd_key(state)) < (
                        complexity(cur), nd_key(cur)):
                    reps[cls] = state
            for rw in (rw_p, rw_q):
                spine = _spine_items(rw.term)
                n = len(spine)
                for i, comp in enumerate(spine):
                    rep = reps[partition.class_of(comp.body)]
                    if comp.body != rep:
                        pos = _spine_node_pos([], i) + ([0] if i < n - 1 else [])
                        rw.splice(pos + [0], self.strong_states(comp.body, rep))
                _spine_sort(rw, [])
                _spine_merge(rw, [])
            if rw_p.term != rw_q.term:
                raise ValueError("strong component matching failed")
        steps = rw_p.steps + invert_steps(rw_q.steps)
        self._strong_pterm_memo[key] = tuple(steps)
        return steps

    # -- concretization (full calculus)

    def conc_prefix(self, action: Action, p: PTerm):
        """(steps, pbar): steps prove action.p = action.pbar relative to
        the prefix term; pbar is concrete."""
        key = (action, p)
        if key in self._conc_memo:
            steps, pbar = self._conc_memo[key]
            return list(steps), pbar
        rw = _Rewriter(Prefix(action, p), self.budget)
        _normalize_p_at(rw, [0])
        spine = _spine_items(rw.at([0]))
        if len(spine) == 1:
            self._conc_state_bare(rw, action)
        else:
            pending = len(spine)
            while pending:
                _right_assoc_p(rw, [0])
                m = len(_spine_items(rw.at([0])))
                _spine_move(rw, [0], m, m - 1, 0)
                self._conc_state_front(rw, action)
                pending -= 1
            _right_assoc_p(rw, [0])
            _spine_sort(rw, [0])
            _spine_merge(rw, [0])
        pbar = rw.term.body
        self._conc_memo[key] = (tuple(rw.steps), pbar)
        return rw.steps, pbar

    def _concretize_continuations(self, rw: _Rewriter, base) -> None:
        """Concretize every prefix body of the state chain at base."""
        _left_assoc(rw, base)
        items = _chain_items(rw.at(base))
        n = len(items)
        for j, s in enumerate(items):
            if not isinstance(s, Prefix):
                continue
            sub_steps, pbar = self.conc_prefix(s.action, s.body)
            if pbar != s.body:
                rw.splice(_chain_elem_pos(base, n, j), sub_steps)

    def _find_inert_summand(self, items, state):
        """Index of a silent summand whose body dissolves the whole state,
        plus the side condition needed for its discharge."""
        for j, s in enumerate(items):
            if not (isinstance(s, Prefix) and s.action.is_tau):
                continue
            if not branching_equiv(den(s.body), dirac(state)).equivalent:
                continue
            if len(items) == 1:
                return j
            rest = [t for k, t in enumerate(items) if k != j]
            h_term = rest[0]
            for t in rest[1:]:
                h_term = Sum(h_term, t)
            if sqsubseteq(h_term, s.body):
                return j
        return None

    def _find_partially_inert(self, items, state):
        analysis = branching_analysis(derivatives(Dirac(state)))
        cls = analysis.partition.class_of(state)
        for j, s in enumerate(items):
            if not (isinstance(s, Prefix) and s.action.is_tau):
                continue
            r = den(s.body).class_mass(cls)
            if ZERO < r < ONE:
                return j, cls
        return None

    def _conc_state_front(self, rw: _Rewriter, action: Action):
        """Concretize the Dirac component at the front of the choice spine
        under the prefix: body = D(E) (+w) Rest."""
        base = [0, 0, 0]
        if isinstance(rw.at(base), Zero):
            return
        while True:
            _left_assoc(rw, base)
            self._concretize_continuations(rw, base)
            state = rw.at(base)
            items = _chain_items(state)
            j = self._find_inert_summand(items, state)
            if j is not None:
                w = rw.at([0]).weight
                rest = rw.at([0, 1])
                body = items[j].body
                if len(items) == 1:
                    rw.apply(AxiomId.SBP2, [], "LR",
                             {"alpha": action, "P": body, "r": w, "R": rest})
                else:
                    _chain_move(rw, base, len(items), j, len(items) - 1)
                    h_term = rw.at(base + [0])
                    rw.apply(AxiomId.BP, [], "LR",
                             {"alpha": action, "E": h_term, "P": body,
                              "Q": rest, "r": w})
                return
            found = self._find_partially_inert(items, state)
            if found is None:
                return  # state is concrete; component stays a Dirac
            j, cls = found
            n = len(items)
            body_pos = _chain_elem_pos(base, n, j) + [0]
            self._reshape_partial(rw, body_pos, cls)
            _chain_move(rw, base, n, j, 0)
            _right_assoc_nd(rw, base)
            tau_summand = rw.at(base + [0])
            h_term = rw.at(base + [1])
            w = rw.at([0]).weight
            rest = rw.at([0, 1])
            rw.apply(AxiomId.G, [], "LR",
                     {"alpha": action, "E": tau_summand, "F": h_term,
                      "Q": rest, "r": w})
            # loop: the new front state is h_term with one partially
            # inert summand fewer

    def _reshape_partial(self, rw: _Rewriter, pos, cls):
        """Rewrite the choice spine at pos into D(F) (+r0) Rest, with F the
        canonical representative of the class-equivalent support part."""
        _right_assoc_p(rw, pos)
        spine = _spine_items(rw.at(pos))
        t_idx = [i for i, c in enumerate(spine) if c.body in cls]
        t_states = [spine[i].body for i in t_idx]
        rep = min(t_states, key=lambda s: (complexity(s), nd_key(s)))
        n = len(spine)
        for i in t_idx:
            comp = _spine_items(rw.at(pos))[i]
            if comp.body != rep:
                comp_pos = _spine_node_pos(pos, i) + ([0] if i < n - 1 else [])
                rw.splice(comp_pos + [0], self.strong_states(comp.body, rep))
        # bubble the equivalent copies to the front, then merge them
        for front, i in enumerate(t_idx):
            current = _spine_items(rw.at(pos))
            src = next(k for k in range(front, len(current))
                       if current[k] == Dirac(rep))
            _spine_move(rw, pos, len(current), src, front)
        _spine_merge(rw, pos)

    def _conc_state_bare(self, rw: _Rewriter, action: Action):
        """Concretize body = D(E) directly under the prefix."""
        base = [0, 0]
        if isinstance(rw.at(base), Zero):
            return
        self._concretize_continuations(rw, base)
        state = rw.at(base)
        items = _chain_items(state)
        j = self._find_inert_summand(items, state)
        if j is not None:
            body = items[j].body
            if len(items) == 1:
                rw.apply(AxiomId.SBP3, [], "LR", {"alpha": action, "P": body})
            else:
                _chain_move(rw, base, len(items), j, len(items) - 1)
                h_term = rw.at(base + [0])
                rw.apply(AxiomId.SBP1, [], "LR",
                         {"alpha": action, "E": h_term, "P": body})
            return
        if self._find_partially_inert(items, state) is None:
            return  # already concrete
        # sandwich: duplicate the component so the choice-context laws apply
        half = rat(1, 2)
        rw.apply(AxiomId.P3, [0], "RL", {"P": rw.at([0]), "r": half})
        self._conc_state_front(rw, action)
        node = rw.at([0])
        rw.apply(AxiomId.P1, [0], "LR",
                 {"P": node.left, "Q": node.right, "r": node.weight})
        self._conc_state_front(rw, action)
        node = rw.at([0])
        if node.left != node.right:
            raise ValueError("sandwich halves diverged during concretization")
        rw.apply(AxiomId.P3, [0], "LR", {"P": node.left, "r": node.weight})

    # -- branching continuations under a prefix (prob-technical (c))

    def branching_prefix(self, action: Action, p: PTerm, q: PTerm) -> list:
        if p == q:
            return []
        steps_p, pbar = self.conc_prefix(action, p)
        steps_q, qbar = self.conc_prefix(action, q)
        rw = _Rewriter(Prefix(action, pbar), self.budget)
        rw.splice([0], self.strong_pterms(pbar, qbar))
        return list(steps_p) + rw.steps + invert_steps(steps_q)

    # -- rooted completeness

    def rooted_states(self, e: NdTerm, f: NdTerm) -> list:
        if e == f:
            return []
        key = (e, f)
        if key in self._rooted_state_memo:
            return list(self._rooted_state_memo[key])
        rw_e = _Rewriter(e, self.budget)
        _normalize_nd_at(rw_e, [])
        rw_f = _Rewriter(f, self.budget)
        _normalize_nd_at(rw_f, [])
        if rw_e.term != rw_f.term:
            analysis = branching_analysis(
                frozenset({e, f, rw_e.term, rw_f.term}))
            tables = analysis.tables

            def matcher(summand, responders):
                return _rooted_match_solution(
                    tables, responders, summand.action,
                    tables.stab_sig(den(summand.body)))

            _saturate_and_pair(self, rw_e, rw_f, matcher, self.branching_prefix,
                               lambda body: tables.stab_sig(den(body)))
        steps = rw_e.steps + invert_steps(rw_f.steps)
        self._rooted_state_memo[key] = tuple(steps)
        return steps

    def rooted_pterms(self, p: PTerm, q: PTerm) -> list:
        if p == q:
            return []
        rw_p = _Rewriter(p, self.budget)
        _normalize_p_at(rw_p, [])
        rw_q = _Rewriter(q, self.budget)
        _normalize_p_at(rw_q, [])
        if rw_p.term != rw_q.term:
            comps_p = [c.body for c in _spine_items(rw_p.term)]
            comps_q = [c.body for c in _spine_items(rw_q.term)]
            analysis = branching_analysis(frozenset(comps_p) | frozenset(comps_q))
            rooted = rooted_partition_over(analysis, set(comps_p) | set(comps_q))
            reps: dict = {}
            for state in comps_p + comps_q:
                cls = rooted.class_of(state)
                cur = reps.get(cls)
                if cur is None or (complexity(state), nd_key(state)) < (
                        complexity(cur), nd_key(cur)):
                    reps[cls] = state
            for rw in (rw_p, rw_q):
                spine = _spine_items(rw.term)
                n = len(spine)
                for i, comp in enumerate(spine):
                    rep = reps[rooted.class_of(comp.body)]
                    if comp.body != rep:
                        pos = _spine_node_pos([], i) + ([0] if i < n - 1 else [])
                        rw.splice(pos + [0], self.rooted_states(comp.body, rep))
                _spine_sort(rw, [])
                _spine_merge(rw, [])
            if rw_p.term != rw_q.term:
                raise ValueError("rooted component matching failed")
        return rw_p.steps + invert_steps(rw_q.steps)

    # -- the purely non-deterministic fragment (axiom B route)

    def conc_nd(self, action: Action, e: NdTerm):
        """(steps, ebar) for the nd fragment: steps prove
        action.D(e) = action.D(ebar) with ebar concrete, using B."""
        key = (action, e)
        if key in self._conc_nd_memo:
            steps, ebar = self._conc_nd_memo[key]
            return list(steps), ebar
        rw = _Rewriter(Prefix(action, Dirac(e)), self.budget)
        base = [0, 0]
        while True:
            _normalize_nd_at(rw, base)
            state = rw.at(base)
            if isinstance(state, Zero):
                break
            items = _chain_items(state)
            n = len(items)
            for j, s in enumerate(items):
                sub_steps, _ = self.conc_nd(s.action, s.body.body)
                if sub_steps:
                    rw.splice(_chain_elem_pos(base, n, j), sub_steps)
            state = rw.at(base)
            items = _chain_items(state)
            analysis = branching_analysis(derivatives(Dirac(state)))
            inert_j = None
            for j, s in enumerate(items):
                if s.action.is_tau and analysis.state_equivalent(
                        s.body.body, state):
                    inert_j = j
                    break
            if inert_j is None:
                break
            if len(items) == 1:
                inner = items[0].body.body  # E_i0
                rw.apply(AxiomId.A4, base, "RL", {"E": state})
                node = rw.at(base)
                rw.apply(AxiomId.A1, base, "LR",
                         {"E": node.left, "F": node.right})
                rw.splice(base + [1],
                          self._nd_prefix_eq(TAU, inner, Sum(inner, ZERO_TERM)))
                rw.apply(AxiomId.B, [], "LR",
                         {"alpha": action, "E": inner, "F": ZERO_TERM})
            else:
                _chain_move(rw, base, len(items), inert_j, len(items) - 1)
                h_term = rw.at(base + [0])
                inner = rw.at(base + [1]).body.body
                rw.splice(base + [1],
                          self._nd_prefix_eq(TAU, inner, Sum(inner, h_term)))
                rw.apply(AxiomId.B, [], "LR",
                         {"alpha": action, "E": inner, "F": h_term})
        ebar = rw.at(base)
        self._conc_nd_memo[key] = (tuple(rw.steps), ebar)
        return rw.steps, ebar

    def _nd_prefix_eq(self, action: Action, e1: NdTerm, e2: NdTerm) -> list:
        """Steps for action.D(e1) = action.D(e2) in the nd fragment, where
        the two states are branching bisimilar: concretize both and match
        their identical strong normal forms."""
        s1, b1 = self.conc_nd(action, e1)
        s2, b2 = self.conc_nd(action, e2)
        rw1 = _Rewriter(Prefix(action, Dirac(b1)), self.budget)
        _normalize_nd_at(rw1, [0, 0])
        rw2 = _Rewriter(Prefix(action, Dirac(b2)), self.budget)
        _normalize_nd_at(rw2, [0, 0])
        if rw1.term != rw2.term:
            raise ValueError(
                "concrete normal forms differ for branching-equivalent "
                "nd states")
        return list(s1) + rw1.steps + invert_steps(rw2.steps) + invert_steps(s2)


# ---------------------------------------------------------------------------
# Public entry points


def concretize(p: PTerm, budget: int = 100000):
    """A concrete process equal to p under any prefix, plus the trace of
    tau.p = tau.pbar (the silent action as representative prefix)."""
    prover = _Prover(budget)
    steps, pbar = prover.conc_prefix(TAU, p)
    trace = ProofTrace(Prefix(TAU, p), tuple(steps), Prefix(TAU, pbar))
    return pbar, trace


def concretize_nd(e: NdTerm, budget: int = 100000):
    """Concretization inside the purely non-deterministic fragment; the
    trace discharges inert steps with axiom B."""
    if not is_nd_fragment(e):
        raise FragmentError("term is outside the non-deterministic fragment")
    prover = _Prover(budget)
    steps, ebar = prover.conc_nd(TAU, e)
    trace = ProofTrace(Prefix(TAU, Dirac(e)), tuple(steps),
                       Prefix(TAU, Dirac(ebar)))
    return ebar, trace


def prove_equal(left, right, budget: int = 100000):
    """A replayable equational proof of left = right, or the checker's
    refutation verdict.  Exceeding the step budget raises
    BudgetExceededError (a resource condition, never a verdict)."""
    verdict = relation_check("rooted-branching", left, right)
    if not verdict.equivalent:
        return verdict
    prover = _Prover(budget)
    if isinstance(left, NdTerm) and isinstance(right, NdTerm):
        start, end = left, right
        steps = prover.rooted_states(left, right)
    else:
        start = left if isinstance(left, PTerm) else Dirac(left)
        end = right if isinstance(right, PTerm) else Dirac(right)
        steps = prover.rooted_pterms(start, end)
    trace = ProofTrace(start, tuple(steps), end)
    trace.replay()
    return trace
