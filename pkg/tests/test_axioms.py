import pytest

from probranch.axioms import (
    AxiomId,
    BudgetExceededError,
    FragmentError,
    PositionError,
    ProofTrace,
    RewriteStep,
    ShapeError,
    SideConditionError,
    SubstitutionError,
    apply_axiom,
    canonical_pterm,
    concretize,
    concretize_nd,
    derived_simple_bp,
    normalize_nd,
    normalize_p,
    prove_equal,
)
from probranch.dist import den, dirac
from probranch.equivalence import (
    Verdict,
    branching_equiv,
    check,
    is_concrete,
    rooted_branching_equiv,
)
from probranch.parse import parse_nd, parse_p, print_term
from probranch.rat import rat
from probranch.terms import Action, Dirac, Prefix, TAU, ZERO_TERM


def nd(s):
    return parse_nd(s)


def pt(s):
    return parse_p(s)


def step(axiom, pos, direction, **subst):
    return RewriteStep(axiom, tuple(pos), direction,
                       tuple(sorted(subst.items())))


# ------------------------------------------------------------- apply_axiom


def test_apply_a1():
    t = nd("a.D(0) + b.D(0)")
    out = apply_axiom(t, step(AxiomId.A1, [], "LR",
                              E=nd("a.D(0)"), F=nd("b.D(0)")))
    assert out == nd("b.D(0) + a.D(0)")


def test_apply_a3_requires_equal():
    t = nd("a.D(0) + b.D(0)")
    with pytest.raises(SubstitutionError):
        apply_axiom(t, step(AxiomId.A3, [], "LR", E=nd("a.D(0)")))


def test_apply_position_error():
    with pytest.raises(PositionError):
        apply_axiom(ZERO_TERM, step(AxiomId.A1, [0, 1], "LR",
                                    E=ZERO_TERM, F=ZERO_TERM))


def test_apply_p2_weight_algebra():
    t = pt("D(a.D(0)) +[1/2] (D(b.D(0)) +[1/2] D(0))")
    out = apply_axiom(t, step(AxiomId.P2, [], "LR",
                              P=pt("D(a.D(0))"), Q=pt("D(b.D(0))"),
                              R=pt("D(0)"), r=rat(1, 2), s=rat(1, 2)))
    # sbar = 1 - 1/4 = 3/4, rbar = (1/2)/(3/4) = 2/3
    assert out == pt("(D(a.D(0)) +[2/3] D(b.D(0))) +[3/4] D(0)")
    back = apply_axiom(out, step(AxiomId.P2, [], "RL",
                                 P=pt("D(a.D(0))"), Q=pt("D(b.D(0))"),
                                 R=pt("D(0)"), rbar=rat(2, 3), sbar=rat(3, 4)))
    assert back == t


def test_apply_c_with_combined_weight():
    t = nd("a.D(b.D(0)) + a.D(c.D(0))")
    out = apply_axiom(t, step(AxiomId.C, [], "LR", alpha=Action("a"),
                              P=pt("D(b.D(0))"), Q=pt("D(c.D(0))"),
                              r=rat(5, 12)))
    assert out == nd(
        "a.D(b.D(0)) + a.(D(b.D(0)) +[5/12] D(c.D(0))) + a.D(c.D(0))")


def test_apply_bp_side_condition():
    # the worked example: E = b.D(0), P = D(a.D(0)+b.D(0)) +1/2 D(b.D(0))
    e = nd("b.D(0)")
    p = pt("D(a.D(0) + b.D(0)) +[1/2] D(b.D(0))")
    q = pt("D(0)")
    lhs = Prefix(Action("a"), parse_p(
        "(D(b.D(0) + tau.(D(a.D(0) + b.D(0)) +[1/2] D(b.D(0)))) +[1/3] D(0))"))
    out = apply_axiom(lhs, step(AxiomId.BP, [], "LR", alpha=Action("a"),
                                E=e, P=p, Q=q, r=rat(1, 3)))
    assert out == Prefix(Action("a"), parse_p(
        "(D(a.D(0) + b.D(0)) +[1/2] D(b.D(0))) +[1/3] D(0)"))


def test_apply_bp_rejects_bad_side_condition():
    lhs = Prefix(Action("a"), parse_p("(D(c.D(0) + tau.D(b.D(0))) +[1/3] D(0))"))
    with pytest.raises(SideConditionError):
        apply_axiom(lhs, step(AxiomId.BP, [], "LR", alpha=Action("a"),
                              E=nd("c.D(0)"), P=pt("D(b.D(0))"),
                              Q=pt("D(0)"), r=rat(1, 3)))


def test_apply_g():
    # E = b.P' + tau.Q' alternative absorbed into D(F)
    f = nd("b.D(c.D(0)) + tau.D(d.D(0))")
    e = nd("tau.(D(b.D(c.D(0)) + tau.D(d.D(0))) +[1/3] D(d.D(0)))")
    lhs = Prefix(Action("a"), parse_p(
        f"(D({print_term(e)} + ({print_term(f)})) +[1/2] D(0))"))
    out = apply_axiom(lhs, step(AxiomId.G, [], "LR", alpha=Action("a"),
                                E=e, F=f, Q=pt("D(0)"), r=rat(1, 2)))
    assert out == Prefix(Action("a"), parse_p(
        f"(D({print_term(f)}) +[1/2] D(0))"))


def test_apply_b_nd_fragment_only():
    lhs = Prefix(Action("a"), Dirac(nd("b.D(0) + tau.D(c.D(0) + b.D(0))")))
    out = apply_axiom(lhs, step(AxiomId.B, [], "LR", alpha=Action("a"),
                                E=nd("c.D(0)"), F=nd("b.D(0)")))
    assert out == Prefix(Action("a"), Dirac(nd("c.D(0) + b.D(0)")))
    bad = Prefix(Action("a"), Dirac(
        nd("b.(D(0) +[1/2] D(0)) + tau.D(c.D(0) + b.(D(0) +[1/2] D(0)))")))
    with pytest.raises(FragmentError):
        apply_axiom(bad, step(AxiomId.B, [], "LR", alpha=Action("a"),
                              E=nd("c.D(0)"), F=nd("b.(D(0) +[1/2] D(0))")))


# -------------------------------------------------------------- normalizers


def test_normalize_nd_examples():
    out, trace = normalize_nd(nd("0 + b.D(0)"))
    assert out == nd("b.D(0)")
    trace.replay()

    out, trace = normalize_nd(nd("a.D(0) + a.D(0)"))
    assert out == nd("a.D(0)")
    trace.replay()

    out, trace = normalize_nd(nd("b.D(0) + a.D(0)"))
    assert out == nd("a.D(0) + b.D(0)")
    trace.replay()


def test_normalize_nd_all_zero():
    out, trace = normalize_nd(nd("0 + 0 + 0"))
    assert out == ZERO_TERM
    trace.replay()


def test_normalize_nd_deep():
    out, trace = normalize_nd(nd("a.D(0 + b.D(0)) + a.D(b.D(0) + 0)"))
    assert out == nd("a.D(b.D(0))")
    trace.replay()


def test_normalize_nd_idempotent():
    for s in ["0", "b.D(0) + a.D(0) + a.D(0)", "tau.(D(0) +[1/2] D(a.D(0)))"]:
        once, _ = normalize_nd(nd(s))
        twice, trace = normalize_nd(once)
        assert once == twice
        assert not trace.steps


def test_normalize_p_merges_equal():
    decomp, trace = normalize_p(pt("D(0) +[1/2] D(0)"))
    assert decomp == ((rat(1), ZERO_TERM),)
    trace.replay()


def test_normalize_p_flattens_weights():
    decomp, trace = normalize_p(
        pt("(D(a.D(0)) +[1/2] D(b.D(0))) +[1/2] D(c.D(0))"))
    trace.replay()
    masses = {print_term(state): w for w, state in decomp}
    assert masses == {"a.D(0)": rat(1, 4), "b.D(0)": rat(1, 4),
                      "c.D(0)": rat(1, 2)}


def test_normalize_p_reorders():
    decomp, trace = normalize_p(pt("D(b.D(0)) +[1/3] D(a.D(0))"))
    trace.replay()
    assert [print_term(s) for _, s in decomp] == ["a.D(0)", "b.D(0)"]
    assert [w for w, _ in decomp] == [rat(2, 3), rat(1, 3)]


def test_normalize_p_idempotent():
    p = pt("(D(b.D(0)) +[1/3] D(a.D(0))) +[1/2] D(b.D(0))")
    canon, trace = canonical_pterm(p)
    trace.replay()
    again, trace2 = canonical_pterm(canon)
    assert canon == again and not trace2.steps
    assert den(canon) == den(p)


# ---------------------------------------------------------- derived laws


def test_sbp3():
    t = nd("a.D(tau.D(b.D(0)))")
    out, trace = derived_simple_bp(3, t)
    assert out == nd("a.D(b.D(0))")
    trace.replay()
    assert set(trace.rule_multiset()) <= {"P3", "A4", "A1", "BP", "P1"}


def test_sbp2():
    t = nd("a.(D(tau.(D(b.D(0)) +[1/2] D(c.D(0)))) +[1/4] D(d.D(0)))")
    out, trace = derived_simple_bp(2, t)
    assert out == nd("a.((D(b.D(0)) +[1/2] D(c.D(0))) +[1/4] D(d.D(0)))")
    trace.replay()


def test_sbp1():
    # guard E = b.D(0) matched by P = D(a.D(0) + b.D(0)) +1/2 D(b.D(0))
    t = nd("a.D(b.D(0) + tau.(D(a.D(0) + b.D(0)) +[1/2] D(b.D(0))))")
    out, trace = derived_simple_bp(1, t)
    assert out == nd("a.(D(a.D(0) + b.D(0)) +[1/2] D(b.D(0)))")
    trace.replay()


def test_sbp1_bad_guard():
    t = nd("a.D(c.D(0) + tau.D(b.D(0)))")
    with pytest.raises(SideConditionError):
        derived_simple_bp(1, t)


def test_sbp_shape_errors():
    with pytest.raises(ShapeError):
        derived_simple_bp(3, nd("a.D(b.D(0))"))
    with pytest.raises(ShapeError):
        derived_simple_bp(2, nd("a.D(0)"))


# ---------------------------------------------------------- concretizers


def test_concretize_inert_tau():
    pbar, trace = concretize(pt("D(tau.D(a.D(0)))"))
    assert pbar == pt("D(a.D(0))")
    assert is_concrete(pbar)
    trace.replay()


def test_concretize_trivial():
    pbar, trace = concretize(pt("D(0)"))
    assert pbar == pt("D(0)")
    assert not trace.steps


def test_concretize_partially_inert_typical():
    # the partially inert "typical case": the inert fraction is absorbed
    inner = "D(b.D(c.D(0)) + tau.D(d.D(0))) +[1/2] D(d.D(0))"
    state = f"tau.({inner}) + b.D(c.D(0)) + tau.D(d.D(0))"
    pbar, trace = concretize(pt(f"D({state})"))
    assert is_concrete(pbar)
    trace.replay()
    assert branching_equiv(den(pbar),
                           dirac(nd("b.D(c.D(0)) + tau.D(d.D(0))"))).equivalent


def test_concretize_mixture():
    pbar, trace = concretize(pt("D(tau.D(a.D(0))) +[1/2] D(b.D(0))"))
    assert is_concrete(pbar)
    trace.replay()
    assert rooted_branching_equiv(
        Prefix(TAU, pbar).body, pt("D(a.D(0)) +[1/2] D(b.D(0))")).equivalent


def test_concretize_preserves_prefixed_equivalence():
    for s in ["D(tau.D(a.D(0)))",
              "D(a.D(tau.D(b.D(0))))",
              "D(tau.(D(b.D(0)) +[1/2] D(c.D(0))))",
              "D(tau.D(a.D(0)) + b.D(0))"]:
        p = pt(s)
        pbar, trace = concretize(p)
        assert is_concrete(pbar)
        trace.replay()
        assert check("rooted-branching", Prefix(TAU, p),
                     Prefix(TAU, pbar)).equivalent


def test_concretize_nd_examples():
    ebar, trace = concretize_nd(nd("tau.D(0) + b.D(0)"))
    assert ebar == nd("tau.D(0) + b.D(0)")
    assert not trace.steps

    ebar, trace = concretize_nd(nd("a.D(tau.D(0))"))
    assert ebar == nd("a.D(0)")
    trace.replay()
    assert "B" in trace.rule_multiset()

    ebar, trace = concretize_nd(ZERO_TERM)
    assert ebar == ZERO_TERM


def test_concretize_nd_fragment_error():
    with pytest.raises(FragmentError):
        concretize_nd(nd("a.(D(0) +[1/2] D(b.D(0)))"))


# ---------------------------------------------------------- prove_equal


def test_prove_equal_reflexive():
    p = pt("D(a.D(0)) +[1/2] D(b.D(0))")
    trace = prove_equal(p, p)
    assert isinstance(trace, ProofTrace)
    assert not trace.steps


def test_prove_equal_refutation():
    out = prove_equal(pt("D(a.D(0))"), pt("D(b.D(0))"))
    assert isinstance(out, Verdict)
    assert not out.equivalent


def test_prove_equal_normal_forms():
    trace = prove_equal(nd("b.D(0) + a.D(0) + a.D(0)"), nd("a.D(0) + b.D(0)"))
    trace.replay()


def test_prove_equal_inert_tau_states():
    trace = prove_equal(nd("a.D(tau.D(b.D(0)))"), nd("a.D(b.D(0))"))
    assert isinstance(trace, ProofTrace)
    trace.replay()


def test_prove_equal_intro_terms():
    s0 = nd("a.(D(tau.(D(b.D(0)) +[1/2] D(c.D(0)))) +[3/4] "
            "D(tau.(D(b.D(0)) +[1/2] D(c.D(0)))))")
    t0 = nd("a.(D(b.D(0)) +[1/2] D(c.D(0)))")
    trace = prove_equal(s0, t0)
    assert isinstance(trace, ProofTrace)
    trace.replay()
    rules = trace.rule_multiset()
    assert "P3" in rules


def test_prove_equal_combined_transition_pair():
    e = nd("a.D(b.D(0)) + a.D(c.D(0))")
    f = nd("a.D(b.D(0)) + a.(D(b.D(0)) +[5/12] D(c.D(0))) + a.D(c.D(0))")
    trace = prove_equal(e, f)
    assert isinstance(trace, ProofTrace)
    trace.replay()
    assert "C" in trace.rule_multiset()


def test_prove_equal_budget():
    s0 = nd("a.(D(tau.(D(b.D(0)) +[1/2] D(c.D(0)))) +[3/4] "
            "D(tau.(D(b.D(0)) +[1/2] D(c.D(0)))))")
    t0 = nd("a.(D(b.D(0)) +[1/2] D(c.D(0)))")
    with pytest.raises(BudgetExceededError):
        prove_equal(s0, t0, budget=3)


def test_trace_jsonl():
    trace = prove_equal(nd("b.D(0) + a.D(0)"), nd("a.D(0) + b.D(0)"))
    lines = trace.to_jsonl().splitlines()
    assert lines
    import json

    first = json.loads(lines[0])
    assert {"index", "rule", "direction", "position", "before",
            "after"} <= set(first)


def test_concretize_idempotent_up_to_normal_form():
    for seed in (3, 17, 40, 55):
        from probranch.harness import GenConfig, gen_p

        p = gen_p(GenConfig(seed=seed, max_complexity=7))
        pbar, _ = concretize(p)
        again, trace = concretize(pbar)
        c1, _ = canonical_pterm(pbar)
        c2, _ = canonical_pterm(again)
        assert c1 == c2


def test_concretize_partially_inert_exact_result():
    # the partially inert summand is discharged onto its stable
    # alternative (resulting in that alternative's canonical form)
    inner = "D(b.D(c.D(0)) + tau.D(d.D(0))) +[1/2] D(d.D(0))"
    state = f"tau.({inner}) + b.D(c.D(0)) + tau.D(d.D(0))"
    pbar, trace = concretize(pt(f"D({state})"))
    trace.replay()
    expected, _ = canonical_pterm(pt("D(b.D(c.D(0)) + tau.D(d.D(0)))"))
    assert pbar == expected
