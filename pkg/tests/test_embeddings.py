import itertools

import pytest
from hypothesis import given, settings, strategies as st

from lipcheck.embeddings import (
    BATTERY_SEED,
    ConstructionError,
    DichotomyError,
    FamilySpec,
    build_family,
    check_prop31,
    check_prop42,
    check_thm34,
    check_thm37,
    check_thm43,
    check_thm45,
    check_thm46,
    coefficient_norm,
    ell1_sign_check,
    first_primes,
    main_theorem_pipeline,
    prime_orbits,
    report_json,
    run_checker,
    standard_battery,
    standard_family,
    verify_isometry,
    verify_standard,
)
from lipcheck.lipfun import combine, defect, lip_norm, lipfn, pointwise_sup, slope
from lipcheck.metric import (
    ModelError,
    PreconditionError,
    TailDataError,
    _seq_model,
    catalog,
    integer_line,
    power_line,
    truncate,
)
from lipcheck.rational import ONE, ZERO, rat

INTLINE10 = truncate(integer_line(), 10)
DISCRETE10 = truncate(catalog("discrete"), 10)
EX33_10 = truncate(catalog("example33"), 10)
EX35_10 = truncate(catalog("example35"), 10)


# ---------------------------------------------------------------------------
# helpers


def test_first_primes():
    assert first_primes(5) == [2, 3, 5, 7, 11]


def test_prime_orbits():
    assert prime_orbits(1) == []
    assert prime_orbits(4) == [(2, (2, 4))]
    assert prime_orbits(30) == [(2, (2, 4, 8, 16)), (3, (3, 9, 27)), (5, (5, 25))]


def test_standard_battery_shape():
    batt = standard_battery(3)
    assert len(batt) == 27 + 100
    assert all(len(vec) == 3 for vec in batt)
    assert tuple([ZERO] * 3) in batt
    # the random tail keeps entries in [-3, 3] and is seed-deterministic
    assert all(abs(a) <= rat(3) for vec in batt for a in vec)
    assert batt == standard_battery(3)
    assert batt != standard_battery(3, seed=BATTERY_SEED + 1)
    big = standard_battery(8)
    assert len(big) == 3 ** 5 + 100  # sign part clipped to the first 5 slots


def test_coefficient_norm():
    assert coefficient_norm((rat(1, 2), rat(-2)), "sup-norm") == rat(2)
    assert coefficient_norm((rat(1, 2), rat(-2)), "sum-norm") == rat(5, 2)
    with pytest.raises(PreconditionError):
        coefficient_norm((ONE,), "euclid")


# ---------------------------------------------------------------------------
# hypothesis checkers


def test_check_prop31_star_passes():
    star = truncate(catalog("prop23"), 8)
    points = tuple(range(1, 8))
    partners = tuple(0 for _ in points)
    assert check_prop31(star, points, partners)


def test_check_prop31_integer_line_passes():
    points = (1, 3, 5, 7, 9)
    partners = (0, 2, 4, 6, 8)
    assert check_prop31(INTLINE10, points, partners)


def test_check_prop31_example33_separation_fails():
    res = check_prop31(EX33_10, (1, 2), (2, 3))
    assert not res
    assert res.clause == "separation"
    assert res.witness_indices == (1, 2)
    assert res.witness_values == (rat(3, 2), rat(3, 2) + rat(4, 3))


def test_check_prop31_radius_clause():
    res = check_prop31(INTLINE10, (1,), (3,))
    assert not res
    assert res.clause == "radius"
    assert res.witness_values == (rat(2), ONE)


def test_check_prop31_anchor_validation():
    with pytest.raises(PreconditionError):
        check_prop31(INTLINE10, (1, 1), (2, 2))
    with pytest.raises(PreconditionError):
        check_prop31(INTLINE10, (1,), (1,))
    with pytest.raises(PreconditionError):
        check_prop31(INTLINE10, (1, 2), (0,))


def test_check_thm34_discrete_passes():
    pairs = ((1, 2), (3, 4), (5, 6))
    assert check_thm34(DISCRETE10, pairs)


def test_check_thm34_example35_cross_gap():
    res = check_thm34(EX35_10, ((1, 2), (3, 4)))
    assert not res
    assert res.clause == "cross-gap"
    # pair distances 5/2 and 19/12 against twice the closest cross distance
    assert res.witness_values == (rat(49, 12), rat(7, 2))


def test_check_thm34_radius_clause():
    res = check_thm34(INTLINE10, ((1, 4),))
    assert not res
    assert res.clause == "radius"
    assert res.witness_values == (ONE, rat(3, 2))


def test_check_thm37_example35_passes():
    pairs = ((1, 2), (3, 4), (5, 6), (7, 8))
    assert check_thm37(EX35_10, pairs)


def test_check_thm37_example48_fails():
    res = check_thm37(truncate(catalog("example48"), 12), ((1, 2), (3, 4)))
    assert not res
    assert res.clause == "qq"
    assert res.witness_indices == (0, 1)


def test_check_thm37_pair_radius_clause():
    res = check_thm37(INTLINE10, ((1, 5),))
    assert not res
    assert res.clause == "pair-radius"
    assert res.witness_values == (rat(4), rat(2))


def test_check_prop42_integer_line_passes():
    assert check_prop42(INTLINE10, (1, 3, 5, 7, 9))


def test_check_prop42_discrete_fails():
    res = check_prop42(DISCRETE10, (1, 2, 3, 4))
    assert not res
    assert res.clause == "separation"
    assert res.witness_values == (ONE, rat(2))


def test_check_prop42_example33_fails():
    res = check_prop42(EX33_10, (1, 2, 3))
    assert not res
    assert res.clause == "separation"


def test_check_thm43_dmqr41_passes():
    assert check_thm43(catalog("dmqr41"), 30)


def test_check_thm43_requires_tails():
    with pytest.raises(TailDataError):
        check_thm43(catalog("dmqr44", c=1), 10)


def test_check_thm43_monotone_tail_declaration():
    model = _seq_model(
        "undeclared-tails",
        {},
        seq_dist=lambda n, m: ONE + rat(1, max(n, m)),
        L_pair=lambda n: ONE,
        L=ONE,
    )
    res = check_thm43(model, 8)
    assert not res
    assert res.clause == "monotone-tail-undeclared"


def test_check_thm43_finite_monotone_violation():
    def srule(n, m):
        lo, hi = min(n, m), max(n, m)
        if (lo, hi) == (1, 2):
            return rat(5, 4)
        return ONE + rat(1, hi)

    model = _seq_model(
        "bump", {}, seq_dist=srule, L_pair=lambda n: ONE, L=ONE, monotone_tails=True
    )
    res = check_thm43(model, 6)
    assert not res
    assert res.clause == "monotone"
    assert res.witness_indices == (1, 2)
    assert res.witness_values == (rat(5, 4), rat(4, 3))


def test_check_thm45_example44_passes():
    model = catalog("example44")
    assert check_thm45(model, range(2, model.n_seq(30) + 1), 30)


def test_check_thm45_rejects_first_index():
    # the first sequence point is closer to the tail than to the base
    res = check_thm45(catalog("example44"), (1, 2, 3), 30)
    assert not res
    assert res.clause == "radius-equality"
    assert res.witness_indices == (1,)
    assert res.witness_values == (rat(3, 2), rat(31, 30))


def test_check_thm45_needs_base_limit():
    with pytest.raises(TailDataError):
        check_thm45(catalog("dmqr41"), (2, 3, 4), 10)


def test_check_thm45_positive_limit():
    res = check_thm45(catalog("prop24"), (1, 2, 3), 10)
    assert not res
    assert res.clause == "positive-limit"


def test_check_thm45_subseq_validation():
    model = catalog("example44")
    with pytest.raises(PreconditionError):
        check_thm45(model, (3, 2), 10)
    with pytest.raises(PreconditionError):
        check_thm45(model, (2, 99), 10)
    with pytest.raises(PreconditionError):
        check_thm45(model, (2,), 10)


def test_check_thm46_dmqr44_passes():
    model = catalog("dmqr44", c=1)
    assert check_thm46(model, model.eps, 20)


def test_check_thm46_eps_mismatch():
    model = catalog("dmqr44", c=1)

    def off_by_one(n):
        return model.eps(n) + (rat(1, 100) if n == 3 else ZERO)

    with pytest.raises(TailDataError):
        check_thm46(model, off_by_one, 20)


def test_check_thm46_needs_ratio_declaration():
    with pytest.raises(TailDataError):
        check_thm46(catalog("example44"), lambda n: rat(1, 10), 10)


def test_check_thm46_rejects_negative_eps():
    model = catalog("dmqr44", c=1)
    with pytest.raises(PreconditionError):
        check_thm46(model, lambda n: -ONE, 10)


def test_check_thm46_eps_list_form():
    model = catalog("dmqr44", c=1)
    eps = [model.eps(n) for n in range(1, model.n_seq(12) + 1)]
    assert check_thm46(model, eps, 12)
    with pytest.raises(PreconditionError):
        check_thm46(model, eps[:3], 12)


# ---------------------------------------------------------------------------
# build_family gatekeeping


def test_build_family_runs_checker():
    spec = FamilySpec("prop42", DISCRETE10, anchors=(1, 2, 3))
    with pytest.raises(PreconditionError):
        build_family(spec)
    fns = build_family(spec, override=True)
    assert len(fns) == 3
    assert fns[0].values[1] == ONE  # spike at the radius


def test_build_family_rejects_base_anchor():
    spec = FamilySpec("prop23", DISCRETE10, anchors=(0, 1))
    with pytest.raises(PreconditionError):
        build_family(spec)


def test_build_family_unknown_id():
    with pytest.raises(PreconditionError):
        build_family(FamilySpec("thm99", DISCRETE10))


# ---------------------------------------------------------------------------
# standard families: exact constructions


EXACT_IDS = ("prop23", "prop31", "thm34", "thm37", "prop42", "thm51", "prop53")


@pytest.mark.parametrize("tid", EXACT_IDS)
def test_standard_exact_families(tid):
    built = standard_family(tid)
    if built.checker is not None:
        assert built.checker.ok
    report = verify_standard(built)
    assert report.exact_pass
    assert report.expectation_pass
    assert report.worst_defect == ZERO
    assert report.failures == ()
    assert report.seed == BATTERY_SEED


def test_standard_family_sizes_and_targets():
    assert standard_family("prop23").size == 15
    assert standard_family("thm34").size == 7
    assert standard_family("thm37").size == 4
    assert standard_family("thm51").target == "sum-norm"
    assert standard_family("prop53").target == "sum-norm"
    assert standard_family("thm43").members == (2, 3, 5)
    assert standard_family("thm46").members == (2, 3)


def test_thm57_deflated():
    built = standard_family("thm57")
    assert built.size == 3  # sign depth carried by eight groups
    report = verify_standard(built)
    assert not report.exact_pass  # norms deflate by the truncation factor
    assert report.expectation_pass
    a = (rat(1), rat(-1), rat(1))
    f = combine(built.functions, a)
    scale = ONE - rat(1, 256)
    assert lip_norm(f) == rat(3) * scale
    assert pointwise_sup(f, 0) == rat(3) * scale  # zero defect at the base
    assert rat(3) - pointwise_sup(f, 0) == rat(3, 256)
    # the witness pair is the deepest point of the sign-matched group
    pr = built.expectation.witness_pair(a)
    assert slope(f, pr[0], pr[1]) == rat(3) * scale


# ---------------------------------------------------------------------------
# standard families: asymptotic constructions


def test_thm43_frozen_oracle():
    built = standard_family("thm43", N=30)
    assert built.members == (2, 3, 5)
    assert built.checker.ok
    a = (rat(1), rat(-1), rat(1))
    f = combine(built.functions, a)
    assert lip_norm(f) == rat(27, 28)
    assert abs(slope(f, 1, 15)) == rat(16, 17)  # head pair of the first member
    assert pointwise_sup(f, 1) == rat(25, 26)
    assert defect(f, 1) == rat(1, 364)
    report = verify_standard(built)
    assert not report.exact_pass
    assert report.expectation_pass
    assert report.failures == ()


def test_thm43_norm_gap_nonincreasing():
    # with the member set and coefficients fixed, larger truncations only add
    # slope pairs, so the gap to the target norm can only shrink
    a = (rat(1), rat(-1))
    gaps = []
    for n_points in (20, 25, 30):
        built = standard_family("thm43", N=n_points)
        f = combine(built.functions[:2], a)
        gaps.append(ONE - lip_norm(f))
    assert gaps[0] >= gaps[1] >= gaps[2]
    assert gaps[0] == rat(1, 17)
    assert gaps[2] == rat(1, 28)


def test_thm45_frozen_oracle():
    built = standard_family("thm45", N=30)
    assert built.checker.ok
    a = (rat(1), rat(-1), rat(0))
    f = combine(built.functions, a)
    assert lip_norm(f) == rat(45, 46)
    assert pointwise_sup(f, 0) == rat(14, 15)
    assert defect(f, 0) == rat(31, 690)
    # deepest orbit point of the first member against the base
    assert abs(slope(f, 17, 0)) == rat(17, 19)
    report = verify_standard(built)
    assert not report.exact_pass
    assert report.expectation_pass


def test_thm46_frozen_oracle():
    built = standard_family("thm46", N=20)
    assert built.checker.ok
    f = combine(built.functions, (rat(1), rat(0)))
    # shifted distances: g_2 = 5/3, g_4 = 18/5, g_16 = 264/17; the deepest
    # orbit point dominates: (5/3 + 264/17) / (18 - 8/17) = 877/894
    assert abs(slope(f, 2, 4)) == rat(79, 84)
    assert lip_norm(f) == rat(877, 894)
    assert abs(slope(f, 2, 16)) == rat(877, 894)
    assert defect(f, 2) == ZERO  # the head-to-deepest pair attains the norm
    report = verify_standard(built)
    assert not report.exact_pass
    assert report.expectation_pass


# ---------------------------------------------------------------------------
# isometry verification plumbing


def test_verify_isometry_reports_failures():
    space = truncate(catalog("prop23"), 4)
    vals = [ZERO] * 4
    vals[1] = rat(2)  # twice the radius: the spike is too tall
    from lipcheck.embeddings import Expectation

    fam = (lipfn(space, vals),)
    report = verify_isometry(fam, "sup-norm", ((ONE,),), Expectation("exact"))
    assert not report.exact_pass
    assert not report.expectation_pass
    assert report.failures
    assert report.worst_defect == ONE


def test_verify_isometry_rejects_bad_input():
    from lipcheck.embeddings import Expectation

    with pytest.raises(PreconditionError):
        verify_isometry((), "sup-norm", ((ONE,),), Expectation("exact"))
    built = standard_family("thm34", N=6)
    with pytest.raises(PreconditionError):
        verify_isometry(built.functions, "sup-norm", ((ONE, ONE),), Expectation("weird"))


def test_witness_records_orientation():
    built = standard_family("thm34", N=6)
    report = verify_standard(built)
    for rec in report.witnesses:
        if rec.norm > ZERO and rec.pair is not None:
            f = combine(built.functions, rec.coeffs)
            assert slope(f, rec.pair[0], rec.pair[1]) == rec.norm


def test_report_json_shape():
    built = standard_family("thm34")
    report = verify_standard(built)
    js = report_json("thm34", "discrete", 16, built.checker, report)
    assert js["checker"] is True
    assert js["exact_pass"] is True
    assert js["worst_defect"] == "0"
    assert js["coeff_count"] == len(report.coefficient_set)
    assert len(js["witness_samples"]) == 5
    assert js["witness_samples"][0]["norm"] == "1"  # battery starts all-minus-one


# ---------------------------------------------------------------------------
# coherence between checkers and sign-vector verification


COHERENCE_CASES = [
    ("prop31", truncate(catalog("prop23"), 8), (tuple(range(1, 8)), (0,) * 7), True),
    ("prop31", EX33_10, ((1, 2), (2, 3)), False),
    ("thm34", DISCRETE10, ((1, 2), (3, 4)), True),
    ("thm34", EX35_10, ((1, 2), (3, 4)), False),
    ("thm37", EX35_10, ((1, 2), (3, 4), (5, 6), (7, 8)), True),
    ("thm37", truncate(catalog("example48"), 12), ((1, 2), (3, 4)), False),
    ("prop42", INTLINE10, (1, 3, 5, 7, 9), True),
    ("prop42", DISCRETE10, (1, 2, 3, 4), False),
    ("prop42", EX33_10, (1, 2, 3), False),
]


@pytest.mark.parametrize("tid,space,anchors,expected", COHERENCE_CASES)
def test_checker_coheres_with_sign_vectors(tid, space, anchors, expected):
    spec = FamilySpec(tid, space, anchors=anchors)
    res = run_checker(spec)
    assert res.ok is expected
    fns = build_family(spec, override=True)
    all_exact = True
    for signs in itertools.product((-1, 0, 1), repeat=len(fns)):
        coeffs = tuple(rat(s) for s in signs)
        if lip_norm(combine(fns, coeffs)) != coefficient_norm(coeffs, "sup-norm"):
            all_exact = False
            break
    assert all_exact is expected


# ---------------------------------------------------------------------------
# main pipeline


def test_pipeline_dmqr41_takes_first_route():
    res = main_theorem_pipeline(catalog("dmqr41"), 30)
    assert res.case == "I-(i)"
    assert res.subspace == tuple(range(30))
    assert len(res.family) == 3
    eps, g = res.data["eps"], res.data["g"]
    assert eps[2] == ONE and eps[3] == rat(5, 6) and eps[4] == rat(3, 4)
    assert eps[10] == rat(3, 5)
    assert all(v == rat(1, 2) for v in g.values())
    assert res.report.expectation_pass
    case, subspace, family, report = res
    assert case == "I-(i)" and len(family) == 3 and report is res.report


def test_pipeline_example35_boundary_equalities():
    # pair gaps meet tail gaps exactly, so the combined norms reach the
    # target already at finite scale even on this route
    res = main_theorem_pipeline(catalog("example35"), 12)
    assert res.case == "I-(i)"
    assert res.report.expectation_pass
    assert res.report.exact_pass


def test_pipeline_example48_takes_second_route():
    res = main_theorem_pipeline(catalog("example48"), 30)
    assert res.case == "I-(ii)"
    assert res.data["sigma"] == (1, 5, 9, 13, 17, 21, 25, 29)
    assert res.data["tau"] == (2, 6, 10, 14, 18, 22, 26, 30)
    assert res.data["eps"][0] == rat(1, 54)
    assert res.data["eps"][1] == rat(1, 4374)
    assert res.data["base"] == 3
    assert res.subspace[:3] == (2, 0, 1)
    f1 = res.family[0]
    assert f1.values[1] == rat(11, 18)
    assert f1.values[2] == rat(-5, 6)
    assert len(res.family) == 8
    assert res.report.exact_pass
    assert res.report.expectation_pass


def test_pipeline_example33_takes_second_route():
    res = main_theorem_pipeline(catalog("example33"), 30)
    assert res.case == "I-(ii)"
    assert res.data["sigma"] == (1, 13)
    assert res.data["tau"] == (2, 14)
    assert res.data["eps"] == (rat(1, 12), rat(1, 84))
    assert res.data["base"] == 3
    f1 = res.family[0]
    assert f1.values[1] == rat(5, 4)
    assert f1.values[2] == rat(-3, 4)
    assert res.report.exact_pass


def test_pipeline_dichotomy_must_be_uniform():
    def srule(n, m):
        if {n, m} == {1, 2}:
            return rat(3)
        return rat(2) - rat(1, n + m)

    model = _seq_model(
        "mixed-gaps", {}, seq_dist=srule, L_pair=lambda n: rat(2), L=rat(2)
    )
    with pytest.raises(DichotomyError) as err:
        main_theorem_pipeline(model, 8)
    assert "(1, 2)" in str(err.value) and "(1, 3)" in str(err.value)


def test_pipeline_case_ii_integer_line():
    res = main_theorem_pipeline(integer_line(), 60)
    assert res.case == "II"
    assert res.subspace == (0, 2, 9, 55)
    assert res.data["c"] == (ONE, ONE, rat(6), rat(40))
    assert len(res.family) == 1
    f = res.family[0]
    assert f.values[1] == ONE and f.values[3] == rat(-40)
    assert lip_norm(f) == rat(20, 23)
    assert pointwise_sup(f, 1) == rat(41, 53)
    assert defect(f, 1) == rat(117, 1219)
    assert res.report.expectation_pass


def test_pipeline_case_ii_power_line():
    res = main_theorem_pipeline(power_line(4), 30)
    assert res.case == "II"
    assert res.subspace == (0, 1, 2, 4, 6, 8, 10, 12, 15, 18, 21, 24, 27)
    assert res.data["c"][:4] == (ONE, rat(2), rat(10), rat(230))
    assert len(res.family) == 2
    assert res.report.expectation_pass
    # weight sums meet the distances exactly here, so aligned coefficients
    # attain the target norm on the truncation
    f = combine(res.family, (ONE, ONE))
    assert lip_norm(f) == ONE
    assert abs(slope(f, 2, 3)) == ONE  # the equality pair c_3 + c_4 = d


def test_pipeline_case_ii_needs_an_orbit():
    with pytest.raises(ConstructionError):
        main_theorem_pipeline(integer_line(), 3)


def test_pipeline_rejects_nonsequence_models():
    with pytest.raises(ModelError):
        main_theorem_pipeline(catalog("thm51star", levels=3), 8)


# ---------------------------------------------------------------------------
# sign-pattern check for sum-norm families


def test_ell1_sign_check_matched():
    built = standard_family("thm51")
    a = (rat(1), rat(-1), rat(1), ZERO, ZERO)
    # bits 1, 3, 4, 5 set: members one and three positive, zeros count as +
    g0 = 1 + 4 + 8 + 16
    pair = (2 * g0, 2 * g0 + 1)
    assert ell1_sign_check(built.functions, a, pair)
    assert ell1_sign_check(built.functions, a, pair, require_strong=True)
    flipped = (rat(1), rat(1), rat(1), ZERO, ZERO)
    assert not ell1_sign_check(built.functions, flipped, pair)


def test_ell1_sign_check_single_member():
    built = standard_family("thm51")
    pair = (2, 3)  # group 1 has its first bit set
    assert ell1_sign_check(built.functions[:1], (ONE,), pair, require_strong=True)


def test_ell1_sign_check_require_strong():
    built = standard_family("thm51")
    a = (rat(1), rat(-1), rat(1), ZERO, ZERO)
    with pytest.raises(PreconditionError):
        ell1_sign_check(built.functions, a, (0, 1), require_strong=True)


def test_ell1_sign_check_coeff_count():
    built = standard_family("thm51")
    with pytest.raises(PreconditionError):
        ell1_sign_check(built.functions[:2], (ONE, ONE, ONE), (2, 3))


THM51_L4 = standard_family("thm51", levels=4)


@settings(deadline=None, max_examples=60)
@given(
    st.lists(st.sampled_from([-1, 0, 1]), min_size=4, max_size=4),
    st.integers(min_value=0, max_value=15),
)
def test_ell1_check_matches_strong_attainment(signs, group):
    # the sign check answers True exactly when the pair's slope reaches the
    # combined norm
    coeffs = tuple(rat(s) for s in signs)
    pair = (2 * group, 2 * group + 1)
    f = combine(THM51_L4.functions, coeffs)
    attained = slope(f, pair[0], pair[1]) == lip_norm(f)
    assert ell1_sign_check(THM51_L4.functions, coeffs, pair) is attained


THM34_FAMILY = standard_family("thm34")


@settings(deadline=None, max_examples=60)
@given(
    st.lists(
        st.tuples(st.integers(-30, 30), st.integers(1, 15)),
        min_size=7,
        max_size=7,
    )
)
def test_thm34_isometry_on_random_rationals(entries):
    coeffs = tuple(rat(n, d) for n, d in entries)
    f = combine(THM34_FAMILY.functions, coeffs)
    assert lip_norm(f) == coefficient_norm(coeffs, "sup-norm")
