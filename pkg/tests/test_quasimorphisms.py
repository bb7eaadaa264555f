import random
from fractions import Fraction
from math import gcd

import pytest
from hypothesis import given, strategies as st

from braidflow.braids import braid, make_eta
from braidflow.quasimorphisms import (
    PSL2Z,
    DomainMismatch,
    ModularElement,
    UnknownDefect,
    artin_braid,
    b3_to_modular,
    braid_to_psl,
    brooks_counting,
    combine,
    cyclic_dehn_core,
    dedekind_sum,
    defect_estimate,
    dehn_reduce,
    exponent_sum_qm,
    homogenize,
    linking_qm,
    modular_normal_form,
    psl_cyclic_core,
    psl_to_matrix,
    rademacher,
    rademacher_phi,
    rademacher_qm,
    random_word,
    surface_group,
    surface_relator,
    vanishing_combination,
)
from braidflow.words import GroupWord

T = ModularElement(1, 1, 0, 1)
S = ModularElement(0, -1, 1, 0)
B3_PATTERNS = [(1, 2, 1, 2, 1, -2), (1, 2, 1, -2, 1, -2), (1, 2, 1, 2, 1, 2, 1, -2),
               (1, 2, 1, -2, 1, -2, 1, -2)]
braid3 = st.lists(st.sampled_from([1, -1, 2, -2]), max_size=16).map(lambda xs: braid(3, xs))


def saw(x: Fraction) -> Fraction:
    if x.denominator == 1:
        return Fraction(0)
    return x - (x.numerator // x.denominator) - Fraction(1, 2)


def dedekind_brute(h, k):
    return sum(saw(Fraction(r, k)) * saw(Fraction(h * r, k)) for r in range(1, k))


def count_r_letters(m: ModularElement) -> int:
    # #R - #R^-1 on the cyclically reduced Z/2 * Z/3 normal form
    core = psl_cyclic_core(modular_normal_form(m).letters)
    if len(core) <= 1:
        return 0
    return sum(1 for x in core if x == 2) - sum(1 for x in core if x == -2)


def test_b3_to_modular_examples():
    assert b3_to_modular(braid(3, [1])) == T
    assert b3_to_modular(braid(3, [])).is_identity()
    assert b3_to_modular(braid(3, [1, 2])) == ModularElement(0, 1, -1, 1)
    with pytest.raises(Exception):
        b3_to_modular(braid(4, [1]))


def test_determinant_checked():
    with pytest.raises(ValueError):
        ModularElement(1, 1, 1, 1)


def test_rademacher_examples():
    assert rademacher(ModularElement(1, 0, 0, 1)) == 0
    assert rademacher(S) == 0
    for k in range(1, 6):
        assert rademacher(ModularElement(1, k, 0, 1)) == k
        assert rademacher(T ** k) == k


def test_dedekind_sum_matches_definition():
    for k in range(1, 40):
        for h in range(-40, 40):
            if gcd(h, k) == 1:
                assert dedekind_sum(h, k) == dedekind_brute(h, k)


def test_normal_form_examples():
    assert modular_normal_form(ModularElement(1, 0, 0, 1)).letters == ()
    assert modular_normal_form(S).letters == (1,)
    nf = modular_normal_form(T)
    assert psl_to_matrix(nf.letters) == T
    assert nf.letters == (1, 2)


@given(braid3)
def test_normal_form_two_routes(b):
    m = b3_to_modular(b)
    nf = modular_normal_form(m)
    assert nf.letters == braid_to_psl(b)
    assert psl_to_matrix(nf.letters) == m


@given(braid3)
def test_rademacher_is_signed_r_count(b):
    m = b3_to_modular(b)
    assert rademacher(m) == count_r_letters(m)


@given(braid3)
def test_rademacher_is_limit_of_phi(b):
    m = b3_to_modular(b)
    k = 40
    assert abs(rademacher_phi(m ** k) / k - rademacher(m)) <= Fraction(6, k)


def test_rademacher_homogeneous_and_conjugation_invariant():
    rng = random.Random(8)
    checked = 0
    while checked < 1000:
        m = b3_to_modular(braid(3, [rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(1, 14))]))
        g = b3_to_modular(braid(3, [rng.choice([1, -1, 2, -2]) for _ in range(rng.randint(0, 14))]))
        assert rademacher(g @ m @ g.inverse()) == rademacher(m)
        if abs(m.trace) >= 2:
            k = rng.randint(2, 10)
            assert rademacher(m ** k) == k * rademacher(m)
        checked += 1


def test_dehn_reduce_examples():
    r = surface_relator(2)
    assert dehn_reduce(GroupWord(4, r), 2).letters == ()
    assert dehn_reduce(GroupWord(4, (1,)), 2).letters == (1,)
    first5 = GroupWord(4, r[:5])
    other = GroupWord(4, tuple(-x for x in reversed(r[5:])))
    assert dehn_reduce(first5, 2) == dehn_reduce(other, 2) == other


def _relator_pieces(genus):
    r = surface_relator(genus)
    r_inv = tuple(-x for x in reversed(r))
    pieces = set()
    for rel in (r, r_inv):
        for i in range(len(rel)):
            rot = rel[i:] + rel[:i]
            pieces.add(rot[: 2 * genus + 1])
    return pieces


@pytest.mark.parametrize("genus", [2, 3])
def test_dehn_reduce_output_is_dehn_reduced(genus):
    rng = random.Random(genus)
    pieces = _relator_pieces(genus)
    m = 2 * genus + 1
    r = surface_relator(genus)
    for _ in range(500):
        letters = []
        for _ in range(rng.randint(1, 6)):
            if rng.random() < 0.4:
                k = rng.randrange(len(r))
                letters.extend(r[k:] + r[:k] if rng.random() < 0.5 else
                               tuple(-x for x in reversed(r[k:] + r[:k])))
            else:
                letters.extend(rng.choice([1, -1]) * rng.randint(1, 2 * genus)
                               for _ in range(rng.randint(1, 6)))
        out = dehn_reduce(GroupWord(2 * genus, tuple(letters)), genus).letters
        assert all(out[i:i + m] not in pieces for i in range(len(out) - m + 1))
        assert all(a != -b for a, b in zip(out, out[1:]))


def test_dehn_reduce_solves_trivial_words():
    rng = random.Random(3)
    r = surface_relator(2)
    for _ in range(500):
        letters = []
        for _ in range(rng.randint(1, 4)):
            g = [rng.choice([1, -1]) * rng.randint(1, 4) for _ in range(rng.randint(0, 5))]
            rel = r if rng.random() < 0.5 else tuple(-x for x in reversed(r))
            k = rng.randrange(8)
            letters += g + list(rel[k:] + rel[:k]) + [-x for x in reversed(g)]
        assert dehn_reduce(GroupWord(4, tuple(letters)), 2).letters == ()


def test_brooks_examples():
    p = (1, 2, 1, 2, 1, -2)
    for domain in (PSL2Z, surface_group(2)):
        pat = p if domain == PSL2Z else (1, 2, -1, 3)
        inv = GroupWord(domain.alphabet_size, pat) ** -1
        q = brooks_counting(pat, domain, homogeneous=False)
        assert q(GroupWord(domain.alphabet_size, pat)) == 1
        if domain == PSL2Z:
            inv = GroupWord(2, tuple(1 if x == 1 else -x for x in reversed(pat)))
        assert q(inv) == -1
    q = brooks_counting((1, 2, -1, -2), surface_group(2))
    assert q(GroupWord(4, (1, 2, -1, -2) * 3)) == 3


def test_brooks_pattern_errors():
    with pytest.raises(ValueError):
        brooks_counting((), PSL2Z)
    with pytest.raises(ValueError):
        brooks_counting((1, 2, 1, 2), PSL2Z)
    with pytest.raises(ValueError):
        brooks_counting((1, 1, 2), PSL2Z)


@pytest.mark.parametrize("pattern", B3_PATTERNS)
@given(b=braid3, k=st.integers(1, 6))
def test_brooks_homogeneous_and_antisymmetric(pattern, b, k):
    q = brooks_counting(pattern, artin_braid(3))
    assert q(b ** k) == k * q(b)
    assert q(~b) == -q(b)


@given(st.lists(st.sampled_from([1, -1, 2, -2, 3, -3, 4, -4]), max_size=20), st.integers(1, 4))
def test_surface_brooks_antisymmetric(letters, k):
    q = brooks_counting((1, 2, -1, 3), surface_group(2))
    w = GroupWord(4, tuple(letters))
    assert q(w ** -1) == -q(w)
    core = cyclic_dehn_core(w, 2)
    assert len(core) <= len(dehn_reduce(w, 2))


def test_homogenize_examples():
    q = exponent_sum_qm(3)
    assert homogenize(q, braid(3, [1, 2, 2]), 5) == (3.0, 0.0)
    r = rademacher_qm()
    value, err = homogenize(r, braid(3, []), 10)
    assert value == 0 and err == pytest.approx(0.6)
    value, err = homogenize(r, braid(3, [1]), 64)
    assert abs(value - 1) <= err == 6 / 64
    nonov = brooks_counting((1, 2, 1, 2, 1, -2), PSL2Z, overlapping=False)
    with pytest.raises(UnknownDefect):
        homogenize(nonov, GroupWord(2, (1, 2)), 4)


def declared_family():
    fam = [rademacher_qm(), exponent_sum_qm(3), linking_qm(1, 2, 2)]
    fam += [brooks_counting(p, artin_braid(3)) for p in B3_PATTERNS]
    fam += [brooks_counting(p, artin_braid(3), homogeneous=False) for p in B3_PATTERNS]
    fam += [brooks_counting(p, PSL2Z, homogeneous=h) for p in B3_PATTERNS[:2] for h in (True, False)]
    fam += [brooks_counting((1, 2, -1, 3), surface_group(2), homogeneous=h) for h in (True, False)]
    return fam


@pytest.mark.parametrize("q", declared_family(), ids=lambda q: f"{q.name}-{q.domain}-{q.homogeneous}")
def test_defect_estimate_below_declared_bound(q):
    if q.name.startswith("lk"):
        def sampler(rng):
            return GroupWord(1, (rng.choice([1, -1]),) * (2 * rng.randint(0, 5)))
        assert defect_estimate(q, sampler, trials=1000) == 0
        return
    trials = 10_000 if q.domain.kind != "surface_group" else 3000
    est = defect_estimate(q, trials=trials)
    assert est <= q.defect_bound
    if q.defect_bound == 0:
        assert est == 0


def test_rademacher_defect_on_short_pairs():
    q = rademacher_qm()
    est = defect_estimate(q, lambda r: random_word(artin_braid(3), r, 20), trials=2000)
    assert 0 < est <= q.defect_bound


def test_vanishing_combination_examples():
    t = braid(3, [1])
    q = exponent_sum_qm(3)
    assert vanishing_combination([q, q], [t]) is None

    q1 = exponent_sum_qm(3)
    q2 = rademacher_qm()
    combo = vanishing_combination([q1, q2], [t])
    assert combo is not None and combo(t) == 0
    assert combo.defect_bound == 6.0
    probe = braid(3, [2, 2, 1])
    assert combo(probe) == q1(probe) - q2(probe)


def test_vanishing_combination_on_eta_images():
    family = [brooks_counting(p, PSL2Z) for p in
              [(1, 2), (1, -2), (1, 2, 1, -2, 1, -2), (1, 2, 1, 2, 1, -2),
               (1, 2, 1, 2, 1, 2, 1, -2), (1, 2, 1, -2, 1, -2, 1, -2)]]
    targets = [modular_normal_form(b3_to_modular(make_eta(i, 3))) for i in (2, 3)]
    combo = vanishing_combination(family, targets)
    assert combo is not None
    assert all(combo(t) == 0 for t in targets)


def test_vanishing_combination_domain_errors():
    with pytest.raises(DomainMismatch):
        vanishing_combination([exponent_sum_qm(3), exponent_sum_qm(4)], [braid(3, [1])])
    with pytest.raises(DomainMismatch):
        combine([exponent_sum_qm(3), brooks_counting((1, 2), PSL2Z)], [1, 1])
    with pytest.raises(ValueError):
        vanishing_combination([exponent_sum_qm(3)], [])
