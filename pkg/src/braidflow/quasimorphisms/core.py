"""Quasimorphism records, Brooks counting, homogenization and vanishing combinations."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import sympy

from ..braids import BraidWord, linking_matrix
from ..words import GroupWord, _reduce_letters, exponent_sum as _word_exponent_sum
from .modular import (
    ModularElement,
    b3_to_modular,
    braid_to_psl,
    psl_cyclic_core,
    psl_inverse,
    psl_reduce,
    rademacher as _rademacher,
)
from .surface import cyclic_dehn_core, dehn_reduce


class DomainMismatch(ValueError):
    pass


class UnknownDefect(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    kind: str  # artin_braid, spherical_braid, surface_group, psl2z
    param: int = 0

    def __post_init__(self):
        if self.kind not in ("artin_braid", "spherical_braid", "surface_group", "psl2z"):
            raise ValueError(f"unknown domain kind {self.kind!r}")

    @property
    def alphabet_size(self) -> int:
        if self.kind in ("artin_braid", "spherical_braid"):
            return self.param - 1
        if self.kind == "surface_group":
            return 2 * self.param
        return 2

    def __str__(self) -> str:
        return "psl2z" if self.kind == "psl2z" else f"{self.kind}({self.param})"


def artin_braid(n: int) -> Domain:
    return Domain("artin_braid", n)


def surface_group(g: int) -> Domain:
    return Domain("surface_group", g)


PSL2Z = Domain("psl2z")


def _as_word(domain: Domain, w) -> GroupWord:
    if isinstance(w, BraidWord):
        w = w.word
    elif isinstance(w, ModularElement):
        from .modular import modular_normal_form
        w = modular_normal_form(w)
    elif not isinstance(w, GroupWord):
        w = GroupWord(domain.alphabet_size, tuple(w))
    if w.alphabet_size != domain.alphabet_size:
        raise DomainMismatch(f"word over {w.alphabet_size} letters given to a {domain} evaluator")
    return w


@dataclass(frozen=True)
class Quasimorphism:
    """A named evaluator with its declared defect bound (``None`` = unknown)."""

    name: str
    evaluate: Callable[[GroupWord], object] = field(repr=False, compare=False)
    defect_bound: float | None
    homogeneous: bool
    domain: Domain
    integer_valued: bool = True

    def __call__(self, w):
        return self.evaluate(_as_word(self.domain, w))

    def value(self, w) -> float:
        return float(self(w))


# --- elementary evaluators --------------------------------------------------

def exponent_sum_qm(n: int) -> Quasimorphism:
    return Quasimorphism("expsum", _word_exponent_sum, 0.0, True, artin_braid(n))


def rademacher_qm() -> Quasimorphism:
    """Rademacher on B_3, pulled back along B_3 -> PSL(2,Z); defect 6."""
    def ev(w: GroupWord) -> int:
        return _rademacher(b3_to_modular(BraidWord(3, w)))
    return Quasimorphism("rademacher", ev, 6.0, True, artin_braid(3))


def linking_qm(i: int, j: int, n: int) -> Quasimorphism:
    """Linking number of strands ``i`` and ``j`` (1-based), defined on pure braids."""
    if not (1 <= i <= n and 1 <= j <= n and i != j):
        raise ValueError(f"bad strand pair ({i}, {j}) for n={n}")

    def ev(w: GroupWord) -> int:
        return int(linking_matrix(BraidWord(n, w))[i - 1, j - 1])
    return Quasimorphism(f"lk{i}{j}", ev, 0.0, True, artin_braid(n))


# --- Brooks counting --------------------------------------------------------

def _is_proper_power(p: Sequence[int]) -> bool:
    n = len(p)
    return any(n % d == 0 and tuple(p[:d]) * (n // d) == tuple(p) for d in range(1, n))


def count_linear(word: Sequence[int], pattern: Sequence[int], overlapping: bool = True) -> int:
    p = tuple(pattern)
    m = len(p)
    w = tuple(word)
    count, i = 0, 0
    while i + m <= len(w):
        if w[i:i + m] == p:
            count += 1
            i += 1 if overlapping else m
        else:
            i += 1
    return count


def count_cyclic(core: Sequence[int], pattern: Sequence[int], overlapping: bool = True) -> int:
    """Occurrences of ``pattern`` starting at each position of the cyclic word."""
    n = len(core)
    if n == 0:
        return 0
    m = len(pattern)
    reps = -(-(n + m - 1) // n)
    w = tuple(core) * reps
    p = tuple(pattern)
    if overlapping:
        return sum(1 for i in range(n) if w[i:i + m] == p)
    # left-to-right on the core itself, no wrap-around
    return count_linear(core, pattern, overlapping=False)


def brooks_counting(
    pattern,
    domain: Domain,
    homogeneous: bool = True,
    overlapping: bool = True,
) -> Quasimorphism:
    """Signed count of ``pattern`` minus ``pattern^-1`` in normal forms.

    Overlapping occurrences are counted by default; the homogeneous version
    counts on the cyclically reduced core, which makes it exactly homogeneous.
    Pattern letters are S/R letters (``1``, ``+-2``) for ``psl2z`` and for
    ``artin_braid(3)`` (pulled back through PSL(2,Z)), and surface generators
    for ``surface_group(g)``.  The non-overlapping convention has no declared
    defect bound.
    """
    p = tuple(pattern.letters if isinstance(pattern, GroupWord) else pattern)
    if not p:
        raise ValueError("empty Brooks pattern")
    if _is_proper_power(p):
        raise ValueError(f"pattern {p} is a proper power")

    if domain.kind == "psl2z" or domain == artin_braid(3):
        if psl_reduce(p) != p:
            raise ValueError(f"pattern {p} is not a PSL(2,Z) normal form")
        inv = psl_inverse(p)
        if domain.kind == "psl2z":
            normal = lambda w: psl_reduce(w.letters)
        else:
            normal = lambda w: braid_to_psl(BraidWord(3, w))
        cyclic = psl_cyclic_core
        raw_bound = 3.0 * len(p)
    elif domain.kind == "surface_group":
        g = domain.param
        if len(p) > 2 * g and dehn_reduce(GroupWord(2 * g, p), g).letters != p:
            raise ValueError(f"pattern {p} is not Dehn reduced")
        if _reduce_letters(p) != p:
            raise ValueError(f"pattern {p} is not freely reduced")
        inv = tuple(-x for x in reversed(p))
        normal = lambda w: dehn_reduce(w, g).letters
        cyclic = lambda letters: cyclic_dehn_core(GroupWord(2 * g, letters), g).letters
        # free-group bound with a margin for cancellations across one relator
        raw_bound = 3.0 * (len(p) + 2 * g)
    else:
        raise DomainMismatch(f"no Brooks counting on {domain}")

    if homogeneous:
        def ev(w: GroupWord) -> int:
            core = cyclic(normal(w))
            if len(core) <= 1:
                return 0
            return count_cyclic(core, p, overlapping) - count_cyclic(core, inv, overlapping)
        bound = 2.0 * raw_bound
    else:
        def ev(w: GroupWord) -> int:
            nf = normal(w)
            return count_linear(nf, p, overlapping) - count_linear(nf, inv, overlapping)
        bound = raw_bound
    name = "brooks:" + ",".join(str(x) for x in p)
    if not overlapping:
        name += ":nonoverlapping"
    return Quasimorphism(
        name, ev, bound if overlapping else None, homogeneous and overlapping, domain
    )


# --- homogenization and defects ----------------------------------------------

def homogenize(q: Quasimorphism, w, k_max: int) -> tuple[float, float]:
    """``q(w^k)/k`` and the bound ``D/k`` on its distance to the homogenization."""
    if k_max < 1:
        raise ValueError("k_max must be >= 1")
    if q.defect_bound is None:
        raise UnknownDefect(f"{q.name} has no declared defect bound")
    w = _as_word(q.domain, w)
    value = q(w ** k_max)
    return float(Fraction(value) / k_max), q.defect_bound / k_max


def random_word(domain: Domain, rng: random.Random, max_len: int = 20) -> GroupWord:
    if domain.kind == "psl2z":
        letters = [rng.choice((1, 2, -2)) for _ in range(rng.randint(0, max_len))]
        return GroupWord(2, psl_reduce(letters))
    a = domain.alphabet_size
    letters = [rng.choice((1, -1)) * rng.randint(1, a) for _ in range(rng.randint(0, max_len))]
    return GroupWord(a, _reduce_letters(letters))


def defect_estimate(q: Quasimorphism, sampler=None, trials: int = 1000, seed: int = 0) -> float:
    """Largest observed ``|q(uv) - q(u) - q(v)|``: a lower bound on the defect.

    ``sampler(rng)`` returns a random word; defaults to uniform words of
    length at most 20 in the quasimorphism's domain.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = random.Random(seed)
    if sampler is None:
        sampler = lambda r: random_word(q.domain, r)
    worst = Fraction(0)
    for _ in range(trials):
        u = _as_word(q.domain, sampler(rng))
        v = _as_word(q.domain, sampler(rng))
        uv = GroupWord(u.alphabet_size, u.letters + v.letters)
        worst = max(worst, abs(Fraction(q(uv)) - Fraction(q(u)) - Fraction(q(v))))
    return float(worst)


# --- linear combinations ----------------------------------------------------

def combine(family: Sequence[Quasimorphism], coeffs: Sequence, name: str | None = None) -> Quasimorphism:
    if len(family) != len(coeffs):
        raise ValueError("family and coefficient lengths differ")
    domains = {q.domain for q in family}
    if len(domains) != 1:
        raise DomainMismatch(f"mixed domains {sorted(map(str, domains))}")
    coeffs = tuple(Fraction(c) for c in coeffs)
    terms = [(c, q) for c, q in zip(coeffs, family) if c != 0]

    def ev(w: GroupWord):
        total = sum((c * Fraction(q.evaluate(w)) for c, q in terms), Fraction(0))
        return total.numerator if total.denominator == 1 else total

    if any(q.defect_bound is None for _, q in terms):
        bound = None
    else:
        bound = float(sum(abs(c) * Fraction(q.defect_bound) for c, q in terms))
    if name is None:
        name = " ".join(f"{'+' if c > 0 else '-'}{abs(c)}*{q.name}" for c, q in terms) or "0"
    return Quasimorphism(
        name,
        ev,
        bound,
        all(q.homogeneous for _, q in terms),
        family[0].domain,
        integer_valued=all(c.denominator == 1 for c in coeffs),
    )


def _default_probes(domain: Domain, count: int = 200, seed: int = 12345) -> list[GroupWord]:
    rng = random.Random(seed)
    return [random_word(domain, rng, max_len=24) for _ in range(count)]


def _normalize(vec: Sequence[Fraction]) -> tuple[Fraction, ...]:
    den = 1
    for c in vec:
        den = den * c.denominator // _gcd(den, c.denominator)
    ints = [int(c * den) for c in vec]
    g = 0
    for x in ints:
        g = _gcd(g, abs(x))
    ints = [x // g for x in ints] if g else ints
    lead = next((x for x in ints if x != 0), 0)
    if lead < 0:
        ints = [-x for x in ints]
    return tuple(Fraction(x) for x in ints)


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def vanishing_combination(
    family: Sequence[Quasimorphism],
    targets: Sequence,
    probes: Sequence | None = None,
) -> Quasimorphism | None:
    """A rational combination of ``family`` vanishing on every target.

    The value matrix is built exactly and its null space computed over Q.
    Null-space basis vectors (then their sum) are tried in order and the first
    combination that is nonzero somewhere on ``probes`` is returned, with
    integer coefficients of gcd 1 and a positive leading coefficient.  Returns
    ``None`` when every candidate vanishes on all probes.
    """
    if not family:
        raise ValueError("empty family")
    if not targets:
        raise ValueError("no targets")
    domains = {q.domain for q in family}
    if len(domains) != 1:
        raise DomainMismatch(f"mixed domains {sorted(map(str, domains))}")
    if not all(q.homogeneous for q in family):
        raise ValueError("vanishing combinations need homogeneous family members")
    rows = [[sympy.Rational(str(Fraction(q(t)))) for q in family] for t in targets]
    basis = sympy.Matrix(rows).nullspace()
    candidates = [[Fraction(int(x.p), int(x.q)) for x in v] for v in basis]
    if len(candidates) > 1:
        candidates.append([sum(col, Fraction(0)) for col in zip(*candidates)])
    if probes is None:
        probes = _default_probes(family[0].domain)
    for vec in candidates:
        coeffs = _normalize(vec)
        if not any(coeffs):
            continue
        combo = combine(family, coeffs)
        if any(combo(p) != 0 for p in probes):
            return combo
    return None
