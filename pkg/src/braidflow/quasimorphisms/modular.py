"""PSL(2,Z) arithmetic: the B_3 quotient, normal forms in Z/2 * Z/3, Rademacher.

Normal-form letters: ``1`` is S = (0,-1;1,0) (order 2, always written +1),
``2`` / ``-2`` are R = ST = (0,-1;1,1) and its inverse (order 3).  With
T = (1,1;0,1) one has T = S R in PSL(2,Z).
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from ..braids import BraidError, BraidWord
from ..words import GroupWord

S_LETTER = 1
R_LETTER = 2


@dataclass(frozen=True)
class ModularElement:
    """A matrix of SL(2,Z) taken up to sign; stored with c > 0, or c = 0 and d > 0."""

    a: int
    b: int
    c: int
    d: int

    def __post_init__(self):
        if self.a * self.d - self.b * self.c != 1:
            raise ValueError(f"determinant of {self.entries} is not 1")
        if self.c < 0 or (self.c == 0 and self.d < 0):
            for name in "abcd":
                object.__setattr__(self, name, -getattr(self, name))

    @property
    def entries(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)

    @property
    def trace(self) -> int:
        return self.a + self.d

    def __matmul__(self, other: "ModularElement") -> "ModularElement":
        a, b, c, d = self.entries
        e, f, g, h = other.entries
        return ModularElement(a * e + b * g, a * f + b * h, c * e + d * g, c * f + d * h)

    def inverse(self) -> "ModularElement":
        return ModularElement(self.d, -self.b, -self.c, self.a)

    def __pow__(self, k: int) -> "ModularElement":
        base = self if k >= 0 else self.inverse()
        out = IDENTITY
        for _ in range(abs(k)):
            out = out @ base
        return out

    def is_identity(self) -> bool:
        return self.entries == (1, 0, 0, 1)


IDENTITY = ModularElement(1, 0, 0, 1)
S_MATRIX = ModularElement(0, -1, 1, 0)
R_MATRIX = ModularElement(0, -1, 1, 1)
T_MATRIX = ModularElement(1, 1, 0, 1)
SIGMA1_IMAGE = ModularElement(1, 1, 0, 1)
SIGMA2_IMAGE = ModularElement(1, 0, -1, 1)


def b3_to_modular(b: BraidWord) -> ModularElement:
    if b.strand_count != 3:
        raise BraidError("the modular quotient is defined on B_3 only")
    a, bb, c, d = 1, 0, 0, 1
    for x in b.letters:
        # right multiplication by the generator image, entries stay integral
        if x == 1:
            bb, d = a + bb, c + d
        elif x == -1:
            bb, d = bb - a, d - c
        elif x == 2:
            a, c = a - bb, c - d
        else:
            a, c = a + bb, c + d
    return ModularElement(a, bb, c, d)


def dedekind_sum(h: int, k: int) -> Fraction:
    """s(h,k) for k > 0 and gcd(h,k) = 1, by the reciprocity law."""
    if k <= 0:
        raise ValueError("k must be positive")
    h %= k
    total = Fraction(0)
    sign = 1
    while h != 0:
        total += sign * (Fraction(h * h + k * k + 1, 12 * h * k) - Fraction(1, 4))
        sign = -sign
        h, k = k % h, h
    return total


def _sign(x) -> int:
    return (x > 0) - (x < 0)


def rademacher_phi(m: ModularElement) -> Fraction:
    """The classical (non-homogeneous) Rademacher function."""
    a, b, c, d = m.entries
    if c == 0:
        return Fraction(b, d)
    return Fraction(a + d, c) - 12 * _sign(c) * dedekind_sum(d, abs(c))


def rademacher(m: ModularElement) -> int:
    """Homogeneous Rademacher quasimorphism on PSL(2,Z).

    Zero on elements of finite order, ``k`` on T^k, and for hyperbolic or
    parabolic ``c != 0`` the Rademacher symbol ``Phi - 3 sign(c(a+d))``.
    """
    a, b, c, d = m.entries
    if c == 0:
        return b * d
    t = a + d
    if abs(t) < 2:
        return 0
    value = rademacher_phi(m) - 3 * _sign(c * t)
    if value.denominator != 1:
        raise ArithmeticError(f"non-integral Rademacher value {value} for {m.entries}")
    return int(value)


# --- Z/2 * Z/3 words -------------------------------------------------------

def psl_reduce(letters) -> tuple[int, ...]:
    """Reduce a word in S^{+-1}, R^{+-1} to the alternating normal form."""
    stack: list[int] = []
    for x in letters:
        if abs(x) == S_LETTER:
            if stack and stack[-1] == S_LETTER:
                stack.pop()
            else:
                stack.append(S_LETTER)
        elif abs(x) == R_LETTER:
            e = 1 if x > 0 else 2
            if stack and abs(stack[-1]) == R_LETTER:
                e = (e + (1 if stack[-1] > 0 else 2)) % 3
                stack.pop()
                if e:
                    stack.append(R_LETTER if e == 1 else -R_LETTER)
            else:
                stack.append(R_LETTER if e == 1 else -R_LETTER)
        else:
            raise ValueError(f"letter {x} is not S or R")
    return tuple(stack)


def psl_inverse(letters) -> tuple[int, ...]:
    return tuple(S_LETTER if abs(x) == S_LETTER else -x for x in reversed(letters))


def psl_word(letters) -> GroupWord:
    return GroupWord(2, psl_reduce(letters))


def psl_cyclic_core(letters) -> tuple[int, ...]:
    """A cyclically reduced normal form conjugate to the given word."""
    w = list(psl_reduce(letters))
    while len(w) >= 2:
        first, last = w[0], w[-1]
        if first == S_LETTER and last == S_LETTER:
            w = w[1:-1]
        elif abs(first) == R_LETTER and abs(last) == R_LETTER:
            # conjugate by the first letter and merge it into the last one
            w = list(psl_reduce(w[1:] + [first]))
        else:
            break
    return tuple(w)


_T_POW = {1: (S_LETTER, R_LETTER), -1: (-R_LETTER, S_LETTER)}
_SIGMA_PSL = {
    1: (S_LETTER, R_LETTER),
    -1: (-R_LETTER, S_LETTER),
    2: (R_LETTER, S_LETTER),
    -2: (S_LETTER, -R_LETTER),
}


def modular_normal_form(m: ModularElement) -> GroupWord:
    """Alternating S / R^{+-1} word for ``m``, by Euclid on the first column."""
    a, b, c, d = m.entries
    raw: list[int] = []
    while c != 0:
        q = a // c
        a, b = a - q * c, b - q * d
        raw.extend(_T_POW[1 if q > 0 else -1] * abs(q))
        raw.append(S_LETTER)
        a, b, c, d = c, d, -a, -b
    # now (a, b; 0, d) with a = d = +-1, i.e. T^(a*b) up to sign
    e = a * b
    raw.extend(_T_POW[1 if e > 0 else -1] * abs(e))
    return GroupWord(2, psl_reduce(raw))


def braid_to_psl(b: BraidWord) -> tuple[int, ...]:
    """Normal form of the B_3 braid's modular image, computed letterwise."""
    if b.strand_count != 3:
        raise BraidError("the modular quotient is defined on B_3 only")
    raw: list[int] = []
    for x in b.letters:
        raw.extend(_SIGMA_PSL[x])
    return psl_reduce(raw)


def psl_to_matrix(letters) -> ModularElement:
    out = IDENTITY
    for x in letters:
        if abs(x) == S_LETTER:
            out = out @ S_MATRIX
        elif x > 0:
            out = out @ R_MATRIX
        else:
            out = out @ R_MATRIX.inverse()
    return out
