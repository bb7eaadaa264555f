"""Artin and spherical braid words.

Generator ``i`` is the Artin generator exchanging positions ``i`` and
``i+1`` (1-based).  Word-problem decisions in ``B_n`` use Dehornoy's handle
reduction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .words import GroupWord, _reduce_letters, compose, free_reduce, inverse


class BraidError(ValueError):
    pass


class HandleBudgetExceeded(RuntimeError):
    """Raised when handle reduction runs past its step budget.

    The partially reduced braid is available as ``partial``.
    """

    def __init__(self, partial: "BraidWord", steps: int):
        super().__init__(f"handle reduction stopped after {steps} steps")
        self.partial = partial
        self.steps = steps


@dataclass(frozen=True)
class BraidWord:
    strand_count: int
    word: GroupWord

    sphere = False

    def __post_init__(self):
        if self.strand_count < 2:
            raise BraidError("a braid needs at least two strands")
        if self.word.alphabet_size != self.strand_count - 1:
            raise BraidError(
                f"word alphabet {self.word.alphabet_size} does not match "
                f"{self.strand_count} strands"
            )

    @classmethod
    def from_letters(cls, n: int, letters) -> "BraidWord":
        return cls(n, GroupWord(n - 1, tuple(letters)))

    @property
    def letters(self) -> tuple[int, ...]:
        return self.word.letters

    def __len__(self) -> int:
        return len(self.word)

    def __mul__(self, other: "BraidWord") -> "BraidWord":
        _check_compatible(self, other)
        return type(self)(self.strand_count, compose(self.word, other.word))

    def __invert__(self) -> "BraidWord":
        return type(self)(self.strand_count, inverse(self.word))

    def __pow__(self, k: int) -> "BraidWord":
        return type(self)(self.strand_count, self.word ** k)

    def header(self) -> str:
        return f"n={self.strand_count} sphere={int(self.sphere)}"


@dataclass(frozen=True)
class SphericalBraidWord(BraidWord):
    sphere = True


def _check_compatible(a: BraidWord, b: BraidWord) -> None:
    if a.strand_count != b.strand_count or a.sphere != b.sphere:
        raise BraidError("braids live in different groups")


def braid(n: int, letters, sphere: bool = False) -> BraidWord:
    cls = SphericalBraidWord if sphere else BraidWord
    return cls(n, GroupWord(n - 1, tuple(letters)))


def to_sphere(b: BraidWord) -> SphericalBraidWord:
    """The projection ``B_n -> B_n(S^2)``: same letters, sphere relations."""
    return SphericalBraidWord(b.strand_count, b.word)


def make_eta(i: int, n: int) -> BraidWord:
    """``sigma_{i-1} ... sigma_2 sigma_1^2 sigma_2 ... sigma_{i-1}``."""
    if not 2 <= i <= n:
        raise BraidError(f"need 2 <= i <= n, got i={i}, n={n}")
    down = list(range(i - 1, 1, -1))
    return braid(n, down + [1, 1] + down[::-1])


def make_delta(n: int) -> BraidWord:
    """``sigma_1 ... sigma_{n-2} sigma_{n-1}^2 sigma_{n-2} ... sigma_1``."""
    if n < 2:
        raise BraidError("delta_n needs n >= 2")
    up = list(range(1, n - 1))
    return braid(n, up + [n - 1, n - 1] + up[::-1])


def braid_permutation(b: BraidWord) -> tuple[int, ...]:
    """Image in S_n as a tuple ``p`` with ``p[k]`` = final position of strand k.

    Strands and positions are 0-based here; strand ``k`` starts at position ``k``.
    """
    at = list(range(b.strand_count))  # at[position] = strand
    for x in b.letters:
        i = abs(x) - 1
        at[i], at[i + 1] = at[i + 1], at[i]
    perm = [0] * b.strand_count
    for pos, strand in enumerate(at):
        perm[strand] = pos
    return tuple(perm)


def is_pure(b: BraidWord) -> bool:
    return braid_permutation(b) == tuple(range(b.strand_count))


def linking_matrix(b: BraidWord) -> np.ndarray:
    """Pairwise linking numbers of a pure braid by strand following."""
    n = b.strand_count
    twice = np.zeros((n, n), dtype=np.int64)
    at = list(range(n))
    for x in b.letters:
        i = abs(x) - 1
        s, t = at[i], at[i + 1]
        e = 1 if x > 0 else -1
        twice[s, t] += e
        twice[t, s] += e
        at[i], at[i + 1] = t, s
    if at != list(range(n)):
        raise BraidError("linking matrix needs a pure braid")
    return twice // 2


def _find_handle(w: list[int]) -> tuple[int, int] | None:
    # Leftmost right end; such a handle is automatically permitted.
    last: dict[int, int] = {}
    for k, x in enumerate(w):
        g = abs(x)
        j = last.get(g)
        if j is not None and w[j] == -x and last.get(g - 1, -1) < j:
            return j, k
        last[g] = k
    return None


def handle_reduce(b: BraidWord, max_steps: int = 10**7) -> BraidWord:
    """Dehornoy handle reduction.

    The result is handle-free and equal to ``b`` in ``B_n``; it is empty iff
    ``b`` is trivial.  Raises :class:`HandleBudgetExceeded` (carrying the
    partial reduction) when more than ``max_steps`` handles were reduced.
    """
    w = list(_reduce_letters(b.letters))
    steps = 0
    while True:
        handle = _find_handle(w)
        if handle is None:
            break
        if steps >= max_steps:
            partial = BraidWord(b.strand_count, GroupWord(b.strand_count - 1, tuple(w)))
            raise HandleBudgetExceeded(partial, steps)
        steps += 1
        j, k = handle
        i = abs(w[j])
        e = 1 if w[j] > 0 else -1
        middle = []
        for x in w[j + 1:k]:
            if abs(x) == i + 1:
                d = 1 if x > 0 else -1
                middle.extend((-e * (i + 1), d * i, e * (i + 1)))
            else:
                middle.append(x)
        w = w[:j] + middle + w[k + 1:]
    return BraidWord(b.strand_count, GroupWord(b.strand_count - 1, tuple(w)))


def is_trivial(b: BraidWord, max_steps: int = 10**7) -> bool:
    return len(handle_reduce(b, max_steps)) == 0


def braids_equal(a: BraidWord, b: BraidWord, max_steps: int = 10**7) -> bool:
    return is_trivial(BraidWord(a.strand_count, compose(a.word, inverse(b.word))), max_steps)


def spherical_normalize(b: BraidWord) -> SphericalBraidWord:
    """Delete literal copies of ``delta_n^{+-1}`` and freely reduce, to a fixpoint.

    A simplifier only: two words for the same element of ``B_n(S^2)`` can
    survive with different spellings.
    """
    n = b.strand_count
    pats = [make_delta(n).letters, inverse(make_delta(n).word).letters]
    w = list(_reduce_letters(b.letters))
    changed = True
    while changed:
        changed = False
        for pat in pats:
            m = len(pat)
            k = 0
            while k + m <= len(w):
                if tuple(w[k:k + m]) == pat:
                    del w[k:k + m]
                    changed = True
                    k = max(0, k - m)
                else:
                    k += 1
        w = list(_reduce_letters(w))
    return SphericalBraidWord(n, GroupWord(n - 1, tuple(w)))


def reduced(b: BraidWord) -> BraidWord:
    return type(b)(b.strand_count, free_reduce(b.word))
