"""Closed surface groups of genus g >= 2 and Dehn's algorithm.

Generators ``a_i = 2i-1`` and ``b_i = 2i``; the relator is
``a_1 b_1 a_1^-1 b_1^-1 ... a_g b_g a_g^-1 b_g^-1``.
"""

from __future__ import annotations

from functools import lru_cache

from ..words import GroupWord, _reduce_letters


def surface_relator(genus: int) -> tuple[int, ...]:
    if genus < 2:
        raise ValueError("surface groups are handled for genus >= 2")
    out: list[int] = []
    for i in range(1, genus + 1):
        a, b = 2 * i - 1, 2 * i
        out.extend((a, b, -a, -b))
    return tuple(out)


@lru_cache(maxsize=None)
def _rotations(genus: int) -> dict[int, tuple[int, ...]]:
    # every signed letter occurs once in the relator and once in its inverse,
    # so a cyclic conjugate of r or r^-1 is pinned down by its first two letters
    r = surface_relator(genus)
    r_inv = tuple(-x for x in reversed(r))
    table: dict[tuple[int, int], tuple[int, ...]] = {}
    for rel in (r, r_inv):
        for i in range(len(rel)):
            rot = rel[i:] + rel[:i]
            table[(rot[0], rot[1])] = rot
    return table


def _match(w, i: int, table, n: int) -> tuple[int, tuple[int, ...] | None]:
    if i + 1 >= n:
        return 0, None
    rot = table.get((w[i], w[i + 1]))
    if rot is None:
        return 0, None
    m = 2
    limit = min(len(rot), n - i)
    while m < limit and w[i + m] == rot[m]:
        m += 1
    return m, rot


def _cancel_at(w: list[int], j: int) -> int:
    while 0 < j < len(w) and w[j - 1] == -w[j]:
        del w[j - 1:j + 1]
        j -= 1
    return j


def dehn_reduce(w: GroupWord, genus: int) -> GroupWord:
    """Dehn's algorithm: replace more than half a relator by the shorter half.

    The output is freely reduced, contains no subword longer than ``2g`` of a
    cyclic conjugate of the relator or its inverse, and is empty iff ``w`` is
    trivial in the surface group.
    """
    if w.alphabet_size != 2 * genus:
        raise ValueError(f"alphabet {w.alphabet_size} is not 2 * genus = {2 * genus}")
    table = _rotations(genus)
    half = 2 * genus
    rl = 4 * genus
    letters = list(_reduce_letters(w.letters))
    i = 0
    while i < len(letters):
        m, rot = _match(letters, i, table, len(letters))
        if m > half:
            rep = [-x for x in reversed(rot[m:])]
            letters[i:i + m] = rep
            j = _cancel_at(letters, i + len(rep))
            if j >= i:
                j = _cancel_at(letters, i)
            i = max(0, min(i, j) - rl)
        else:
            i += 1
    return GroupWord(w.alphabet_size, tuple(letters))


def cyclic_dehn_core(w: GroupWord, genus: int) -> GroupWord:
    """A cyclically Dehn-reduced word conjugate to ``w``."""
    table = _rotations(genus)
    half = 2 * genus
    cur = dehn_reduce(w, genus)
    while True:
        letters = cur.letters
        a, b = 0, len(letters) - 1
        while a < b and letters[a] == -letters[b]:
            a += 1
            b -= 1
        letters = letters[a:b + 1]
        n = len(letters)
        found = None
        if n > half:
            doubled = letters + letters
            for i in range(n):
                rot = table.get((doubled[i], doubled[i + 1]))
                if rot is None:
                    continue
                m = 2
                limit = min(len(rot), n)
                while m < limit and doubled[i + m] == rot[m]:
                    m += 1
                if m > half:
                    found = i
                    break
        if found is None:
            return GroupWord(cur.alphabet_size, letters)
        rotated = letters[found:] + letters[:found]
        cur = dehn_reduce(GroupWord(cur.alphabet_size, rotated), genus)
