"""Signed-word algebra shared by braids, surface-group loops and PSL(2,Z) words.

A letter is a nonzero integer: ``+i`` is generator ``i`` and ``-i`` its
inverse.  A :class:`GroupWord` carries its own alphabet size so that words of
different groups can coexist.  The empty word is the identity everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence


class AlphabetMismatch(ValueError):
    pass


class Letter(NamedTuple):
    generator_index: int
    sign: int

    def to_int(self) -> int:
        return self.sign * self.generator_index

    @classmethod
    def from_int(cls, x: int) -> "Letter":
        if x == 0:
            raise ValueError("letter 0 is not allowed")
        return cls(abs(x), 1 if x > 0 else -1)


def _reduce_letters(letters: Iterable[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


@dataclass(frozen=True)
class GroupWord:
    alphabet_size: int
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        if self.alphabet_size < 1:
            raise ValueError("alphabet_size must be positive")
        letters = tuple(int(x) for x in self.letters)
        for x in letters:
            if x == 0 or abs(x) > self.alphabet_size:
                raise ValueError(
                    f"letter {x} outside alphabet of size {self.alphabet_size}"
                )
        object.__setattr__(self, "letters", letters)

    @classmethod
    def from_pairs(cls, alphabet_size: int, pairs: Iterable[tuple[int, int]]) -> "GroupWord":
        return cls(alphabet_size, tuple(Letter(*p).to_int() for p in pairs))

    def pairs(self) -> list[Letter]:
        return [Letter.from_int(x) for x in self.letters]

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return GroupWord(self.alphabet_size, self.letters[item])
        return self.letters[item]

    def __mul__(self, other: "GroupWord") -> "GroupWord":
        return compose(self, other)

    def __invert__(self) -> "GroupWord":
        return inverse(self)

    def __pow__(self, k: int) -> "GroupWord":
        return power(self, k)

    @property
    def is_reduced(self) -> bool:
        return all(a != -b for a, b in zip(self.letters, self.letters[1:]))

    def __str__(self) -> str:
        return " ".join(str(x) for x in self.letters) or "()"


def identity(alphabet_size: int) -> GroupWord:
    return GroupWord(alphabet_size, ())


def free_reduce(w: GroupWord) -> GroupWord:
    """Cancel adjacent inverse pairs in one stack pass."""
    return GroupWord(w.alphabet_size, _reduce_letters(w.letters))


def _check_same(u: GroupWord, v: GroupWord) -> None:
    if u.alphabet_size != v.alphabet_size:
        raise AlphabetMismatch(
            f"alphabet sizes differ: {u.alphabet_size} != {v.alphabet_size}"
        )


def compose(u: GroupWord, v: GroupWord) -> GroupWord:
    _check_same(u, v)
    return GroupWord(u.alphabet_size, _reduce_letters(u.letters + v.letters))


def inverse(w: GroupWord) -> GroupWord:
    return GroupWord(w.alphabet_size, tuple(-x for x in reversed(w.letters)))


def power(w: GroupWord, k: int) -> GroupWord:
    if k < 0:
        return power(inverse(w), -k)
    return free_reduce(GroupWord(w.alphabet_size, w.letters * k))


def conjugate(w: GroupWord, g: GroupWord) -> GroupWord:
    """Return the reduced word ``g w g^-1``."""
    _check_same(w, g)
    return GroupWord(
        w.alphabet_size,
        _reduce_letters(g.letters + w.letters + inverse(g).letters),
    )


def cyclically_reduce(w: GroupWord) -> tuple[GroupWord, GroupWord]:
    """Split a reduced word as ``conjugator * core * conjugator^-1``.

    The core has first and last letters that are not mutually inverse.
    """
    letters = _reduce_letters(w.letters)
    i, j = 0, len(letters) - 1
    while i < j and letters[i] == -letters[j]:
        i += 1
        j -= 1
    core = GroupWord(w.alphabet_size, letters[i:j + 1])
    conj = GroupWord(w.alphabet_size, letters[:i])
    return core, conj


def is_cyclic_rotation(u: GroupWord, v: GroupWord) -> bool:
    if len(u) != len(v):
        return False
    if not u.letters:
        return True
    doubled = u.letters + u.letters
    n = len(v)
    return any(doubled[i:i + n] == v.letters for i in range(n))


def exponent_sum(w: GroupWord) -> int:
    return sum(1 if x > 0 else -1 for x in w.letters)


def format_word(w: GroupWord, header: str | None = None) -> str:
    """Text form: a header line ``n=<alphabet_size>`` then signed integers."""
    head = header if header is not None else f"n={w.alphabet_size}"
    return f"{head}\n{' '.join(str(x) for x in w.letters)}\n"


def parse_header(line: str) -> dict[str, int]:
    fields = {}
    for item in line.split():
        key, _, value = item.partition("=")
        if not _:
            raise ValueError(f"malformed header field {item!r}")
        fields[key.strip()] = int(value)
    if "n" not in fields:
        raise ValueError("header must contain n=<size>")
    return fields


def parse_words(text: str) -> list[tuple[dict[str, int], GroupWord]]:
    """Parse one or more ``header`` / ``letters`` blocks.

    Blank lines and ``#`` comments are ignored.  A header may be followed by
    several letter lines; each becomes a separate word.
    """
    out = []
    header = None
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            header = parse_header(line)
            continue
        if header is None:
            raise ValueError("word line before any n=<size> header")
        letters = tuple(int(tok) for tok in line.replace("()", "").split())
        out.append((header, GroupWord(header["n"], letters)))
    return out


def parse_word(text: str) -> GroupWord:
    words = parse_words(text)
    if not words:
        # header with an empty word line
        for raw in text.splitlines():
            line = raw.split("#", 1)[0].strip()
            if "=" in line:
                return GroupWord(parse_header(line)["n"], ())
        raise ValueError("no word found")
    return words[0][1]


def word(alphabet_size: int, letters: Sequence[int]) -> GroupWord:
    return GroupWord(alphabet_size, tuple(letters))
