"""
Exact symbolic layer: augmented indices, words over {e0, e1, ez} and {x, y0, y1},
rational linear combinations of words, the anti-automorphism τ and dual indices.

Letters:
    input alphabet   e0, e1, ez          text form: characters "0", "1", "z"  ("100" = e1·e0·e0)
    basis alphabet   x = e0, y0 = -ez, y1 = ez - e1      text form: "y1 x x"

An augmented index is a tuple of (k, μ) with k >= 1 and μ in {0, 1}; its word is
    w(k̃) = y_{μ1} x^{k1-1} ... y_{μr} x^{kr-1},   w(∅) = 1.

Text grammar for indices: "empty" | "k:μ,k:μ,..." e.g. "2:0,1:1,3:1".

All objects are immutable and all functions pure.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

from mpl_duality.errors import NotAdmissible, NotParseable

E0, E1, EZ = "e0", "e1", "ez"
X, Y0, Y1 = "x", "y0", "y1"

INPUT_ALPHABET = (E0, E1, EZ)
BASIS_ALPHABET = (X, Y0, Y1)

_INPUT_CHARS = {"0": E0, "1": E1, "z": EZ}
_CHAR_OF_LETTER = {v: k for k, v in _INPUT_CHARS.items()}


# ---------------------------------------------------------------------------
# Augmented indices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AugmentedIndex:
    components: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        comps = tuple((int(k), int(mu)) for k, mu in self.components)
        for k, mu in comps:
            if k < 1 or mu not in (0, 1):
                raise NotParseable(f"invalid augmented component ({k},{mu})")
        object.__setattr__(self, "components", comps)

    @classmethod
    def parse(cls, text: str) -> "AugmentedIndex":
        """Parse "empty" or "k:μ,k:μ,...". Whitespace is ignored."""
        body = "".join(text.split())
        if body in ("", "empty", "∅"):
            return cls(())
        comps = []
        for part in body.split(","):
            k, sep, mu = part.partition(":")
            if not sep or not k.isdigit() or mu not in ("0", "1"):
                raise NotParseable(f"bad index component {part!r} in {text!r}; expected k:μ with μ in {{0,1}}")
            comps.append((int(k), int(mu)))
        return cls(tuple(comps))

    @classmethod
    def all_ones(cls, k: Iterable[int]) -> "AugmentedIndex":
        """The augmented index ((k1,1),...,(kr,1)) attached to a usual index."""
        return cls(tuple((int(ki), 1) for ki in k))

    def __str__(self) -> str:
        if not self.components:
            return "empty"
        return ",".join(f"{k}:{mu}" for k, mu in self.components)

    def __len__(self) -> int:
        return len(self.components)

    def __iter__(self) -> Iterator[tuple[int, int]]:
        return iter(self.components)

    @property
    def weight(self) -> int:
        return sum(k for k, _ in self.components)

    @property
    def depth(self) -> int:
        return len(self.components)

    @property
    def admissible(self) -> bool:
        return not self.components or self.components[-1] != (1, 1)

    @property
    def is_empty(self) -> bool:
        return not self.components

    def count_mu(self, mu: int) -> int:
        return sum(1 for _, m in self.components if m == mu)

    @property
    def harmonic_count(self) -> int:
        """Number of (1,1) components; each one adds a logarithm to partial-sum tails."""
        return sum(1 for c in self.components if c == (1, 1))

    @property
    def usual_index(self) -> tuple[int, ...]:
        return tuple(k for k, _ in self.components)

    def require_admissible(self) -> "AugmentedIndex":
        if not self.admissible:
            raise NotAdmissible(f"augmented index {self} is not admissible (last component is (1,1))")
        return self


# ---------------------------------------------------------------------------
# Words
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class NCWord:
    letters: tuple[str, ...] = ()

    def __post_init__(self):
        letters = tuple(self.letters)
        for letter in letters:
            if letter not in INPUT_ALPHABET and letter not in BASIS_ALPHABET:
                raise NotParseable(f"unknown letter {letter!r}")
        object.__setattr__(self, "letters", letters)

    @classmethod
    def parse(cls, text: str) -> "NCWord":
        """Parse "100z" (input alphabet) or "y1 x x" (basis alphabet). "empty" is the word 1."""
        body = text.strip()
        if body in ("", "empty"):
            return cls(())
        tokens = body.split()
        if len(tokens) > 1 or body.startswith(("x", "y")):
            for tok in tokens:
                if tok not in BASIS_ALPHABET:
                    raise NotParseable(f"bad basis letter {tok!r} in {text!r}")
            return cls(tuple(tokens))
        try:
            return cls(tuple(_INPUT_CHARS[ch] for ch in body))
        except KeyError as exc:
            raise NotParseable(f"bad input letter {exc.args[0]!r} in {text!r}; use 0, 1, z") from exc

    @property
    def alphabet(self) -> str:
        """"empty", "input", "basis" or "mixed"."""
        if not self.letters:
            return "empty"
        kinds = {"input" if l in INPUT_ALPHABET else "basis" for l in self.letters}
        return kinds.pop() if len(kinds) == 1 else "mixed"

    def __mul__(self, other: "NCWord") -> "NCWord":
        return NCWord(self.letters + other.letters)

    def __len__(self) -> int:
        return len(self.letters)

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        if self.alphabet == "input":
            return "".join(_CHAR_OF_LETTER[l] for l in self.letters)
        return " ".join(self.letters)

    @property
    def is_index_parseable(self) -> bool:
        return self.alphabet == "empty" or (self.alphabet == "basis" and self.letters[0] != X)

    def reversed(self) -> "NCWord":
        return NCWord(self.letters[::-1])


# ---------------------------------------------------------------------------
# Polynomials
# ---------------------------------------------------------------------------

Scalar = Union[int, Fraction]


class NCPoly:
    """Finite Q-linear combination of words. Zero coefficients are never stored."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[NCWord, Scalar] | None = None):
        clean: dict[NCWord, Fraction] = {}
        for word, coeff in (terms or {}).items():
            c = Fraction(coeff)
            if c:
                clean[word] = clean.get(word, Fraction(0)) + c
                if not clean[word]:
                    del clean[word]
        self._terms = clean

    @classmethod
    def one(cls) -> "NCPoly":
        return cls({NCWord(()): 1})

    @classmethod
    def of(cls, word: NCWord | str, coeff: Scalar = 1) -> "NCPoly":
        if isinstance(word, str):
            word = NCWord((word,)) if word in INPUT_ALPHABET + BASIS_ALPHABET else NCWord.parse(word)
        return cls({word: coeff})

    @property
    def terms(self) -> dict[NCWord, Fraction]:
        return dict(self._terms)

    def items(self):
        return self._terms.items()

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, NCWord):
            other = NCPoly.of(other)
        return isinstance(other, NCPoly) and self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __add__(self, other: "NCPoly") -> "NCPoly":
        out = dict(self._terms)
        for w, c in other._terms.items():
            out[w] = out.get(w, Fraction(0)) + c
        return NCPoly(out)

    def __neg__(self) -> "NCPoly":
        return NCPoly({w: -c for w, c in self._terms.items()})

    def __sub__(self, other: "NCPoly") -> "NCPoly":
        return self + (-other)

    def __mul__(self, other: "NCPoly | Scalar") -> "NCPoly":
        if isinstance(other, (int, Fraction)):
            return NCPoly({w: c * other for w, c in self._terms.items()})
        out: dict[NCWord, Fraction] = {}
        for w1, c1 in self._terms.items():
            for w2, c2 in other._terms.items():
                w = w1 * w2
                out[w] = out.get(w, Fraction(0)) + c1 * c2
        return NCPoly(out)

    __rmul__ = __mul__

    def __repr__(self) -> str:
        return f"NCPoly({self})"

    def __str__(self) -> str:
        if not self._terms:
            return "0"
        parts = []
        for w in sorted(self._terms, key=lambda w: (len(w), w.letters)):
            c = self._terms[w]
            parts.append(f"{c}*[{w}]" if c != 1 else f"[{w}]")
        return " + ".join(parts)

    def to_record(self) -> list[dict]:
        return [
            {"word": str(w), "coeff": str(c)}
            for w, c in sorted(self._terms.items(), key=lambda t: (len(t[0]), t[0].letters))
        ]


# ---------------------------------------------------------------------------
# τ and basis expansion
# ---------------------------------------------------------------------------

# τ(e0) = ez - e1, τ(e1) = ez - e0, τ(ez) = ez; on the basis letters x <-> y1, y0 fixed.
_TAU_IMAGE = {
    E0: NCPoly({NCWord((EZ,)): 1, NCWord((E1,)): -1}),
    E1: NCPoly({NCWord((EZ,)): 1, NCWord((E0,)): -1}),
    EZ: NCPoly({NCWord((EZ,)): 1}),
    X: NCPoly({NCWord((Y1,)): 1}),
    Y0: NCPoly({NCWord((Y0,)): 1}),
    Y1: NCPoly({NCWord((X,)): 1}),
}
_BASIS_LETTER_SWAP = {X: Y1, Y0: Y0, Y1: X}

# e0 = x, ez = -y0, e1 = -y0 - y1
_BASIS_IMAGE = {
    E0: NCPoly({NCWord((X,)): 1}),
    EZ: NCPoly({NCWord((Y0,)): -1}),
    E1: NCPoly({NCWord((Y0,)): -1, NCWord((Y1,)): -1}),
    X: NCPoly({NCWord((X,)): 1}),
    Y0: NCPoly({NCWord((Y0,)): 1}),
    Y1: NCPoly({NCWord((Y1,)): 1}),
}


def _substitute(p: NCPoly, images: Mapping[str, NCPoly], reverse: bool) -> NCPoly:
    total = NCPoly()
    for word, coeff in p.items():
        letters = word.letters[::-1] if reverse else word.letters
        acc = NCPoly.one() * coeff
        for letter in letters:
            acc = acc * images[letter]
        total = total + acc
    return total


def tau(p: NCPoly | NCWord) -> NCPoly | NCWord:
    """The anti-automorphism τ. A basis word maps to a basis word; anything else to an NCPoly."""
    if isinstance(p, NCWord):
        if p.alphabet in ("basis", "empty"):
            return NCWord(tuple(_BASIS_LETTER_SWAP[l] for l in reversed(p.letters)))
        return _substitute(NCPoly.of(p), _TAU_IMAGE, reverse=True)
    return _substitute(p, _TAU_IMAGE, reverse=True)


def expand_in_basis(p: NCPoly | NCWord) -> NCPoly:
    if isinstance(p, NCWord):
        p = NCPoly.of(p)
    return _substitute(p, _BASIS_IMAGE, reverse=False)


# ---------------------------------------------------------------------------
# Index <-> word
# ---------------------------------------------------------------------------

def word_of_index(index: AugmentedIndex) -> NCWord:
    letters: list[str] = []
    for k, mu in index:
        letters.append(Y1 if mu else Y0)
        letters.extend([X] * (k - 1))
    return NCWord(tuple(letters))


def index_of_word(word: NCWord) -> AugmentedIndex:
    if not word.letters:
        return AugmentedIndex(())
    if word.alphabet != "basis":
        raise NotParseable(f"word [{word}] is not over the basis alphabet x, y0, y1")
    if word.letters[0] == X:
        raise NotParseable(f"word [{word}] starts with x and has no index parse")
    comps: list[list[int]] = []
    for letter in word.letters:
        if letter == X:
            comps[-1][0] += 1
        else:
            comps.append([1, 1 if letter == Y1 else 0])
    return AugmentedIndex(tuple((k, mu) for k, mu in comps))


def dual_index(index: AugmentedIndex) -> AugmentedIndex:
    """k̃† with τ(w(k̃)) = w(k̃†): reverse the word, swap x <-> y1, re-parse."""
    index.require_admissible()
    return index_of_word(tau(word_of_index(index)))


def classical_dual(k: tuple[int, ...]) -> tuple[int, ...]:
    """Dual of a usual index with k_r >= 2 by the block rule
    (1^{a1-1}, b1+1, ..., 1^{as-1}, bs+1) -> (1^{bs-1}, as+1, ..., 1^{b1-1}, a1+1)."""
    if not k:
        return ()
    if k[-1] < 2 or any(ki < 1 for ki in k):
        raise NotAdmissible(f"usual index {k} is not admissible (needs k_r >= 2)")
    blocks: list[tuple[int, int]] = []
    ones = 0
    for ki in k:
        if ki == 1:
            ones += 1
        else:
            blocks.append((ones + 1, ki - 1))
            ones = 0
    out: list[int] = []
    for a, b in reversed(blocks):
        out.extend([1] * (b - 1))
        out.append(a + 1)
    return tuple(out)


# ---------------------------------------------------------------------------
# A0 and enumeration
# ---------------------------------------------------------------------------

def is_in_A0(p: NCPoly | NCWord) -> bool:
    for word, _ in expand_in_basis(p).items():
        if not word.is_index_parseable:
            return False
        if not index_of_word(word).admissible:
            return False
    return True


def enumerate_admissible(max_weight: int) -> list[AugmentedIndex]:
    """All admissible indices of weight 1..max_weight, by weight, then lexicographic
    on the basis word with x < y0 < y1."""
    out: list[AugmentedIndex] = []
    for weight in range(1, max_weight + 1):
        for letters in itertools.product(BASIS_ALPHABET, repeat=weight):
            if letters[0] == X:
                continue
            index = index_of_word(NCWord(letters))
            if index.admissible:
                out.append(index)
    return out
