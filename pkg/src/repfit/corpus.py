"""Repeat statistics over a circular plaintext corpus.

The corpus texts are written one after another around a circle of N letters.
Comparing the circle against every distinct rotation of itself realizes all
unordered position pairs exactly once, for a total overlap of N(N-1)/2
aligned positions.  Two kinds of repeat counts are derived:

* apparent counts M_r: the number of unordered pairs of equal circular
  r-grammes, regardless of whether the match extends further.  A single
  (r+2)-gramme repeat, for example, contains three apparent r-gramme repeats.
* actual counts N_r: the number of flanked r-gramme repeat pairs, i.e. pairs
  whose match is exactly r letters long, with differing letters on both
  sides.  They follow from the apparent counts via
  N_r = M_r - 2*M_{r+1} + M_{r+2}.

Apparent counts are computed with one lexicographic sort of all N circular
grams of the highest order: entries that agree on their first r symbols are
adjacent after the sort, so every M_r for r below the sort order falls out
of one pass over the sorted table.  The result is exact integer arithmetic,
identical to comparing all N(N-1)/2 rotation pairs directly.

Card accounting for the urn model: each comparison consumes one card per
flanked run plus one card per remaining no-coincidence cell, so the corpus
supports N(N-1)/2 - sum(r * N_r) cards in total, of which N_r are r-gramme
cards and the rest are no-repeat cards.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import ModelError, ValidationError

__all__ = [
    "CircularCorpus",
    "RepeatStatistics",
    "actual_counts",
    "apparent_counts",
    "build_corpus",
    "card_counts",
    "compute_statistics",
    "stats_from_json",
    "stats_to_json",
]


@dataclass(frozen=True)
class CircularCorpus:
    """Letter codes laid out on a circle, with their alphabet size."""

    codes: np.ndarray
    alphabet_size: int

    def __post_init__(self):
        codes = np.ascontiguousarray(self.codes)
        if codes.ndim != 1:
            raise ValidationError("corpus codes must be one-dimensional")
        if self.alphabet_size < 1:
            raise ValidationError(f"alphabet size must be >= 1, got {self.alphabet_size}")
        codes.flags.writeable = False
        object.__setattr__(self, "codes", codes)

    @property
    def n_letters(self) -> int:
        return int(self.codes.size)


@dataclass(frozen=True)
class RepeatStatistics:
    """Apparent and actual repeat spectra of one corpus circle.

    ``apparent`` holds M_1..M_r_max; ``actual`` holds N_1..N_{r_max-2}
    (computing N_r needs apparent counts two orders higher).  Repeats longer
    than r_max - 2 are assumed absent or negligible.
    """

    n_letters: int
    alphabet_size: int
    r_max: int
    apparent: tuple[int, ...]
    actual: tuple[int, ...]

    def __post_init__(self):
        if len(self.apparent) != self.r_max:
            raise ValidationError("apparent counts must cover r = 1..r_max")
        if len(self.actual) != max(0, self.r_max - 2):
            raise ValidationError("actual counts must cover r = 1..r_max-2")
        for r, (m, m_next) in enumerate(zip(self.apparent, self.apparent[1:]), start=1):
            if m < m_next:
                raise ValidationError(
                    f"apparent counts must be non-increasing, but M_{r}={m} < M_{r + 1}={m_next}"
                )
        if any(n < 0 for n in self.actual):
            raise ValidationError("actual repeat counts must be non-negative")
        if self.total_cards < sum(self.actual):
            raise ValidationError(
                "inconsistent statistics: fewer cards than flanked repeats "
                f"({self.total_cards} < {sum(self.actual)})"
            )

    @property
    def total_overlap(self) -> int:
        """Aligned positions summed over all distinct rotation comparisons."""
        return self.n_letters * (self.n_letters - 1) // 2

    @property
    def total_cards(self) -> int:
        return self.total_overlap - sum(r * n for r, n in enumerate(self.actual, start=1))


def build_corpus(texts: Sequence[Sequence[int]], alphabet_size: int) -> CircularCorpus:
    """Concatenate letter-code texts, in order, onto one circle."""
    if not texts:
        raise ValidationError("corpus requires at least one text")
    parts = []
    for index, text in enumerate(texts):
        try:
            arr = np.asarray(text, dtype=np.int64)
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"text {index} is not an integer code sequence: {exc}") from exc
        if arr.ndim != 1 or arr.size == 0:
            raise ValidationError(f"text {index} is empty")
        bad = np.flatnonzero((arr < 0) | (arr >= alphabet_size))
        if bad.size:
            offset = int(bad[0])
            raise ValidationError(
                f"text {index} has out-of-alphabet code {int(arr[offset])} at offset {offset}"
            )
        parts.append(arr)
    codes = np.concatenate(parts)
    dtype = np.uint8 if alphabet_size <= 256 else np.int32
    return CircularCorpus(codes.astype(dtype), alphabet_size)


def _pair_count_from_adjacency(same: np.ndarray) -> int:
    # Sorted rows split into groups at every adjacent mismatch; a group of
    # size n contributes n(n-1)/2 pairs.
    breaks = np.flatnonzero(~same)
    edges = np.concatenate(([-1], breaks, [same.size]))
    sizes = np.diff(edges)
    return int(np.sum(sizes * (sizes - 1) // 2))


def apparent_counts(corpus: CircularCorpus, r_max: int) -> list[int]:
    """M_r for r = 1..r_max: unordered pairs of equal circular r-grammes.

    One lexicographic sort of the N circular r_max-grammes; every lower-order
    count is read off the first r symbols of adjacent sorted entries.
    """
    n = corpus.n_letters
    if r_max < 1:
        raise ValidationError(f"r_max must be >= 1, got {r_max}")
    if r_max >= n:
        raise ValidationError(f"r_max must be below the corpus length ({r_max} >= {n})")

    doubled = np.concatenate([corpus.codes, corpus.codes[: r_max - 1]]) if r_max > 1 else corpus.codes
    grams = sliding_window_view(doubled, r_max)[:n]
    order = np.lexsort(tuple(grams[:, j] for j in range(r_max - 1, -1, -1)))
    table = grams[order]

    mismatch = table[1:] != table[:-1]
    any_mismatch = mismatch.any(axis=1)
    first_diff = np.where(any_mismatch, mismatch.argmax(axis=1), r_max)

    return [_pair_count_from_adjacency(first_diff >= r) for r in range(1, r_max + 1)]


def actual_counts(apparent: Sequence[int]) -> list[int]:
    """N_r = M_r - 2*M_{r+1} + M_{r+2} for every r with three counts available.

    A negative result means the inputs violate the identity's premises
    (miscounted apparent repeats, or repeats beyond the computed orders
    being mishandled); it is reported rather than clamped.
    """
    if len(apparent) < 3:
        raise ValidationError("need apparent counts for at least three consecutive orders")
    out = []
    for r in range(len(apparent) - 2):
        n_r = apparent[r] - 2 * apparent[r + 1] + apparent[r + 2]
        if n_r < 0:
            raise ValidationError(
                f"actual count N_{r + 1} = {n_r} is negative; "
                "apparent counts are inconsistent"
            )
        out.append(n_r)
    return out


def compute_statistics(corpus: CircularCorpus, r_max: int = 9) -> RepeatStatistics:
    """Apparent and actual spectra of a corpus in one pass."""
    apparent = apparent_counts(corpus, r_max)
    actual = actual_counts(apparent) if r_max >= 3 else []
    return RepeatStatistics(
        n_letters=corpus.n_letters,
        alphabet_size=corpus.alphabet_size,
        r_max=r_max,
        apparent=tuple(apparent),
        actual=tuple(actual),
    )


def card_counts(stats: RepeatStatistics) -> tuple[int, dict[int, int]]:
    """Split the corpus card total into no-repeat cards and per-r repeat cards."""
    total = stats.total_cards
    if total <= 0:
        raise ModelError(
            f"degenerate corpus: card total is {total}; the urn model needs at least one card"
        )
    repeats = {r: n for r, n in enumerate(stats.actual, start=1) if n}
    no_repeat = total - sum(repeats.values())
    if no_repeat < 0:
        raise ModelError(
            f"inconsistent statistics: no-repeat card count is {no_repeat}"
        )
    return no_repeat, repeats


def stats_to_json(stats: RepeatStatistics, **extra) -> str:
    """Serialize statistics to the integer-exact JSON artifact."""
    doc = {
        "N": stats.n_letters,
        "c": stats.alphabet_size,
        "r_max": stats.r_max,
        "M": list(stats.apparent),
        "Nr": list(stats.actual),
        "total_cards": stats.total_cards,
    }
    doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def stats_from_json(text: str) -> RepeatStatistics:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid statistics artifact: {exc}") from exc
    try:
        stats = RepeatStatistics(
            n_letters=int(doc["N"]),
            alphabet_size=int(doc["c"]),
            r_max=int(doc["r_max"]),
            apparent=tuple(int(m) for m in doc["M"]),
            actual=tuple(int(n) for n in doc["Nr"]),
        )
    except KeyError as exc:
        raise ValidationError(f"statistics artifact is missing field {exc.args[0]!r}") from exc
    if "total_cards" in doc and int(doc["total_cards"]) != stats.total_cards:
        raise ValidationError(
            "statistics artifact is internally inconsistent: "
            f"total_cards {doc['total_cards']} != {stats.total_cards}"
        )
    return stats
