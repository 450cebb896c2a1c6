"""The generative urn model for repetition figures.

An urn holds cards in fixed proportions: a no-repeat card with proportion A
appends ``O`` to the figure under construction, and an r-gramme card with
proportion alpha_r appends r ``X`` cells followed by ``O``.  Cards are drawn
with replacement until the figure reaches the requested overlap exactly; a
draw that jumps past the target scraps the partial figure and the next draw
starts a fresh comparison.

Two reference models matter:

* a corpus urn, whose proportions come straight from the card counts of a
  circular-corpus repeat census, and
* the flat-random urn (alphabet size c), with alpha_r = (c-1)/c^(r+1) and
  a no-repeat share approaching (c-1)/c: the proportions produced by letters
  drawn independently and uniformly, i.e. the wrong-fit null model.

``exact_completion_probability`` is the finite-overlap oracle for the
sampler: a dynamic program over block lengths giving the exact probability
that the drawing process hits a given overlap, whose large-overlap limit is
``acceptance_proportion``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping

import numpy as np

from .corpus import RepeatStatistics, card_counts
from .errors import ModelError, ValidationError
from .figures import O_CELL, RepetitionFigure, X_CELL
from .rng import checked_rng

__all__ = [
    "UrnModel",
    "acceptance_proportion",
    "exact_completion_probability",
    "figures_from_draws",
    "hatted_apparent",
    "hatted_urn",
    "sample_figures",
    "urn_from_json",
    "urn_from_stats",
    "urn_to_json",
]


@dataclass(frozen=True)
class UrnModel:
    """Card proportions of one urn, paired with an alphabet size.

    ``alpha`` maps run length r (>= 1) to the proportion of r-gramme cards;
    ``no_repeat`` is the proportion of no-repeat cards.  Proportions are
    dimensionless and must account for the whole urn.
    """

    alpha: Mapping[int, float]
    no_repeat: float
    alphabet_size: int

    def __post_init__(self):
        cleaned: dict[int, float] = {}
        for r, a in self.alpha.items():
            if int(r) != r or r < 1:
                raise ValidationError(f"card run length must be a positive integer, got {r!r}")
            if a < 0 or not math.isfinite(a):
                raise ValidationError(f"card proportion for r={r} must be finite and >= 0, got {a}")
            if a > 0:
                cleaned[int(r)] = float(a)
        if self.no_repeat <= 0:
            raise ValidationError(
                f"no-repeat proportion must be positive, got {self.no_repeat}"
            )
        if self.alphabet_size < 1:
            raise ValidationError(f"alphabet size must be >= 1, got {self.alphabet_size}")
        total = self.no_repeat + sum(cleaned.values())
        if abs(total - 1.0) > 1e-12:
            raise ValidationError(f"card proportions must sum to 1, got {total!r}")
        object.__setattr__(self, "alpha", cleaned)
        object.__setattr__(self, "no_repeat", float(self.no_repeat))

    @property
    def r_max(self) -> int:
        """Largest run length with a positive card proportion (0 if none)."""
        return max(self.alpha, default=0)

    @property
    def sum_alpha(self) -> float:
        return sum(self.alpha.values())

    @property
    def mean_extra_cells(self) -> float:
        """Sum of r * alpha_r: expected X cells per draw."""
        return sum(r * a for r, a in self.alpha.items())


def urn_from_stats(stats: RepeatStatistics) -> UrnModel:
    """Urn proportions from a corpus repeat census.

    Repeat cards of each kind are in the same ratio as the corresponding
    flanked repeat counts; the remainder of the card total is no-repeat.
    """
    no_repeat, repeats = card_counts(stats)
    total = no_repeat + sum(repeats.values())
    if no_repeat == 0:
        raise ModelError("corpus leaves no no-repeat cards; urn would never terminate a run")
    return UrnModel(
        alpha={r: n / total for r, n in repeats.items()},
        no_repeat=no_repeat / total,
        alphabet_size=stats.alphabet_size,
    )


def _default_hatted_r_max(alphabet_size: int) -> int:
    # Deep enough that the truncated tail cannot disturb weights at the
    # 1e-12 level; 25 already suffices for alphabets of ten or more symbols.
    r = 25
    while (r + 1) * alphabet_size ** -(r + 1) > 1e-15:
        r += 1
    return r


def hatted_urn(alphabet_size: int, r_max: int | None = None) -> UrnModel:
    """The flat-random urn: alpha_r = (c-1)/c^(r+1), truncated at r_max.

    With the default depth the truncation error is far below double-precision
    round-off for every supported alphabet; the no-repeat share then equals
    (c-1)/c to machine precision.
    """
    c = alphabet_size
    if c < 2:
        raise ValidationError(f"hatted urn needs an alphabet of at least 2 symbols, got {c}")
    if r_max is None:
        r_max = _default_hatted_r_max(c)
    if r_max < 1:
        raise ValidationError(f"r_max must be >= 1, got {r_max}")
    alpha = {r: (c - 1) / c ** (r + 1) for r in range(1, r_max + 1)}
    return UrnModel(alpha=alpha, no_repeat=1.0 - sum(alpha.values()), alphabet_size=c)


def hatted_apparent(alphabet_size: int, r: int, n_letters: int) -> float:
    """Expected apparent r-gramme repeat count of a flat-random circle:
    (N(N-1)/2) / c^r."""
    if alphabet_size < 2:
        raise ValidationError(f"alphabet size must be >= 2, got {alphabet_size}")
    if n_letters < 2:
        raise ValidationError(f"need at least 2 letters, got {n_letters}")
    if r < 0:
        raise ValidationError(f"r must be >= 0, got {r}")
    return (n_letters * (n_letters - 1) / 2) * alphabet_size ** float(-r)


def acceptance_proportion(urn: UrnModel) -> float:
    """Large-overlap fraction of drawing sessions that hit the target exactly:
    1 / (1 + sum of r * alpha_r)."""
    return 1.0 / (1.0 + urn.mean_extra_cells)


def exact_completion_probability(urn: UrnModel, overlap: int) -> float:
    """Exact probability that the drawing process lands on the overlap.

    f(0) = 1 and f(n) = A*f(n-1) + sum_r alpha_r * f(n-r-1), dropping terms
    with a negative index: every way of composing n cells out of no-repeat
    blocks (one cell) and r-gramme blocks (r+1 cells).
    """
    if overlap < 0:
        raise ValidationError(f"overlap must be >= 0, got {overlap}")
    f = [1.0]
    for n in range(1, overlap + 1):
        p = urn.no_repeat * f[n - 1]
        for r, a in urn.alpha.items():
            if n - r - 1 >= 0:
                p += a * f[n - r - 1]
        f.append(p)
    return f[overlap]


def _figure_from_block_ends(ends: np.ndarray, n_cells: int, keep_trailing_o: bool) -> RepetitionFigure:
    # Each draw contributes its cells and terminates with O, so the O cells
    # sit exactly at the cumulative block ends.
    cells = np.full(n_cells, ord(X_CELL), dtype=np.uint8)
    cells[ends] = ord(O_CELL)
    text = cells.tobytes().decode("ascii")
    if not keep_trailing_o:
        text = text[:-1]
    return RepetitionFigure(text)


def sample_figures(
    urn: UrnModel,
    overlap: int,
    count: int,
    seed: int | None = None,
    keep_trailing_o: bool = True,
) -> tuple[list[RepetitionFigure], int]:
    """Draw repetition figures of the given overlap from the urn.

    Returns ``count`` completed figures plus the number of comparisons
    scrapped for jumping past the target length.  Completed figures end in O
    by construction; ``keep_trailing_o=False`` crosses that final cell off,
    yielding the genuine figure one cell shorter.  Deterministic for a given
    seed.  The rejection loop terminates with probability one because the
    no-repeat proportion is positive.
    """
    if overlap < 1:
        raise ValidationError(f"overlap must be >= 1, got {overlap}")
    if count < 1:
        raise ValidationError(f"count must be >= 1, got {count}")

    rng = checked_rng(seed)
    lengths = np.array([1] + [r + 1 for r in sorted(urn.alpha)], dtype=np.int64)
    probs = np.array([urn.no_repeat] + [urn.alpha[r] for r in sorted(urn.alpha)])
    probs = probs / probs.sum()

    figures: list[RepetitionFigure] = []
    scrapped = 0
    # Every block is at least one cell, so `overlap` draws always settle a
    # session; sessions are sampled as rows of a block-length matrix.
    max_rows = max(1, 30_000_000 // (8 * overlap))
    while len(figures) < count:
        need = count - len(figures)
        rows = min(max(64, need + need // 8 + 16), max_rows)
        block_lengths = lengths[rng.choice(lengths.size, size=(rows, overlap), p=probs)]
        cum = block_lengths.cumsum(axis=1)
        stop = (cum >= overlap).argmax(axis=1)
        exact = cum[np.arange(rows), stop] == overlap
        for row in range(rows):
            if len(figures) == count:
                break
            if exact[row]:
                ends = cum[row, : stop[row] + 1] - 1
                figures.append(_figure_from_block_ends(ends, overlap, keep_trailing_o))
            else:
                scrapped += 1
    return figures, scrapped


def figures_from_draws(
    draws: Iterable[int],
    overlap: int,
    count: int,
    keep_trailing_o: bool = True,
) -> tuple[list[RepetitionFigure], int]:
    """Replay an explicit draw sequence through the figure-building procedure.

    Draw 0 is a no-repeat card; draw r >= 1 is an r-gramme card.  Stops once
    ``count`` comparisons complete, leaving later draws unconsumed.  Raises
    if the sequence runs out mid-comparison.
    """
    if overlap < 1:
        raise ValidationError(f"overlap must be >= 1, got {overlap}")
    source: Iterator[int] = iter(draws)
    figures: list[RepetitionFigure] = []
    scrapped = 0
    cells: list[str] = []
    while len(figures) < count:
        try:
            r = next(source)
        except StopIteration:
            raise ValidationError(
                f"draw sequence exhausted after {len(figures)} of {count} comparisons"
            ) from None
        if r < 0:
            raise ValidationError(f"invalid draw {r}; use 0 for no-repeat, r for an r-gramme")
        cells.append(X_CELL * r + O_CELL)
        total = sum(len(part) for part in cells)
        if total == overlap:
            text = "".join(cells)
            figures.append(RepetitionFigure(text if keep_trailing_o else text[:-1]))
            cells = []
        elif total > overlap:
            scrapped += 1
            cells = []
    return figures, scrapped


def urn_to_json(urn: UrnModel, **extra) -> str:
    doc = {
        "c": urn.alphabet_size,
        "alpha": {str(r): urn.alpha[r] for r in sorted(urn.alpha)},
        "A": urn.no_repeat,
    }
    doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def urn_from_json(text: str) -> UrnModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid urn artifact: {exc}") from exc
    try:
        alpha = {int(r): float(a) for r, a in doc["alpha"].items()}
        return UrnModel(alpha=alpha, no_repeat=float(doc["A"]), alphabet_size=int(doc["c"]))
    except KeyError as exc:
        raise ValidationError(f"urn artifact is missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"urn artifact is malformed: {exc}") from exc
