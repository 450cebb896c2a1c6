"""Repetition figures: X/O coincidence patterns over aligned message pairs.

Placing two messages side by side at some relative shift aligns a number of
letter positions (the overlap).  Writing ``X`` wherever the aligned letters
agree and ``O`` wherever they differ gives the comparison's repetition
figure.  Maximal runs of ``X`` cells are the figure's repeats; a run of
length r is an r-gramme repeat.  Everything downstream (urn models, odds
scoring) consumes a figure only through its overlap and its run spectrum.

All types in this module are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import groupby
from typing import Mapping, Sequence

from .errors import EmptyComparisonError, FigureParseError, ValidationError

__all__ = [
    "Alignment",
    "RepetitionFigure",
    "RunSpectrum",
    "draws_needed",
    "figure_from_comparison",
    "parse_figure",
    "run_spectrum",
]

X_CELL = "X"
O_CELL = "O"


@dataclass(frozen=True)
class RepetitionFigure:
    """An X/O pattern over the aligned positions of one comparison.

    ``X`` marks a coincidence (the aligned letters agree), ``O`` the absence
    of one.  Serialized form is the plain cell string.
    """

    cells: str

    @property
    def length(self) -> int:
        """The overlap: number of aligned positions."""
        return len(self.cells)

    @property
    def repeated_letters(self) -> int:
        """Number of coinciding positions (X cells)."""
        return self.cells.count(X_CELL)

    def serialize(self) -> str:
        return self.cells

    def __str__(self) -> str:
        return self.cells


@dataclass(frozen=True)
class RunSpectrum:
    """Counts of maximal X-runs by exact length.

    ``counts[r]`` is the number of maximal runs of exactly r consecutive
    X cells.  Runs touching a figure end count at their visible length.
    Zero entries are dropped so equal spectra compare equal.
    """

    counts: Mapping[int, int]

    def __post_init__(self):
        cleaned: dict[int, int] = {}
        for r, k in self.counts.items():
            if r < 1 or int(r) != r:
                raise ValidationError(f"run length must be a positive integer, got {r!r}")
            if k < 0 or int(k) != k:
                raise ValidationError(f"run count for length {r} must be a non-negative integer, got {k!r}")
            if k:
                cleaned[int(r)] = int(k)
        object.__setattr__(self, "counts", cleaned)

    def get(self, r: int, default: int = 0) -> int:
        return self.counts.get(r, default)

    def items(self):
        return self.counts.items()

    def __bool__(self) -> bool:
        return bool(self.counts)

    @property
    def repeated_letters(self) -> int:
        """Total X cells accounted for: sum of r * k_r."""
        return sum(r * k for r, k in self.counts.items())

    @property
    def total_runs(self) -> int:
        return sum(self.counts.values())

    @property
    def cells_with_terminators(self) -> int:
        """Sum of (r + 1) * k_r: cells each run occupies once its terminating
        no-coincidence cell is charged to it."""
        return sum((r + 1) * k for r, k in self.counts.items())


@dataclass(frozen=True)
class Alignment:
    """Relative placement of message B against message A.

    ``shift`` is the signed offset of B's first letter relative to A's;
    position i of A aligns with position i - shift of B.  Serialized form is
    the decimal signed shift.
    """

    shift: int

    def overlap(self, len_a: int, len_b: int) -> int:
        """Number of aligned positions for messages of the given lengths."""
        return max(0, min(len_a, self.shift + len_b) - max(0, self.shift))

    def serialize(self) -> str:
        return str(self.shift)

    @classmethod
    def parse(cls, text: str) -> "Alignment":
        try:
            return cls(int(text, 10))
        except ValueError as exc:
            raise ValidationError(f"invalid alignment shift {text!r}") from exc


def parse_figure(text: str) -> RepetitionFigure:
    """Parse a plain X/O string into a figure.

    Rejects any other character, naming the offending position.
    """
    for position, ch in enumerate(text):
        if ch not in (X_CELL, O_CELL):
            raise FigureParseError(
                f"invalid figure character {ch!r} at position {position} (expected X or O)",
                position,
            )
    return RepetitionFigure(text)


def run_spectrum(figure: RepetitionFigure) -> RunSpectrum:
    """Count the figure's maximal X-runs by exact length."""
    counts: dict[int, int] = {}
    for cell, group in groupby(figure.cells):
        if cell == X_CELL:
            r = sum(1 for _ in group)
            counts[r] = counts.get(r, 0) + 1
    return RunSpectrum(counts)


def figure_from_comparison(a: Sequence, b: Sequence, shift: int) -> RepetitionFigure:
    """Derive the repetition figure of two messages compared at a shift.

    One cell per aligned index pair (a[i], b[i - shift]), X iff the letters
    are equal, ordered by i ascending.  Messages may be strings or any
    indexable letter-code sequences over the same alphabet.
    """
    alignment = Alignment(shift)
    if alignment.overlap(len(a), len(b)) < 1:
        raise EmptyComparisonError(
            f"shift {shift} gives zero overlap for lengths {len(a)} and {len(b)}"
        )
    start = max(0, shift)
    stop = min(len(a), shift + len(b))
    cells = "".join(
        X_CELL if a[i] == b[i - shift] else O_CELL for i in range(start, stop)
    )
    return RepetitionFigure(cells)


def draws_needed(figure: RepetitionFigure) -> int:
    """Number of urn draws that produce this figure: overlap minus repeated
    letters, plus one for the terminating draw of the final run or cell."""
    return figure.length - figure.repeated_letters + 1
