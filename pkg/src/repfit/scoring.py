"""Bayesian log-odds scoring of alignment fits from repetition figures.

Given an urn model fitted to plain language and a figure with run spectrum
{k_r} over overlap L, the odds that the underlying alignment is right are

    q = lambda * right_relevant_proportion / wrong_relevant_proportion,

where lambda is the caller's prior odds, the right proportion comes from the
language urn and the wrong proportion from the flat-random urn of the same
alphabet.  In log form this collapses to per-run evidence weights plus a
per-letter length penalty:

    log q = log lambda + sum_r mu_r * k_r - nu * L
            + log[(1 - sum alpha_r) * (1 + sum r * alpha_r)],

    mu_r = log(alpha_r * c^(r+1) / (c-1)) - (r+1) * log(c*A / (c-1)),
    nu   = log((c-1) / (c*A)).

Natural log is the canonical unit; decibans (10 * log10) are offered for
display.  All weights derived from the flat-random urn itself vanish, so
language that is indistinguishable from random carries no evidence.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

from .errors import ModelError, ValidationError
from .figures import RepetitionFigure, RunSpectrum, run_spectrum
from .urn import UrnModel

__all__ = [
    "FitScore",
    "ScoreWeights",
    "odds_of_fit",
    "right_relevant_proportion",
    "score_to_json",
    "weights",
    "weights_from_json",
    "weights_to_json",
    "wrong_relevance_ratio",
    "wrong_relevant_proportion",
]

_LOG_UNIT_SCALE = {"nat": 1.0, "db": 10.0 / math.log(10.0)}


def _unit_scale(log_base: str) -> float:
    try:
        return _LOG_UNIT_SCALE[log_base]
    except KeyError:
        raise ValidationError(
            f"unknown log unit {log_base!r}; expected 'nat' or 'db'"
        ) from None


@dataclass(frozen=True)
class ScoreWeights:
    """Evidence weights of one urn, in a chosen log unit.

    ``mu[r]`` weighs each maximal r-run; ``nu`` penalizes every overlap
    letter; ``correction`` is the constant log[(1 - sum alpha)(1 + sum
    r*alpha)].  Run lengths missing from ``mu`` (no such card in the urn)
    make a fit unscorable unless a smoothing floor is configured, in which
    case the missing proportions are read as ``floor``.
    """

    alphabet_size: int
    log_base: str
    mu: Mapping[int, float]
    nu: float
    correction: float
    floor: float | None = None

    def mu_for(self, r: int) -> float:
        """Weight for a maximal run of length r, applying the floor if set."""
        if r in self.mu:
            return self.mu[r]
        if self.floor is None:
            raise ModelError(
                f"no evidence weight for {r}-gramme repeats: the urn has no such card "
                "and no smoothing floor is configured"
            )
        c = self.alphabet_size
        scale = _unit_scale(self.log_base)
        nu_nat = self.nu / scale
        mu_nat = (
            math.log(self.floor) + (r + 1) * math.log(c) - math.log(c - 1)
            + (r + 1) * nu_nat
        )
        return mu_nat * scale


@dataclass(frozen=True)
class FitScore:
    """Scored odds of one fit being right."""

    prior_log_odds: float
    evidence: float
    correction: float
    log_odds: float
    posterior: float
    log_base: str = "nat"


def weights(urn: UrnModel, log_base: str = "nat", floor: float | None = None) -> ScoreWeights:
    """Evidence weights of an urn against the flat-random null of the same
    alphabet size."""
    scale = _unit_scale(log_base)
    c = urn.alphabet_size
    if c < 2:
        raise ValidationError(f"scoring needs an alphabet of at least 2 symbols, got {c}")
    if floor is not None and floor <= 0:
        raise ValidationError(f"smoothing floor must be positive, got {floor}")
    log_ca = math.log(c * urn.no_repeat / (c - 1))
    mu = {
        r: scale * (math.log(a) + (r + 1) * math.log(c) - math.log(c - 1) - (r + 1) * log_ca)
        for r, a in urn.alpha.items()
    }
    correction = math.log(urn.no_repeat * (1.0 + urn.mean_extra_cells))
    return ScoreWeights(
        alphabet_size=c,
        log_base=log_base,
        mu=mu,
        nu=-log_ca * scale,
        correction=correction * scale,
        floor=floor,
    )


def _check_spectrum_fits(spectrum: RunSpectrum, overlap: int) -> int:
    used = spectrum.cells_with_terminators
    if used > overlap + 1:
        raise ValidationError(
            f"spectrum needs {used} cells (runs plus terminators) "
            f"but the overlap admits only {overlap + 1}"
        )
    return overlap + 1 - used


def right_relevant_proportion(
    urn: UrnModel,
    spectrum: RunSpectrum,
    overlap: int,
    include_prefactor: bool = True,
) -> float:
    """Fraction of right comparisons showing exactly this figure.

    (1 + sum r*alpha_r) * A^(L + 1 - sum (r+1)k_r) * prod alpha_r^k_r.
    The prefactor is the large-overlap normalization for sessions lost to
    overshoot; without it the value is the raw probability that a completed
    drawing session spells out this figure.
    """
    exponent = _check_spectrum_fits(spectrum, overlap)
    value = urn.no_repeat ** exponent
    for r, k in spectrum.items():
        value *= urn.alpha.get(r, 0.0) ** k
    if include_prefactor:
        value *= 1.0 + urn.mean_extra_cells
    return value


def wrong_relevant_proportion(alphabet_size: int, spectrum: RunSpectrum, overlap: int) -> float:
    """Fraction of wrong comparisons showing exactly this figure.

    The right-proportion form evaluated on the flat-random urn:
    (c/(c-1)) * ((c-1)/c)^(L + 1 - sum (r+1)k_r) * prod ((c-1)/c^(r+1))^k_r,
    which reduces exactly to the independent-uniform-letters probability.
    """
    c = alphabet_size
    if c < 2:
        raise ValidationError(f"alphabet size must be >= 2, got {c}")
    exponent = _check_spectrum_fits(spectrum, overlap)
    value = (c / (c - 1)) * ((c - 1) / c) ** exponent
    for r, k in spectrum.items():
        value *= ((c - 1) / c ** (r + 1)) ** k
    return value


def wrong_relevance_ratio(overlap: int, repeated_letters: int, alphabet_size: int) -> float:
    """Probability that a wrong comparison repeats at R given positions and
    nowhere else: (1/c)^R * ((c-1)/c)^(L-R) under independent uniform letters."""
    c = alphabet_size
    if c < 2:
        raise ValidationError(f"alphabet size must be >= 2, got {c}")
    if not 0 <= repeated_letters <= overlap:
        raise ValidationError(
            f"repeated letters must lie in [0, overlap], got {repeated_letters} of {overlap}"
        )
    return (1.0 / c) ** repeated_letters * ((c - 1) / c) ** (overlap - repeated_letters)


def score_with_weights(
    score_weights: ScoreWeights,
    spectrum: RunSpectrum,
    overlap: int,
    prior_log_odds: float = 0.0,
) -> FitScore:
    """Combine prior, evidence and correction into a fit score.

    The prior is given in the weights' own log unit.  The posterior is the
    probability the fit is right: q/(1+q), evaluated stably from log q.
    """
    if not math.isfinite(prior_log_odds):
        raise ValidationError(f"prior log-odds must be finite, got {prior_log_odds}")
    _check_spectrum_fits(spectrum, overlap)
    evidence = sum(score_weights.mu_for(r) * k for r, k in spectrum.items())
    evidence -= score_weights.nu * overlap
    log_odds = prior_log_odds + evidence + score_weights.correction
    log_odds_nat = log_odds / _unit_scale(score_weights.log_base)
    if log_odds_nat >= 0:
        posterior = 1.0 / (1.0 + math.exp(-log_odds_nat))
    else:
        q = math.exp(log_odds_nat)
        posterior = q / (1.0 + q)
    return FitScore(
        prior_log_odds=prior_log_odds,
        evidence=evidence,
        correction=score_weights.correction,
        log_odds=log_odds,
        posterior=posterior,
        log_base=score_weights.log_base,
    )


def odds_of_fit(
    urn: UrnModel,
    figure: RepetitionFigure | None = None,
    spectrum: RunSpectrum | None = None,
    overlap: int | None = None,
    prior_log_odds: float = 0.0,
    log_base: str = "nat",
    floor: float | None = None,
) -> FitScore:
    """Score a fit from a figure, or from a spectrum plus overlap."""
    if figure is not None:
        if spectrum is not None or overlap is not None:
            raise ValidationError("pass either a figure or a spectrum with an overlap, not both")
        spectrum = run_spectrum(figure)
        overlap = figure.length
    elif spectrum is None or overlap is None:
        raise ValidationError("scoring a spectrum requires its overlap")
    return score_with_weights(weights(urn, log_base, floor), spectrum, overlap, prior_log_odds)


def weights_to_json(score_weights: ScoreWeights, **extra) -> str:
    doc = {
        "c": score_weights.alphabet_size,
        "log_base": score_weights.log_base,
        "mu": {str(r): score_weights.mu[r] for r in sorted(score_weights.mu)},
        "nu": score_weights.nu,
        "correction": score_weights.correction,
    }
    if score_weights.floor is not None:
        doc["floor"] = score_weights.floor
    doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def weights_from_json(text: str) -> ScoreWeights:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid weights artifact: {exc}") from exc
    try:
        return ScoreWeights(
            alphabet_size=int(doc["c"]),
            log_base=str(doc["log_base"]),
            mu={int(r): float(m) for r, m in doc["mu"].items()},
            nu=float(doc["nu"]),
            correction=float(doc["correction"]),
            floor=float(doc["floor"]) if "floor" in doc else None,
        )
    except KeyError as exc:
        raise ValidationError(f"weights artifact is missing field {exc.args[0]!r}") from exc
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"weights artifact is malformed: {exc}") from exc


def score_to_json(score: FitScore, **extra) -> str:
    doc = {
        "log_odds": score.log_odds,
        "posterior": score.posterior,
        "evidence": score.evidence,
        "prior_log_odds": score.prior_log_odds,
        "correction": score.correction,
        "unit": score.log_base,
    }
    doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
