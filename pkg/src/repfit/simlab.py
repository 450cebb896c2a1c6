"""Monte Carlo laboratory for posterior calibration.

Generates synthetic plaintext traffic, enciphers pairs in or out of depth,
scores every comparison's repetition figure, and checks that the predicted
posterior probability of a fit being right matches the labeled ground truth.

The depth model is a shared versus independent uniform key stream under
positionwise modular addition: a "right" pair is enciphered with one key
stream covering both messages at their aligned positions, so ciphertext
coincidences occur exactly where the plaintexts coincide; a "wrong" pair
uses independent streams, making aligned ciphertext letters independent and
uniform regardless of the language.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .corpus import build_corpus, compute_statistics
from .errors import ValidationError
from .rng import checked_rng
from .scoring import weights
from .urn import UrnModel, hatted_urn, urn_from_stats

__all__ = [
    "ExperimentConfig",
    "ExperimentReport",
    "LanguageModel",
    "PosteriorBin",
    "Traffic",
    "calibration_experiment",
    "generate_traffic",
    "run_experiment",
]


@dataclass(frozen=True)
class LanguageModel:
    """Synthetic plaintext source: skewed i.i.d. letters or a first-order chain."""

    alphabet_size: int
    kind: str = "iid-skewed"
    letter_probs: np.ndarray | None = None
    transition: np.ndarray | None = None
    seed: int | None = None

    def __post_init__(self):
        c = self.alphabet_size
        if c < 2:
            raise ValidationError(f"language needs an alphabet of at least 2 symbols, got {c}")
        if self.kind == "iid-skewed":
            probs = (
                np.full(c, 1.0 / c)
                if self.letter_probs is None
                else np.asarray(self.letter_probs, dtype=float)
            )
            if probs.shape != (c,):
                raise ValidationError(f"letter_probs must have {c} entries")
            if (probs < 0).any() or abs(probs.sum() - 1.0) > 1e-12:
                raise ValidationError("letter_probs must be non-negative and sum to 1")
            probs.flags.writeable = False
            object.__setattr__(self, "letter_probs", probs)
        elif self.kind == "markov-1":
            if self.transition is None:
                raise ValidationError("markov-1 language requires a transition matrix")
            t = np.asarray(self.transition, dtype=float)
            if t.shape != (c, c):
                raise ValidationError(f"transition matrix must be {c}x{c}")
            if (t < 0).any() or np.abs(t.sum(axis=1) - 1.0).max() > 1e-12:
                raise ValidationError("transition rows must be non-negative and sum to 1")
            t.flags.writeable = False
            object.__setattr__(self, "transition", t)
        else:
            raise ValidationError(
                f"unknown language kind {self.kind!r}; expected 'iid-skewed' or 'markov-1'"
            )

    def sample(self, shape: tuple[int, ...], rng: np.random.Generator) -> np.ndarray:
        """Letter codes of the given shape (rows are independent texts)."""
        c = self.alphabet_size
        if self.kind == "iid-skewed":
            return rng.choice(c, size=shape, p=self.letter_probs).astype(np.uint8)
        rows, cols = (1, shape[0]) if len(shape) == 1 else shape
        out = np.empty((rows, cols), dtype=np.uint8)
        cum = np.cumsum(self.transition, axis=1)
        state = rng.integers(0, c, size=rows)
        out[:, 0] = state
        for j in range(1, cols):
            u = rng.random(rows)
            state = (u[:, None] < cum[state]).argmax(axis=1)
            out[:, j] = state
        return out.reshape(shape)


@dataclass(frozen=True)
class Traffic:
    """A labeled batch of enciphered message pairs compared at one shift."""

    plain_a: np.ndarray
    plain_b: np.ndarray
    cipher_a: np.ndarray
    cipher_b: np.ndarray
    is_right: np.ndarray
    shift: int
    overlap: int
    fraction_right: float
    prior_log_odds: float

    @property
    def n_pairs(self) -> int:
        return int(self.is_right.size)

    def cipher_coincidences(self) -> np.ndarray:
        """Boolean figure matrix of the aligned ciphertext region, one row per pair."""
        return self.cipher_a[:, self.shift :] == self.cipher_b[:, : self.overlap]

    def plain_coincidences(self) -> np.ndarray:
        return self.plain_a[:, self.shift :] == self.plain_b[:, : self.overlap]


def generate_traffic(
    lm: LanguageModel,
    n_pairs: int,
    msg_len: int,
    overlap: int,
    fraction_right: float,
    seed: int | None = None,
) -> Traffic:
    """Draw plaintext pairs and encipher them in or out of depth.

    Exactly round(n_pairs * fraction_right) pairs are right (in depth); the
    label order is shuffled.  The recorded prior odds are
    fraction_right / (1 - fraction_right).
    """
    if not 0 < fraction_right < 1:
        raise ValidationError(f"fraction_right must lie strictly in (0, 1), got {fraction_right}")
    if not 1 <= overlap <= msg_len:
        raise ValidationError(f"overlap must lie in [1, msg_len], got {overlap} of {msg_len}")
    if n_pairs < 1:
        raise ValidationError(f"n_pairs must be >= 1, got {n_pairs}")

    rng = checked_rng(seed)
    c = lm.alphabet_size
    shift = msg_len - overlap

    plain_a = lm.sample((n_pairs, msg_len), rng)
    plain_b = lm.sample((n_pairs, msg_len), rng)

    # One key stream per pair covering both messages' machine positions; a
    # second, independent stream replaces B's aligned keys for wrong pairs.
    key = rng.integers(0, c, size=(n_pairs, msg_len + shift), dtype=np.int16)
    key_b_wrong = rng.integers(0, c, size=(n_pairs, msg_len), dtype=np.int16)

    n_right = round(n_pairs * fraction_right)
    is_right = np.zeros(n_pairs, dtype=bool)
    is_right[rng.permutation(n_pairs)[:n_right]] = True

    key_a = key[:, :msg_len]
    key_b = np.where(is_right[:, None], key[:, shift:], key_b_wrong)

    cipher_a = ((plain_a.astype(np.int16) + key_a) % c).astype(np.uint8)
    cipher_b = ((plain_b.astype(np.int16) + key_b) % c).astype(np.uint8)

    return Traffic(
        plain_a=plain_a,
        plain_b=plain_b,
        cipher_a=cipher_a,
        cipher_b=cipher_b,
        is_right=is_right,
        shift=shift,
        overlap=overlap,
        fraction_right=fraction_right,
        prior_log_odds=math.log(fraction_right / (1.0 - fraction_right)),
    )


def run_length_table(coincidences: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """All maximal runs of True cells in a boolean matrix.

    Returns (row indices, run lengths), one entry per maximal run, in
    row-major order.
    """
    n, width = coincidences.shape
    padded = np.zeros((n, width + 2), dtype=np.int8)
    padded[:, 1:-1] = coincidences
    d = np.diff(padded, axis=1)
    start_rows, start_cols = np.nonzero(d == 1)
    _, end_cols = np.nonzero(d == -1)
    return start_rows, end_cols - start_cols


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass(frozen=True)
class PosteriorBin:
    """One log-odds interval of scored comparisons."""

    lo: float
    hi: float
    n_total: int
    n_right: int
    mean_posterior: float
    empirical_right_fraction: float
    binomial_se: float

    def to_dict(self) -> dict:
        return {
            "lo": self.lo,
            "hi": self.hi,
            "n_total": self.n_total,
            "n_right": self.n_right,
            "mean_posterior": self.mean_posterior,
            "empirical_right_fraction": self.empirical_right_fraction,
            "binomial_se": self.binomial_se,
        }


@dataclass(frozen=True)
class ExperimentReport:
    """Binned calibration summary of one experiment."""

    config: dict
    bins: tuple[PosteriorBin, ...]
    totals: dict

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "bins": [b.to_dict() for b in self.bins],
            "totals": self.totals,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def csv_rows(self) -> list[str]:
        header = "lo,hi,n_total,n_right,mean_posterior,empirical_right_fraction,binomial_se"
        rows = [header]
        for b in self.bins:
            rows.append(
                f"{b.lo!r},{b.hi!r},{b.n_total},{b.n_right},"
                f"{b.mean_posterior!r},{b.empirical_right_fraction!r},{b.binomial_se!r}"
            )
        return rows


_CONFIG_DEFAULTS = {
    "msg_len": None,
    "r_max": 16,
    "n_decodes": 50,
    "bin_width": 1.0,
    "urn": "from-corpus",
    "smoothing": "auto",
}


@dataclass(frozen=True)
class ExperimentConfig:
    language: LanguageModel
    corpus_size: int
    n_pairs: int
    overlap: int
    fraction_right: float
    seed: int
    msg_len: int | None = None
    r_max: int = 16
    n_decodes: int = 50
    bin_width: float = 1.0
    urn: str = "from-corpus"
    smoothing: str | float | None = "auto"
    echo: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        def require(name, kind):
            if name not in doc:
                raise ValidationError(f"experiment config is missing field {name!r}")
            value = doc[name]
            if not isinstance(value, kind):
                raise ValidationError(
                    f"experiment config field {name!r} must be {kind.__name__}-valued"
                )
            return value

        lang = require("language", dict)
        if "c" not in lang:
            raise ValidationError("experiment config is missing field 'language.c'")
        lm = LanguageModel(
            alphabet_size=int(lang["c"]),
            kind=lang.get("kind", "iid-skewed"),
            letter_probs=lang.get("probs"),
            transition=lang.get("transition"),
        )
        known = {"language", "corpus_size", "n_pairs", "overlap", "fraction_right", "seed"} | set(
            _CONFIG_DEFAULTS
        )
        for name in doc:
            if name not in known:
                raise ValidationError(f"experiment config has unknown field {name!r}")
        urn_kind = doc.get("urn", "from-corpus")
        if urn_kind not in ("from-corpus", "hatted"):
            raise ValidationError(
                f"experiment config field 'urn' must be 'from-corpus' or 'hatted', got {urn_kind!r}"
            )
        return cls(
            language=lm,
            corpus_size=require("corpus_size", int),
            n_pairs=require("n_pairs", int),
            overlap=require("overlap", int),
            fraction_right=float(require("fraction_right", (int, float))),
            seed=require("seed", int),
            msg_len=doc.get("msg_len"),
            r_max=doc.get("r_max", 16),
            n_decodes=doc.get("n_decodes", 50),
            bin_width=float(doc.get("bin_width", 1.0)),
            urn=urn_kind,
            smoothing=doc.get("smoothing", "auto"),
            echo=dict(doc),
        )


def _corpus_texts(lm: LanguageModel, total: int, n_decodes: int, rng: np.random.Generator):
    n_decodes = max(1, min(n_decodes, total))
    base = total // n_decodes
    lengths = [base] * n_decodes
    lengths[-1] += total - base * n_decodes
    return [lm.sample((length,), rng) for length in lengths]


def fit_language_urn(
    lm: LanguageModel,
    corpus_size: int,
    r_max: int,
    n_decodes: int,
    rng: np.random.Generator,
) -> UrnModel:
    """Sample a plaintext corpus from the language and fit urn proportions."""
    corpus = build_corpus(_corpus_texts(lm, corpus_size, n_decodes, rng), lm.alphabet_size)
    return urn_from_stats(compute_statistics(corpus, r_max=r_max))


def calibration_experiment(
    lm: LanguageModel,
    corpus_size: int,
    n_pairs: int,
    overlap: int,
    fraction_right: float,
    seed: int,
    msg_len: int | None = None,
    r_max: int = 16,
    n_decodes: int = 50,
    bin_width: float = 1.0,
    urn: str = "from-corpus",
    smoothing: str | float | None = "auto",
    config_echo: dict | None = None,
) -> ExperimentReport:
    """Fit an urn, score labeled traffic with the true prior, bin by log-odds.

    ``smoothing="auto"`` floors unseen card proportions at half a card of the
    fitted corpus, so rare long runs in traffic remain scorable; pass None to
    keep the scorer's hard error instead.  Deterministic for a given seed.
    """
    if bin_width <= 0:
        raise ValidationError(f"bin_width must be positive, got {bin_width}")
    msg_len = overlap if msg_len is None else msg_len
    master = checked_rng(seed)

    if urn == "from-corpus":
        corpus = build_corpus(_corpus_texts(lm, corpus_size, n_decodes, master), lm.alphabet_size)
        stats = compute_statistics(corpus, r_max=r_max)
        model = urn_from_stats(stats)
        # Half a card keeps unseen long runs scorable without inventing
        # meaningful evidence mass.
        floor = 0.5 / stats.total_cards if smoothing == "auto" else smoothing
    elif urn == "hatted":
        model = hatted_urn(lm.alphabet_size)
        floor = None if smoothing == "auto" else smoothing
    else:
        raise ValidationError(f"unknown urn kind {urn!r}")

    w = weights(model, log_base="nat", floor=floor)

    traffic = generate_traffic(
        lm,
        n_pairs,
        msg_len,
        overlap,
        fraction_right,
        seed=int(master.integers(0, 2**63)),
    )

    coinc = traffic.cipher_coincidences()
    rows, lengths = run_length_table(coinc)
    max_len = int(lengths.max()) if lengths.size else 0
    mu_table = np.zeros(max_len + 1)
    for r in range(1, max_len + 1):
        mu_table[r] = w.mu_for(r)

    log_odds = np.full(n_pairs, traffic.prior_log_odds + w.correction - w.nu * overlap)
    np.add.at(log_odds, rows, mu_table[lengths])
    posterior = _sigmoid(log_odds)

    bin_ids = np.floor(log_odds / bin_width).astype(np.int64)
    unique_ids, inverse = np.unique(bin_ids, return_inverse=True)
    n_total = np.bincount(inverse)
    n_right = np.bincount(inverse, weights=traffic.is_right.astype(float))
    mean_post = np.bincount(inverse, weights=posterior) / n_total

    bins = []
    for i, bin_id in enumerate(unique_ids):
        n = int(n_total[i])
        right = int(round(n_right[i]))
        p = float(mean_post[i])
        bins.append(
            PosteriorBin(
                lo=float(bin_id * bin_width),
                hi=float((bin_id + 1) * bin_width),
                n_total=n,
                n_right=right,
                mean_posterior=p,
                empirical_right_fraction=right / n,
                binomial_se=math.sqrt(max(p * (1.0 - p), 0.0) / n),
            )
        )

    right_mask = traffic.is_right
    totals = {
        "n_pairs": n_pairs,
        "n_right": int(right_mask.sum()),
        "n_wrong": int(n_pairs - right_mask.sum()),
        "prior_log_odds": traffic.prior_log_odds,
        "mean_log_odds_right": float(log_odds[right_mask].mean()),
        "mean_log_odds_wrong": float(log_odds[~right_mask].mean()),
        "std_log_odds_right": float(log_odds[right_mask].std()),
        "std_log_odds_wrong": float(log_odds[~right_mask].std()),
        "max_run_scored": max_len,
    }
    echo = dict(config_echo) if config_echo else {
        "language": {"c": lm.alphabet_size, "kind": lm.kind},
        "corpus_size": corpus_size,
        "n_pairs": n_pairs,
        "overlap": overlap,
        "msg_len": msg_len,
        "fraction_right": fraction_right,
        "seed": seed,
        "r_max": r_max,
        "n_decodes": n_decodes,
        "bin_width": bin_width,
        "urn": urn,
        "smoothing": "auto" if smoothing == "auto" else smoothing,
    }
    return ExperimentReport(config=echo, bins=tuple(bins), totals=totals)


def run_experiment(config: ExperimentConfig) -> ExperimentReport:
    return calibration_experiment(
        config.language,
        config.corpus_size,
        config.n_pairs,
        config.overlap,
        config.fraction_right,
        config.seed,
        msg_len=config.msg_len,
        r_max=config.r_max,
        n_decodes=config.n_decodes,
        bin_width=config.bin_width,
        urn=config.urn,
        smoothing=config.smoothing,
        config_echo=config.echo or None,
    )
