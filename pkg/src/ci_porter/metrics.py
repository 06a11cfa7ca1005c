"""Translation quality metrics: build success rate, term-frequency cosine
similarity and CrystalBLEU (BLEU without trivially shared n-grams)."""
from __future__ import annotations

import hashlib
import json
import math
import re
import statistics
from collections import Counter
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

SUCCESS = "success"
FAILURE = "failure"

PRECISION_FLOOR = 1e-9
DEFAULT_N_MAX = 4
DEFAULT_K = 500


class MetricError(ValueError):
    """The metric is undefined for the given input."""


@dataclass(frozen=True)
class BuildOutcome:
    case_id: str
    status: str
    messages: tuple[str, ...] = ()

    def __post_init__(self):
        if self.status not in (SUCCESS, FAILURE):
            raise ValueError(f"unknown build status {self.status!r}")
        if self.status == FAILURE and not self.messages:
            raise ValueError("a failed build must carry at least one message")
        object.__setattr__(self, "messages", tuple(self.messages))

    @property
    def ok(self) -> bool:
        return self.status == SUCCESS

    def to_dict(self) -> dict:
        return {"case_id": self.case_id, "status": self.status, "messages": list(self.messages)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "BuildOutcome":
        return cls(str(data["case_id"]), str(data["status"]), tuple(data.get("messages") or ()))


def build_success_rate(outcomes: Sequence[BuildOutcome]) -> Fraction:
    """Successful builds over all builds, as an exact fraction."""
    if not outcomes:
        raise MetricError("build success rate of an empty corpus is undefined")
    return Fraction(sum(1 for o in outcomes if o.ok), len(outcomes))


def round3(value) -> float:
    """Half-up rounding to 3 decimals, exact for Fractions."""
    if isinstance(value, Fraction):
        d = Decimal(value.numerator) / Decimal(value.denominator)
    else:
        d = Decimal(str(value))
    return float(d.quantize(Decimal("0.001"), rounding=ROUND_HALF_UP))


# --- tokens ------------------------------------------------------------------

_STRIP = ":,\"'[]{}-"
_LEAD = re.compile(r"^[:,\"'\[\]{}-]*")


def tokenize(text: str) -> list[str]:
    """Whitespace split, then trim YAML punctuation from both ends.

    A leading hyphen run directly before a word character is an option
    flag and is kept (``-m``, ``--upgrade``).  Tokens with no letters or
    digits at all (``-``, ``|``, ``&&``) are kept whole.
    """
    out = []
    for raw in text.split():
        if not any(c.isalnum() for c in raw):
            out.append(raw)
            continue
        prefix = _LEAD.match(raw).group(0)
        body = raw[len(prefix):].rstrip(_STRIP)
        hyphens = len(prefix) - len(prefix.rstrip("-"))
        token = prefix[len(prefix) - hyphens:] + body if hyphens else body
        if token:
            out.append(token)
    return out


@dataclass(frozen=True)
class TokenVector:
    counts: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        clean = {t: int(c) for t, c in self.counts.items() if c}
        if any(c < 0 for c in clean.values()):
            raise ValueError("token counts must be non-negative")
        object.__setattr__(self, "counts", clean)

    @classmethod
    def from_tokens(cls, tokens: Iterable[str]) -> "TokenVector":
        return cls(Counter(tokens))

    @classmethod
    def from_text(cls, text: str) -> "TokenVector":
        return cls.from_tokens(tokenize(text))

    def norm(self) -> float:
        return math.sqrt(sum(c * c for c in self.counts.values()))


def cosine_similarity(a: TokenVector, b: TokenVector) -> float:
    na, nb = a.norm(), b.norm()
    if na == 0 or nb == 0:
        raise MetricError("cosine similarity with a zero vector is undefined")
    small, large = (a.counts, b.counts) if len(a.counts) <= len(b.counts) else (b.counts, a.counts)
    dot = sum(c * large.get(t, 0) for t, c in small.items())
    return min(1.0, dot / (na * nb))


def text_similarity(a: str, b: str) -> float:
    return cosine_similarity(TokenVector.from_text(a), TokenVector.from_text(b))


# --- CrystalBLEU ----------------------------------------------------------------


def ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


@dataclass(frozen=True)
class SharedNgramSet:
    n_max: int = DEFAULT_N_MAX
    k: int = DEFAULT_K
    ngrams: frozenset = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "ngrams", frozenset(tuple(g) for g in self.ngrams))
        if any(len(g) > self.n_max or not g for g in self.ngrams):
            raise ValueError("shared n-grams must have length 1..n_max")
        if len(self.ngrams) > self.k * self.n_max:
            raise ValueError("more shared n-grams than k * n_max")

    def to_dict(self) -> dict:
        return {"n_max": self.n_max, "k": self.k, "ngrams": sorted(list(g) for g in self.ngrams)}

    @classmethod
    def from_dict(cls, data: Mapping) -> "SharedNgramSet":
        return cls(int(data["n_max"]), int(data["k"]), frozenset(tuple(g) for g in data["ngrams"]))


def trivially_shared_ngrams(corpus: Sequence[Sequence[str]], n_max: int = DEFAULT_N_MAX,
                            k: int = DEFAULT_K) -> SharedNgramSet:
    """The k most frequent n-grams of each order 1..n_max; ties go to the
    lexicographically smaller token tuple."""
    if not corpus:
        raise MetricError("cannot derive shared n-grams from an empty corpus")
    if n_max < 1 or k < 0:
        raise ValueError("n_max must be >= 1 and k >= 0")
    chosen: set[tuple] = set()
    for n in range(1, n_max + 1):
        tally: Counter = Counter()
        for doc in corpus:
            tally.update(ngrams(list(doc), n))
        ranked = sorted(tally.items(), key=lambda item: (-item[1], item[0]))
        chosen.update(g for g, _ in ranked[:k])
    return SharedNgramSet(n_max, k, frozenset(chosen))


def crystal_bleu(candidate: Sequence[str], reference: Sequence[str],
                 shared: Optional[SharedNgramSet] = None) -> float:
    """BLEU over orders 1..n_max with uniform weights and the standard brevity
    penalty, after dropping shared n-grams from both sides.  An order with no
    clipped matches (or no surviving candidate n-grams) contributes the
    precision floor instead of zero."""
    shared = shared or SharedNgramSet()
    if not candidate or not reference:
        raise MetricError("crystal_bleu needs non-empty candidate and reference")
    cand, ref = list(candidate), list(reference)
    log_sum = 0.0
    for n in range(1, shared.n_max + 1):
        c_counts = ngrams(cand, n)
        r_counts = ngrams(ref, n)
        for g in shared.ngrams:
            c_counts.pop(g, None)
            r_counts.pop(g, None)
        total = sum(c_counts.values())
        clipped = sum(min(c, r_counts.get(g, 0)) for g, c in c_counts.items())
        p = clipped / total if total else 0.0
        log_sum += math.log(max(p, PRECISION_FLOOR))
    c_len, r_len = len(cand), len(ref)
    bp = 1.0 if c_len > r_len else math.exp(1 - r_len / c_len)
    return min(1.0, bp * math.exp(log_sum / shared.n_max))


def corpus_digest(corpus: Sequence[Sequence[str]], n_max: int, k: int) -> str:
    payload = json.dumps({"n_max": n_max, "k": k, "corpus": [list(d) for d in corpus]},
                         separators=(",", ":"), ensure_ascii=False)
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def cached_shared_ngrams(corpus: Sequence[Sequence[str]], cache_dir, n_max: int = DEFAULT_N_MAX,
                         k: int = DEFAULT_K) -> SharedNgramSet:
    """Like :func:`trivially_shared_ngrams`, memoised on disk by corpus digest."""
    path = Path(cache_dir) / f"shared-{corpus_digest(corpus, n_max, k)}.json"
    if path.exists():
        return SharedNgramSet.from_dict(json.loads(path.read_text(encoding="utf-8")))
    shared = trivially_shared_ngrams(corpus, n_max, k)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(shared.to_dict()), encoding="utf-8")
    return shared


def median(values: Iterable[Optional[float]]) -> Optional[float]:
    present = [v for v in values if v is not None]
    return statistics.median(present) if present else None
