"""Corpus BLEU with the package's own pinned tokenization.

Case-sensitive; geometric mean of modified 1-4-gram precisions with the
standard brevity penalty, no smoothing. Tokenization is the engine's
normalization followed by splitting every Unicode punctuation character
into its own token, so scores are reproducible within this artifact but
not comparable to scores from other tokenizers.
"""

from __future__ import annotations

import math
import unicodedata
from collections import Counter
from typing import Sequence

from .errors import InputError
from .engine import normalize

MAX_ORDER = 4


class LengthMismatchError(InputError):
    pass


def tokenize(text: str) -> list[str]:
    """Normalize, isolate punctuation characters, split on whitespace."""
    out = []
    for ch in normalize(text):
        if unicodedata.category(ch).startswith("P"):
            out.append(f" {ch} ")
        else:
            out.append(ch)
    return "".join(out).split()


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def corpus_bleu(hypotheses: Sequence[str], references: Sequence[str]) -> float:
    """Corpus-level BLEU in [0, 100] for one reference per hypothesis.

    No smoothing: any n-gram order with zero matches (or a corpus too
    short to contain any 4-gram) yields 0.0, as in the original metric.
    """
    if len(hypotheses) != len(references):
        raise LengthMismatchError(
            f"{len(hypotheses)} hypotheses vs {len(references)} references"
        )
    if not hypotheses:
        raise LengthMismatchError("empty corpus")
    correct = [0] * MAX_ORDER
    total = [0] * MAX_ORDER
    hyp_len = 0
    ref_len = 0
    for hyp, ref in zip(hypotheses, references):
        hyp_tokens = tokenize(hyp)
        ref_tokens = tokenize(ref)
        hyp_len += len(hyp_tokens)
        ref_len += len(ref_tokens)
        for n in range(1, MAX_ORDER + 1):
            hyp_counts = _ngrams(hyp_tokens, n)
            ref_counts = _ngrams(ref_tokens, n)
            total[n - 1] += sum(hyp_counts.values())
            correct[n - 1] += sum(
                min(count, ref_counts[ng]) for ng, count in hyp_counts.items()
            )
    if any(t == 0 for t in total) or any(c == 0 for c in correct):
        return 0.0
    log_precision = sum(math.log(c / t) for c, t in zip(correct, total)) / MAX_ORDER
    brevity = 1.0 if hyp_len >= ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * brevity * math.exp(log_precision)
