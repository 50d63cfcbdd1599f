"""Brute-force oracle implementations, deliberately independent of the
library's code paths.

Everything here recomputes from first principles: token counts via
Counter, cosines via explicit dot/norm arithmetic, perturbations by
re-joining token lists. Tests compare library output against these.
"""

import math
import re
from collections import Counter

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)


def oracle_tokens(text):
    return _TOKEN_RE.findall(text.lower())


def oracle_tf_cosine(a, b, vocab):
    """Cosine of raw term-frequency vectors restricted to ``vocab``."""
    ca = Counter(t for t in oracle_tokens(a) if t in vocab)
    cb = Counter(t for t in oracle_tokens(b) if t in vocab)
    dot = sum(count * cb[t] for t, count in ca.items())
    norm_a = math.sqrt(sum(v * v for v in ca.values()))
    norm_b = math.sqrt(sum(v * v for v in cb.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return dot / (norm_a * norm_b)


def oracle_loo_texts(words):
    """Leave-one-out variants of a single-spaced word list."""
    return [" ".join(words[:i] + words[i + 1 :]) for i in range(len(words))]


def oracle_normalize(deltas):
    top = max((max(d, 0.0) for d in deltas), default=0.0)
    if top == 0.0:
        return [0.0 for _ in deltas]
    return [max(d, 0.0) / top for d in deltas]


def oracle_retrieval_explanation(question, document):
    """Enumerate every leave-one-out cosine for a single-spaced document.

    Returns (s_d, scores, deltas, weights) with the vocabulary drawn from
    question + document, mirroring the ad-hoc fixture construction.
    """
    vocab = set(oracle_tokens(question)) | set(oracle_tokens(document))
    words = document.split()
    s_d = oracle_tf_cosine(question, document, vocab)
    scores = [oracle_tf_cosine(question, p, vocab) for p in oracle_loo_texts(words)]
    deltas = [s_d - s for s in scores]
    return s_d, scores, deltas, oracle_normalize(deltas)


def oracle_ranking(weights):
    """Indices sorted hottest-first, ties by lower index."""
    return sorted(range(len(weights)), key=lambda i: (-weights[i], i))


def oracle_token_f1(a, b):
    strip = re.compile(r"[!-/:-@\[-`{-~]")
    ta = strip.sub("", a.lower()).split()
    tb = strip.sub("", b.lower()).split()
    if not ta and not tb:
        return 1.0
    overlap = sum((Counter(ta) & Counter(tb)).values())
    if overlap == 0:
        return 0.0
    p = overlap / len(tb)
    r = overlap / len(ta)
    return 2 * p * r / (p + r)


def oracle_average_ranks(values):
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2.0 + 1.0
        for pos in range(i, j + 1):
            ranks[order[pos]] = avg
        i = j + 1
    return ranks


def oracle_spearman(xs, ys):
    """Spearman rho: Pearson correlation of average ranks."""
    rx = oracle_average_ranks(xs)
    ry = oracle_average_ranks(ys)
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = math.sqrt(sum((a - mx) ** 2 for a in rx))
    vy = math.sqrt(sum((b - my) ** 2 for b in ry))
    return cov / (vx * vy)
