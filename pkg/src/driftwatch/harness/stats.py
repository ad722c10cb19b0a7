"""Performance and correlation measures used by the study reports."""

from __future__ import annotations

import math
from typing import Hashable, Optional, Sequence


def accuracy(pred: Sequence[Hashable], truth: Sequence[Hashable]) -> float:
    if len(pred) != len(truth):
        raise ValueError(f"length mismatch: {len(pred)} predictions, {len(truth)} truths")
    if not truth:
        raise ValueError("cannot score empty sequences")
    return sum(p == t for p, t in zip(pred, truth)) / len(truth)


def r2(pred: Sequence[float], truth: Sequence[float]) -> float:
    """Coefficient of determination; unbounded below for bad fits."""
    if len(pred) != len(truth):
        raise ValueError(f"length mismatch: {len(pred)} predictions, {len(truth)} truths")
    if not truth:
        raise ValueError("cannot score empty sequences")
    mean = math.fsum(truth) / len(truth)
    ss_tot = math.fsum((t - mean) ** 2 for t in truth)
    if ss_tot == 0:
        raise ValueError("r2 is undefined for constant truth values")
    ss_res = math.fsum((t - p) ** 2 for p, t in zip(pred, truth))
    return 1.0 - ss_res / ss_tot


def pearson(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    """Product-moment correlation over the finite pairs.

    Pairs with a non-finite member are dropped (an infinite divergence
    column still correlates on its finite part). Returns None when
    fewer than two finite pairs remain or either side is constant;
    render that as "-".
    """
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    pairs = [(x, y) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
    if len(pairs) < 2:
        return None
    n = len(pairs)
    mx = math.fsum(x for x, _ in pairs) / n
    my = math.fsum(y for _, y in pairs) / n
    sxx = math.fsum((x - mx) ** 2 for x, _ in pairs)
    syy = math.fsum((y - my) ** 2 for _, y in pairs)
    if sxx == 0 or syy == 0:
        return None
    sxy = math.fsum((x - mx) * (y - my) for x, y in pairs)
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


def _ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        # ties share the average of the ranks they span
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def spearman(xs: Sequence[float], ys: Sequence[float]) -> Optional[float]:
    """Rank correlation; same degenerate-input handling as pearson."""
    if len(xs) != len(ys):
        raise ValueError(f"length mismatch: {len(xs)} vs {len(ys)}")
    pairs = [(x, y) for x, y in zip(xs, ys) if math.isfinite(x) and math.isfinite(y)]
    if len(pairs) < 2:
        return None
    return pearson(_ranks([x for x, _ in pairs]), _ranks([y for _, y in pairs]))
