"""Temporal majority vote over a track's recent classifications."""

from __future__ import annotations

from collections import Counter


def smooth_labels(history, window: int = 5) -> str:
    """Majority label over the last `window` (label, confidence) entries.

    On a tied vote the winner is the tied label that appeared most
    recently, so [A, B] smooths to B while [B, A] smooths to A.
    """
    if not history:
        raise ValueError("label history is empty")
    recent = [label for label, _ in history[-window:]]
    counts = Counter(recent)
    top = max(counts.values())
    tied = {label for label, c in counts.items() if c == top}
    for label in reversed(recent):
        if label in tied:
            return label
    raise AssertionError("unreachable")
