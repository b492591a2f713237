"""Intensity histogram, optimal-threshold computation, and binarization.

The threshold criterion is the weighted within-class variance

    S_w^2(t) = w1(t) * S1^2(t) + w2(t) * S2^2(t)

with class 1 = intensities <= t and class 2 = intensities > t, class
probabilities w_i from the normalized histogram, and per-class means and
variances computed from the histogram slices.  The optimal threshold
minimizes S_w^2 over t in [0, 254].

All candidate objectives are compared in exact rational arithmetic (the
histogram is integer-valued, so S_w^2(t) is an exact fraction), which makes
the argmin and the documented tie-break reproducible bit-for-bit against an
independent brute-force sweep.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from fractions import Fraction

import numpy as np

from .errors import DegenerateHistogram
from .imagekit import validate_gray


class Polarity(Enum):
    """Which side of the threshold is foreground."""

    DARK_FOREGROUND = "dark"
    LIGHT_FOREGROUND = "light"


@dataclass(frozen=True)
class ThresholdResult:
    """Chosen threshold plus the class statistics evaluated at it.

    ``objective`` is S_w^2(t); ``w1 + w2 == 1`` and ``w1*m1 + w2*m2`` equals
    the global histogram mean.
    """

    t: int
    objective: float
    w1: float
    w2: float
    m1: float
    m2: float
    s1_sq: float
    s2_sq: float


def histogram(img: np.ndarray) -> np.ndarray:
    """256-bin intensity histogram; counts sum to width*height."""
    img = validate_gray(img)
    return np.bincount(img.ravel(), minlength=256).astype(np.int64)


def class_stats(hist: np.ndarray, t: int) -> tuple[float, float, float, float, float, float]:
    """Per-class statistics (w1, m1, s1_sq, w2, m2, s2_sq) for split at t.

    Raises ValueError when either class is empty.
    """
    counts = np.asarray(hist, dtype=np.int64)
    if counts.shape != (256,):
        raise ValueError("histogram must have 256 bins")
    if not 0 <= t <= 254:
        raise ValueError("t must be in [0, 254]")
    idx = np.arange(256, dtype=np.float64)
    n = float(counts.sum())
    c1 = float(counts[:t + 1].sum())
    c2 = n - c1
    if c1 == 0 or c2 == 0:
        raise ValueError(f"empty class at t={t}")
    m1 = float((idx[:t + 1] * counts[:t + 1]).sum()) / c1
    m2 = float((idx[t + 1:] * counts[t + 1:]).sum()) / c2
    s1 = float((((idx[:t + 1] - m1) ** 2) * counts[:t + 1]).sum()) / c1
    s2 = float((((idx[t + 1:] - m2) ** 2) * counts[t + 1:]).sum()) / c2
    return c1 / n, m1, s1, c2 / n, m2, s2


def otsu_threshold(hist: np.ndarray) -> ThresholdResult:
    """Threshold minimizing the weighted within-class variance.

    Candidates where either class is empty are skipped.  Exact ties in the
    minimum are broken by taking the integer floor of the midpoint of the
    first contiguous run of minimizing thresholds, which is stable on
    symmetric bimodal histograms.

    Raises DegenerateHistogram when fewer than two intensity levels occur.
    """
    counts = np.asarray(hist, dtype=np.int64)
    if counts.shape != (256,):
        raise ValueError("histogram must have 256 bins")
    if counts.min() < 0:
        raise ValueError("histogram counts must be nonnegative")
    if int(np.count_nonzero(counts)) < 2:
        raise DegenerateHistogram("need at least two occupied intensity levels")

    c = [int(v) for v in counts]
    n = sum(c)
    # prefix sums of count, i*count, i^2*count (exact integers)
    pc = [0] * 257
    pm = [0] * 257
    pq = [0] * 257
    for i in range(256):
        pc[i + 1] = pc[i] + c[i]
        pm[i + 1] = pm[i] + i * c[i]
        pq[i + 1] = pq[i] + i * i * c[i]
    q_total = pq[256]
    m_total = pm[256]

    # S_w^2(t) = (Q*C1*C2 - M1^2*C2 - M2^2*C1) / (N*C1*C2); compare exactly
    # by cross-multiplication of the integer numerator/denominator pairs.
    best_num = best_den = None
    argmin: list[int] = []
    for t in range(255):
        c1 = pc[t + 1]
        c2 = n - c1
        if c1 == 0 or c2 == 0:
            continue
        m1 = pm[t + 1]
        m2 = m_total - m1
        num = q_total * c1 * c2 - m1 * m1 * c2 - m2 * m2 * c1
        den = n * c1 * c2
        if best_num is None:
            best_num, best_den = num, den
            argmin = [t]
            continue
        lhs = num * best_den
        rhs = best_num * den
        if lhs < rhs:
            best_num, best_den = num, den
            argmin = [t]
        elif lhs == rhs:
            argmin.append(t)

    # first contiguous run of minimizers, midpoint floored
    lo = hi = argmin[0]
    for t in argmin[1:]:
        if t == hi + 1:
            hi = t
        else:
            break
    t_star = (lo + hi) // 2

    w1, m1, s1, w2, m2, s2 = class_stats(counts, t_star)
    c1 = pc[t_star + 1]
    c2 = n - c1
    mm1 = pm[t_star + 1]
    mm2 = m_total - mm1
    exact = Fraction(q_total * c1 * c2 - mm1 * mm1 * c2 - mm2 * mm2 * c1, n * c1 * c2)
    return ThresholdResult(t=t_star, objective=float(exact),
                           w1=w1, w2=w2, m1=m1, m2=m2, s1_sq=s1, s2_sq=s2)


def binarize(img: np.ndarray, t: int, polarity: Polarity = Polarity.DARK_FOREGROUND) -> np.ndarray:
    """Threshold into a boolean foreground mask.

    DARK_FOREGROUND marks intensities <= t as foreground (seam threads darker
    than the fabric); LIGHT_FOREGROUND marks intensities > t.  The two
    polarities are exact complements.
    """
    img = validate_gray(img)
    if not 0 <= t <= 254:
        raise ValueError("t must be in [0, 254]")
    if polarity is Polarity.DARK_FOREGROUND:
        return img <= t
    return img > t
