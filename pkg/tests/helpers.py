"""Independent oracles shared by the unit and acceptance tests.

These deliberately avoid the package's own code paths: the ROC oracle
counts pairs directly, the EER oracle interpolates in exact rational
arithmetic, and the edit-distance oracle is a memoized recursion.
"""

from fractions import Fraction
from functools import lru_cache


def brute_force_roc(targets, nontargets):
    """All-thresholds ROC by direct counting; returns (thresholds, fpr, tpr) lists."""
    targets = list(targets)
    nontargets = list(nontargets)
    distinct = sorted(set(targets) | set(nontargets), reverse=True)
    thresholds = [distinct[0] + 1.0] + distinct
    fpr = [sum(1 for s in nontargets if s >= t) / len(nontargets) for t in thresholds]
    tpr = [sum(1 for s in targets if s >= t) / len(targets) for t in thresholds]
    return thresholds, fpr, tpr


def mann_whitney_auc(targets, nontargets):
    """P(target > nontarget) + 0.5 P(tie), by direct enumeration."""
    wins = 0.0
    for t in targets:
        for n in nontargets:
            if t > n:
                wins += 1.0
            elif t == n:
                wins += 0.5
    return wins / (len(targets) * len(nontargets))


def brute_force_eer(targets, nontargets):
    """EER via exact rational interpolation over the brute-force curve."""
    thresholds, _, _ = brute_force_roc(targets, nontargets)
    n_t, n_n = len(targets), len(nontargets)
    fpr = [Fraction(sum(1 for s in nontargets if s >= t), n_n) for t in thresholds]
    fnr = [1 - Fraction(sum(1 for s in targets if s >= t), n_t) for t in thresholds]
    gap = [f - m for f, m in zip(fpr, fnr)]
    for i, g in enumerate(gap):
        if g == 0:
            return float(fpr[i]), float(thresholds[i])
        if g > 0:
            alpha = (0 - gap[i - 1]) / (gap[i] - gap[i - 1])
            rate = fpr[i - 1] + alpha * (fpr[i] - fpr[i - 1])
            thr = Fraction(thresholds[i - 1]) + alpha * (
                Fraction(thresholds[i]) - Fraction(thresholds[i - 1]))
            return float(rate), float(thr)
    raise AssertionError("no EER crossing found")


def edit_distance_oracle(ref, hyp):
    """Minimum word edit distance by memoized recursion."""
    ref = tuple(ref)
    hyp = tuple(hyp)

    @lru_cache(maxsize=None)
    def rec(i, j):
        if i == 0:
            return j
        if j == 0:
            return i
        sub = rec(i - 1, j - 1) + (0 if ref[i - 1] == hyp[j - 1] else 1)
        return min(sub, rec(i - 1, j) + 1, rec(i, j - 1) + 1)

    return rec(len(ref), len(hyp))


def type_skeleton(obj):
    """Recursive type map of a JSON value, for golden schema comparisons."""
    if isinstance(obj, dict):
        return {k: type_skeleton(v) for k, v in sorted(obj.items())}
    if isinstance(obj, list):
        return [type_skeleton(obj[0])] if obj else []
    if isinstance(obj, bool):
        return "bool"
    if isinstance(obj, int):
        return "int"
    if isinstance(obj, float):
        return "float"
    if obj is None:
        return "null"
    return "str"
