"""Independently coded brute-force references for every aggregate metric.

These work on plain dictionaries keyed by (family, epsilon) tuples and use
naive loops; they share no code with the engine they check.
"""

from __future__ import annotations

import math

FLOOR = 1e-6


def _kept(acc_star_by_key, keys):
    return [k for k in keys if acc_star_by_key[k] >= FLOOR]


def cr_ind_avg(acc, acc_star, weights, keys):
    kept = _kept(acc_star, keys)
    if not kept:
        raise ZeroDivisionError("all cells degenerate")
    total = sum(weights[k] for k in kept)
    if total <= 0:
        total = float(len(kept))
        weights = {k: 1.0 for k in kept}
    out = 0.0
    for k in kept:
        out += (weights[k] / total) * acc[k] / acc_star[k]
    return 100.0 * out


def cr_ind_worst(acc, acc_star, weights, keys):
    kept = _kept(acc_star, keys)
    if not kept:
        raise ZeroDivisionError("all cells degenerate")
    worst = math.inf
    for k in kept:
        ratio = acc[k] / acc_star[k]
        if ratio < worst:
            worst = ratio
    return 100.0 * worst


def cr_exp(acc, acc_star, weights, keys):
    num = 0.0
    den = 0.0
    for k in keys:
        num += weights[k] * acc[k]
        den += weights[k] * acc_star[k]
    if den < FLOOR:
        raise ZeroDivisionError("zero denominator")
    return 100.0 * num / den


def cr_max(acc, acc_star, weights, keys):
    num = min(acc[k] for k in keys)
    den = min(acc_star[k] for k in keys)
    if den < FLOOR:
        raise ZeroDivisionError("zero denominator")
    return 100.0 * num / den


def uar(acc, acc_star, keys_of_family):
    num = sum(acc[k] for k in keys_of_family)
    den = sum(acc_star[k] for k in keys_of_family)
    if den < FLOOR:
        raise ZeroDivisionError("zero denominator")
    return 100.0 * num / den


def muar(acc, acc_star, families_to_keys):
    scores = [uar(acc, acc_star, keys) for keys in families_to_keys.values()]
    return sum(scores) / len(scores)


def union_accuracy(profiles, levels):
    """profiles: family -> list of per-image thresholds; levels: family -> eps."""
    families = list(levels)
    n = len(profiles[families[0]])
    survived = 0
    for i in range(n):
        ok = True
        for fam in families:
            if not profiles[fam][i] > levels[fam]:
                ok = False
                break
        if ok:
            survived += 1
    return survived / n


def average_accuracy(acc, weights, keys):
    out = 0.0
    for k in keys:
        out += weights[k] * acc[k]
    return out


def stability_constant(acc, strength, learner_keys, all_keys, alpha):
    best = 0.0
    found = False
    for p1 in learner_keys:
        for p2 in all_keys:
            if p1 == p2:
                continue
            gap = abs(strength[p1] - strength[p2])
            if gap == 0.0 or gap > alpha:
                continue
            found = True
            ratio = abs(acc[p1] - acc[p2]) / gap
            if ratio > best:
                best = ratio
    return best, not found
