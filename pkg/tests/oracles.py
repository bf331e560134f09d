"""Independent reference implementations used by the tests."""
import itertools

import numpy as np


def brute_force_dispatch(prices, quantities, demand):
    """Cheapest dispatch by exhaustive search over LP vertices.

    An optimal dispatch fully accepts some subset of offers and accepts at
    most one more offer partially, so every (subset, partial offer) pair is
    tried. Returns (cost, per-offer MW, marginal price) for the cheapest
    vertex; among equal-cost vertices the lowest marginal price is kept.
    """
    p = np.asarray(prices, dtype=float)
    q = np.asarray(quantities, dtype=float)
    n = len(p)
    target = min(demand, q.sum())
    masks = np.array(list(itertools.product([0, 1], repeat=n)), dtype=float).reshape(-1, n)
    full = masks @ q
    base_cost = masks @ (p * q)
    base_price = np.where((masks > 0) & (q > 0), p, -np.inf).max(axis=1)
    best = None
    for j in range(-1, n):
        if j >= 0:
            rest = target - full
            ok = (masks[:, j] == 0) & (rest >= -1e-9) & (rest <= q[j] + 1e-9)
            rest = np.clip(rest, 0.0, q[j])
            cost = base_cost + rest * p[j]
            price = np.where(rest > 1e-12, np.maximum(base_price, p[j]), base_price)
        else:
            rest = np.zeros_like(full)
            ok = np.abs(full - target) <= 1e-9
            cost, price = base_cost, base_price
        if not ok.any():
            continue
        idx = np.flatnonzero(ok)
        price = np.where(np.isfinite(price), price, 0.0)
        k = idx[np.lexsort((price[idx], np.round(cost[idx], 6)))[0]]
        key = (round(float(cost[k]), 6), float(price[k]))
        if best is None or key < best[0]:
            x = masks[k] * q
            if j >= 0:
                x[j] = rest[k]
            best = (key, float(cost[k]), x, float(price[k]))
    return best[1], best[2], best[3]


def brute_force_fronts(objectives):
    """Peel non-dominated layers by checking every remaining pair."""
    f = np.asarray(objectives, dtype=float)
    remaining = list(range(len(f)))
    fronts = []
    while remaining:
        sub = f[remaining]
        front = []
        for pos, i in enumerate(remaining):
            dominated = np.any(np.all(sub <= f[i], axis=1) & np.any(sub < f[i], axis=1))
            if not dominated:
                front.append(i)
        fronts.append(sorted(front))
        remaining = [i for i in remaining if i not in set(front)]
    return fronts
