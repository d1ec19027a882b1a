"""Independent brute-force reference implementations used by the tests.

Nothing here imports the package's algorithms; they are deliberately naive.
"""

import math
from collections import deque
from fractions import Fraction
from itertools import combinations

R_KM = 6371.0088


def great_circle_km(lat1, lon1, lat2, lon2):
    # atan2 form, written independently of the package's formula
    p1, p2 = math.radians(lat1), math.radians(lat2)
    dp = p2 - p1
    dl = math.radians(lon2 - lon1)
    a = math.sin(dp / 2) ** 2 + math.cos(p1) * math.cos(p2) * math.sin(dl / 2) ** 2
    a = min(1.0, max(0.0, a))
    return 2 * R_KM * math.atan2(math.sqrt(a), math.sqrt(1 - a))


def bfs_components(points, threshold_km):
    """points: {id: (lat, lon)} -> set of frozensets."""
    ids = list(points)
    adj = {i: [] for i in ids}
    for a, b in combinations(ids, 2):
        if great_circle_km(*points[a], *points[b]) <= threshold_km:
            adj[a].append(b)
            adj[b].append(a)
    seen, comps = set(), set()
    for start in ids:
        if start in seen:
            continue
        comp, queue = {start}, deque([start])
        seen.add(start)
        while queue:
            for nb in adj[queue.popleft()]:
                if nb not in seen:
                    seen.add(nb)
                    comp.add(nb)
                    queue.append(nb)
        comps.add(frozenset(comp))
    return comps


def locality_counts(papers):
    out = {}
    for locs in papers:
        for loc in set(locs):
            out[loc] = out.get(loc, 0) + 1
    return out


def dedup_counts(papers, unit_of):
    out = {}
    for locs in papers:
        for unit in {unit_of[l] for l in locs}:
            out[unit] = out.get(unit, 0) + 1
    return out


def fractional_shares(locs, basis, unit_of=None):
    unit_of = unit_of or {l: l for l in locs}
    pool = sorted(set(locs)) if basis == "distinct_locality" else list(locs)
    out = {}
    for loc in pool:
        u = unit_of[loc]
        out[u] = out.get(u, Fraction(0)) + Fraction(1, len(pool))
    return out


def fractional_counts(papers, basis, unit_of=None):
    out = {}
    for locs in papers:
        for u, share in fractional_shares(locs, basis, unit_of).items():
            out[u] = out.get(u, Fraction(0)) + share
    return out


def dyads(papers, unit_of, regime, include_diagonal=True):
    """Exhaustive pair enumeration over every paper."""
    cells = {}
    for locs in papers:
        units = sorted({unit_of[l] for l in locs})
        if regime == "integer":
            for i in range(len(units)):
                for j in range(i + 1, len(units)):
                    key = (units[i], units[j])
                    cells[key] = cells.get(key, 0) + 1
            if include_diagonal:
                for u in units:
                    inside = {l for l in locs if unit_of[l] == u}
                    if len(inside) >= 2:
                        cells[(u, u)] = cells.get((u, u), 0) + 1
        else:
            k = len(units)
            if k < 2:
                continue
            w = Fraction(2, k * (k - 1))
            for i in range(k):
                for j in range(i + 1, k):
                    key = (units[i], units[j])
                    cells[key] = cells.get(key, Fraction(0)) + w
    return cells
