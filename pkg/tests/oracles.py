"""Independent brute-force oracles for the test suite.

Everything here works straight from definitions (double loops over points
and lines, span enumeration over the field) and deliberately avoids the
library's cached matrices and optimized paths.
"""

import itertools


def brute_collinear(g, x, y):
    if x == y:
        return True
    return any(x in line and y in line for line in g.lines)


def brute_perp(g, x):
    return {y for y in range(g.point_count) if brute_collinear(g, x, y)}


def brute_perp_set(g, Y):
    pts = set(range(g.point_count))
    for y in Y:
        pts &= brute_perp(g, y)
    return pts


def brute_cl(g, u, v):
    biperp = brute_perp_set(g, brute_perp_set(g, {u, v}))
    return {w for w in range(g.point_count) if brute_perp(g, w) & biperp}


def brute_census(g, point_subset):
    """Multiset of subtender counts: loop over external points, collect the
    traced point sets with a plain dict, no vectorization."""
    pset = set(point_subset)
    traces = {}
    for x in range(g.point_count):
        if x in pset:
            continue
        trace = frozenset(y for y in point_subset if brute_collinear(g, x, y))
        traces[trace] = traces.get(trace, 0) + 1
    census = {}
    for count in traces.values():
        census[count] = census.get(count, 0) + 1
    return census, traces


def rank_by_span(gfq, vectors):
    """Rank via explicit span enumeration: |span| = q^rank."""
    dim = len(vectors[0])
    span = {(0,) * dim}
    for v in vectors:
        v = tuple(v)
        if v in span:
            continue
        extended = set(span)
        for u in span:
            for c in range(1, gfq.q):
                extended.add(tuple(gfq.add(a, gfq.mul(c, b)) for a, b in zip(u, v)))
        span = extended
    size = len(span)
    rank = 0
    while gfq.q**rank < size:
        rank += 1
    assert gfq.q**rank == size
    return rank


def brute_spg_parameters(g):
    """Measure (s*, t*, alpha*, mu*) straight from the definition; returns
    None for a parameter without witnesses."""
    sizes = {len(line) for line in g.lines}
    assert len(sizes) == 1
    s_star = sizes.pop() - 1
    degrees = {}
    for line in g.lines:
        for p in line:
            degrees[p] = degrees.get(p, 0) + 1
    assert len(set(degrees.values())) == 1
    t_star = next(iter(degrees.values())) - 1
    alphas = set()
    for line in g.lines:
        for x in range(g.point_count):
            if x in line:
                continue
            c = sum(1 for y in line if brute_collinear(g, x, y))
            if c:
                alphas.add(c)
    mus = set()
    for x, y in itertools.combinations(range(g.point_count), 2):
        if brute_collinear(g, x, y):
            continue
        mus.add(
            sum(
                1
                for z in range(g.point_count)
                if z not in (x, y)
                and brute_collinear(g, x, z)
                and brute_collinear(g, y, z)
            )
        )
    alpha = alphas.pop() if len(alphas) == 1 else None
    mu = mus.pop() if len(mus) == 1 else None
    return s_star, t_star, alpha, mu


def brute_automorphism_count(g):
    """Count point permutations sending lines to lines (tiny structures)."""
    lineset = set(g.lines)
    count = 0
    for pm in itertools.permutations(range(g.point_count)):
        if all(tuple(sorted(pm[p] for p in line)) in lineset for line in g.lines):
            count += 1
    return count
