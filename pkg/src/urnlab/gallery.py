"""Ready-made networks: directed cycles and the worked examples."""

from __future__ import annotations

from .netmodel import NetworkSpec, NodeSpec, Sampling

P = Sampling.PREFERENTIAL
D = Sampling.DEPREFERENTIAL


def make_spec(nodes, edges) -> NetworkSpec:
    """*nodes*: iterable of (id, sampling, m, alpha, beta, w0, b0)."""
    return NetworkSpec(tuple(NodeSpec(*n) for n in nodes), tuple((int(a), int(b)) for a, b in edges))


def cycle(order, depref=(), m=1, alpha=None, beta=None, w0=1, b0=1) -> NetworkSpec:
    """Directed cycle visiting node ids in *order*; uniform reinforcement.

    ``alpha``/``beta`` default to ``m`` (Polya).
    """
    order = list(order)
    alpha = m if alpha is None else alpha
    beta = m if beta is None else beta
    depref = set(depref)
    nodes = [(i, D if i in depref else P, m, alpha, beta, w0, b0) for i in sorted(order)]
    edges = [(order[k], order[(k + 1) % len(order)]) for k in range(len(order))]
    return make_spec(nodes, edges)


def eight_cycle_one_depref(**kw) -> NetworkSpec:
    """1 -> 2 -> ... -> 8 -> 1 with node 8 de-preferential; admits no partition."""
    return cycle(range(1, 9), depref={8}, **kw)


def eight_cycle_alternating(**kw) -> NetworkSpec:
    """1 -> 5 -> 2 -> 6 -> 3 -> 7 -> 4 -> 8 -> 1 with {5,6,7,8} de-preferential."""
    return cycle([1, 5, 2, 6, 3, 7, 4, 8], depref={5, 6, 7, 8}, **kw)


FOUR_CYCLE = [1, 3, 2, 4]


def four_cycle_all_preferential(**kw) -> NetworkSpec:
    """1 -> 3 -> 2 -> 4 -> 1, every node preferential: random synchronised limit."""
    return cycle(FOUR_CYCLE, **kw)


def four_cycle_one_depref(**kw) -> NetworkSpec:
    """Same cycle with node 4 de-preferential: deterministic limit 1/2."""
    return cycle(FOUR_CYCLE, depref={4}, **kw)


def four_cycle_alternating(**kw) -> NetworkSpec:
    """Same cycle with {3, 4} de-preferential: admits a partition, random limit."""
    return cycle(FOUR_CYCLE, depref={3, 4}, **kw)


def mutual_pair(m=4, alpha=2, beta=1, w0=1, b0=1, sampling=(P, P)) -> NetworkSpec:
    return make_spec(
        [(1, sampling[0], m, alpha, beta, w0, b0), (2, sampling[1], m, alpha, beta, w0, b0)],
        [(1, 2), (2, 1)],
    )


def friedman_pair(**kw) -> NetworkSpec:
    """m = 2, alpha = beta = 1: W = 0 and the reinforcement no longer depends on the draw."""
    return mutual_pair(m=2, alpha=1, beta=1, **kw)


def stubborn_feeds_cycle(w3=1, b3=1) -> NetworkSpec:
    """Polya 2-cycle 1 <-> 2 with a stubborn node 3 -> 1."""
    return make_spec(
        [(1, P, 1, 1, 1, 1, 1), (2, P, 1, 1, 1, 1, 1), (3, P, 1, 1, 1, w3, b3)],
        [(1, 2), (2, 1), (3, 1)],
    )


def undirected_cycle(n, m=4, alpha=3, beta=3, w0=1, b0=1) -> NetworkSpec:
    """Bidirected n-cycle; symmetric W with uniform column sums."""
    nodes = [(i, P, m, alpha, beta, w0, b0) for i in range(1, n + 1)]
    edges = []
    for i in range(1, n + 1):
        j = i % n + 1
        edges += [(i, j), (j, i)]
    return make_spec(nodes, edges)


NAMED = {
    "fig2": eight_cycle_one_depref,
    "fig3": eight_cycle_alternating,
    "fig4": four_cycle_all_preferential,
    "fig5": four_cycle_one_depref,
    "fig8": four_cycle_alternating,
    "friedman_pair": friedman_pair,
    "mutual_pair": mutual_pair,
    "stubborn_feeds_cycle": stubborn_feeds_cycle,
}
