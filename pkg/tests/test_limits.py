from fractions import Fraction

import numpy as np
import pytest
import sympy

from conftest import random_spec
from urnlab import gallery
from urnlab.gallery import D, P, make_spec
from urnlab.limits import (
    NoDeterministicLimit,
    UnsupportedRegime,
    check_conditions,
    check_sync,
    drift,
    limit_ZF,
)
from urnlab.netmodel import classify_nodes, derive


def expected_gain_drift(spec, z_user):
    """Mean-field drift straight from the urn mechanics, in document order.

    For flexible j: (expected white balls added - z_j * balls added) / balls added.
    """
    nodes = {nd.id: nd for nd in spec.nodes}
    flex, _ = classify_nodes(spec)
    z = dict(zip(spec.ids, z_user))
    nbrs = spec.in_neighbours()
    out = []
    for j in flex:
        mbar = sum(nodes[i].m for i in nbrs[j])
        gain = 0.0
        for i in nbrs[j]:
            nd = nodes[i]
            p_white = z[i] if nd.sign > 0 else 1.0 - z[i]
            gain += nd.alpha * p_white + (nd.m - nd.beta) * (1.0 - p_white)
        out.append(gain / mbar - z[j])
    return np.array(out)


def exact_limit(spec):
    """Solve the scalar fixed-point equations over the rationals with sympy."""
    nodes = {nd.id: nd for nd in spec.nodes}
    flex, stub = classify_nodes(spec)
    nbrs = spec.in_neighbours()
    syms = {j: sympy.Symbol(f"z{j}") for j in flex}
    z0 = {i: sympy.Rational(nodes[i].w0, nodes[i].w0 + nodes[i].b0) for i in stub}
    eqs = []
    for j in flex:
        mbar = sum(nodes[i].m for i in nbrs[j])
        gain = 0
        for i in nbrs[j]:
            nd = nodes[i]
            zi = syms[i] if i in syms else z0[i]
            p_white = zi if nd.sign > 0 else 1 - zi
            gain += nd.alpha * p_white + (nd.m - nd.beta) * (1 - p_white)
        eqs.append(sympy.Eq(gain, mbar * syms[j]))
    sol = sympy.solve(eqs, list(syms.values()), dict=True)
    assert len(sol) == 1
    return {j: sol[0][syms[j]] for j in flex} | z0


def user_limit(dm, report):
    return dict(zip(dm.spec.ids, dm.to_user_order(list(report.z_star))))


class TestConditions:
    def test_fig4(self):
        c = check_conditions(derive(gallery.four_cycle_all_preferential()))
        assert (c.cond_i, c.cond_ii, c.cond_iii, c.guaranteed) == (False, False, False, False)

    def test_fig5(self):
        c = check_conditions(derive(gallery.four_cycle_one_depref()))
        assert c.cond_iii and c.guaranteed

    def test_stubborn_feed(self):
        c = check_conditions(derive(gallery.stubborn_feeds_cycle()))
        assert c.cond_ii and c.guaranteed

    def test_anti_polya_not_guaranteed(self):
        spec = gallery.mutual_pair(m=2, alpha=0, beta=0)
        c = check_conditions(derive(spec))
        assert not c.guaranteed and c.anti_polya == [1, 2]
        with pytest.raises(UnsupportedRegime):
            limit_ZF(derive(spec))

    def test_source_component_with_partition_blocks_guarantee(self):
        # {1,2} Polya 2-cycle (admits a partition) feeds {3,4} non-Polya
        spec = make_spec(
            [(1, P, 1, 1, 1, 1, 1), (2, P, 1, 1, 1, 1, 1), (3, P, 2, 1, 0, 1, 1), (4, P, 2, 1, 0, 1, 1)],
            [(1, 2), (2, 1), (3, 4), (4, 3), (2, 3)],
        )
        c = check_conditions(derive(spec))
        assert not c.strongly_connected_F
        assert [v.ids for v in c.per_scc] == [[1, 2], [3, 4]]
        assert [v.covered for v in c.per_scc] == [False, True]
        assert not c.guaranteed

    def test_source_component_covered(self):
        # same chain, source block now has a de-preferential node (no partition on a 2-cycle)
        spec = make_spec(
            [(1, P, 1, 1, 1, 1, 1), (2, D, 1, 1, 1, 1, 1), (3, P, 1, 1, 1, 1, 1), (4, P, 1, 1, 1, 1, 1)],
            [(1, 2), (2, 1), (3, 4), (4, 3), (2, 3)],
        )
        c = check_conditions(derive(spec))
        assert c.guaranteed
        assert c.per_scc[0].all_polya_no_partition and c.per_scc[1].external_in_edge


class TestLimit:
    def test_fig5(self):
        dm = derive(gallery.four_cycle_one_depref())
        for z0 in (None, [0.1, 0.9, 0.3, 0.6]):
            assert np.abs(limit_ZF(dm, z0).z_star - 0.5).max() <= 1e-12

    @pytest.mark.parametrize("w3,b3", [(1, 1), (3, 1), (0, 5), (2, 7)])
    def test_stubborn_feeds_cycle(self, w3, b3):
        dm = derive(gallery.stubborn_feeds_cycle(w3, b3))
        z3 = w3 / (w3 + b3)
        assert np.abs(limit_ZF(dm).z_star - z3).max() <= 1e-12

    def test_friedman_pair(self):
        assert np.allclose(limit_ZF(derive(gallery.friedman_pair())).z_star, 0.5, atol=1e-15)

    def test_singular(self):
        with pytest.raises(NoDeterministicLimit):
            limit_ZF(derive(gallery.four_cycle_all_preferential()))

    def test_matches_exact_solution(self, rng):
        checked = 0
        while checked < 40:
            spec = random_spec(rng, n_max=5)
            dm = derive(spec)
            if not check_conditions(dm).guaranteed:
                continue
            exact = exact_limit(spec)
            got = user_limit(dm, limit_ZF(dm))
            for k in spec.ids:
                assert abs(got[k] - float(exact[k])) <= 1e-12
            checked += 1

    def test_fixed_point_and_range(self, rng):
        checked = 0
        while checked < 200:
            dm = derive(random_spec(rng))
            if not check_conditions(dm).guaranteed:
                continue
            rep = limit_ZF(dm)
            assert np.abs(drift(dm, rep.z_star[: dm.n_flexible])).max() <= 1e-9
            assert rep.z_star.min() >= -1e-9 and rep.z_star.max() <= 1 + 1e-9
            checked += 1

    def test_initial_condition_independence(self, rng):
        checked = 0
        while checked < 100:
            dm = derive(random_spec(rng, stubborn_max=0))
            if dm.stubborn_ids or not check_conditions(dm).guaranteed:
                continue
            a = limit_ZF(dm, rng.random(dm.n)).z_star
            b = limit_ZF(dm, rng.random(dm.n)).z_star
            assert np.abs(a - b).max() <= 1e-12
            checked += 1

    def test_block_permutation(self, rng):
        checked = 0
        while checked < 60:
            spec = random_spec(rng)
            dm = derive(spec)
            if check_conditions(dm).strongly_connected_F or not check_conditions(dm).guaranteed:
                continue
            perm = {i: int(j) for i, j in zip(spec.ids, rng.permutation(len(spec.ids)) + 1)}
            nodes = [(perm[nd.id], nd.sampling, nd.m, nd.alpha, nd.beta, nd.w0, nd.b0) for nd in spec.nodes]
            nodes = [nodes[k] for k in rng.permutation(len(nodes))]
            other = make_spec(nodes, [(perm[a], perm[b]) for a, b in spec.edges])
            dm2 = derive(other)
            a = user_limit(dm, limit_ZF(dm))
            b = user_limit(dm2, limit_ZF(dm2))
            assert all(abs(a[k] - b[perm[k]]) <= 1e-12 for k in spec.ids)
            checked += 1


class TestDrift:
    def test_matches_urn_mechanics(self, rng):
        for _ in range(200):
            spec = random_spec(rng)
            dm = derive(spec)
            z_user = rng.random(dm.n)
            z_internal = np.array([z_user[pos] for pos in dm.order])
            h = drift(dm, z_internal[: dm.n_flexible], z_internal)
            # both sides list flexible nodes in document order
            assert np.abs(h - expected_gain_drift(spec, z_user)).max() <= 1e-12

    def test_fig5_at_ones(self):
        dm = derive(gallery.four_cycle_one_depref())
        h = drift(dm, np.ones(4))
        # node 1's only in-neighbour is de-preferential node 4 which then draws black surely
        assert np.allclose(h, [-1.0, 0.0, 0.0, 0.0], atol=1e-15)

    def test_w_zero_is_affine(self, rng):
        dm = derive(gallery.friedman_pair())
        for _ in range(10):
            z, y = rng.random(2), rng.random(2)
            assert np.allclose(drift(dm, z) - drift(dm, y), -(z - y), atol=1e-15)


class TestSync:
    def test_eight_cycle_one_depref_no_sc1(self):
        rep = check_sync(derive(gallery.eight_cycle_one_depref()))
        assert rep.sc1 is None and rep.z_sync is None

    def test_friedman_pair_psc(self):
        rep = check_sync(derive(gallery.friedman_pair()))
        assert rep.psc is not None and rep.z_psc == 0.5

    def test_shared_stubborn_neighbour(self):
        spec = make_spec([(1, P, 1, 1, 1, 1, 1), (2, P, 1, 1, 1, 2, 1), (3, P, 1, 1, 1, 1, 3)],
                         [(1, 2), (2, 1), (3, 1), (3, 2)])
        rep = check_sync(derive(spec))
        assert rep.z_psc == 0.25 and rep.z_sync == 0.25
        assert rep.psc.alpha_0S == Fraction(1, 4)

    def test_sync_consistency(self, rng):
        specs = [gallery.cycle(range(1, n + 1), m=m, alpha=a, beta=b, w0=w, b0=1)
                 for n in (2, 3, 5) for m, a, b in ((2, 1, 0), (3, 2, 2), (4, 3, 1)) for w in (0, 2)]
        specs += [gallery.undirected_cycle(n, m=3, alpha=2, beta=2) for n in (3, 6)]
        specs += [random_spec(rng) for _ in range(300)]
        hits = 0
        for spec in specs:
            dm = derive(spec)
            if not check_conditions(dm).guaranteed:
                continue
            rep = check_sync(dm)
            if rep.z_sync is None:
                continue
            z = limit_ZF(dm).z_star[: dm.n_flexible]
            assert np.abs(z - rep.z_sync).max() <= 1e-9
            if rep.z_psc is not None:
                assert abs(rep.z_psc - rep.z_sync) <= 1e-9
            hits += 1
        assert hits >= 15
