"""Shared generators for randomized network specs."""

from __future__ import annotations

import numpy as np
import pytest

from urnlab.gallery import D, P, make_spec
from urnlab.netmodel import validate

ACCEPTANCE_LINES: list[str] = []


def strongly_connected_edges(rng, ids, extra=0.3, self_loops=0.0):
    """Random Hamiltonian cycle plus Bernoulli(extra) chords."""
    ids = list(ids)
    order = list(rng.permutation(ids))
    edges = {(int(order[k]), int(order[(k + 1) % len(order)])) for k in range(len(order))}
    if len(ids) == 1:
        edges = {(ids[0], ids[0])}
    for a in ids:
        for b in ids:
            if a != b and rng.random() < extra:
                edges.add((a, b))
            if a == b and len(ids) > 1 and rng.random() < self_loops:
                edges.add((a, a))
    return sorted(edges)


def random_polya_sc(rng, n, labels=None, m_max=3):
    """Strongly connected all-Polya digraph with optional sampling labels."""
    ids = list(range(1, n + 1))
    edges = strongly_connected_edges(rng, ids)
    if labels is None:
        labels = [D if rng.random() < 0.5 else P for _ in ids]
    nodes = []
    for i, lab in zip(ids, labels):
        m = int(rng.integers(1, m_max + 1))
        nodes.append((i, lab, m, m, m, int(rng.integers(0, 3)), int(rng.integers(1, 3))))
    return make_spec(nodes, edges)


def random_node(rng, i, allow_anti=False):
    m = int(rng.integers(1, 5))
    while True:
        alpha = int(rng.integers(0, m + 1))
        beta = int(rng.integers(0, m + 1))
        kind = rng.random()
        if kind < 0.4:
            alpha = beta = m
        if allow_anti or alpha + beta > 0:
            break
    w0 = int(rng.integers(0, 4))
    b0 = int(rng.integers(0 if w0 else 1, 4))
    lab = D if rng.random() < 0.35 else P
    return (i, lab, m, alpha, beta, w0, b0)


def random_spec(rng, n_max=7, stubborn_max=2):
    """Mixed-kind network: a few flexible blocks, optional stubborn feeders."""
    while True:
        n_flex = int(rng.integers(1, n_max + 1))
        n_stub = int(rng.integers(0, stubborn_max + 1))
        flex = list(range(1, n_flex + 1))
        edges = set()
        # one or two strongly connected blocks chained together
        cut = int(rng.integers(1, n_flex + 1)) if rng.random() < 0.4 else n_flex
        blocks = [flex[:cut], flex[cut:]] if cut < n_flex else [flex]
        for block in blocks:
            if len(block) == 1:
                continue
            edges.update(strongly_connected_edges(rng, block, extra=0.25))
        if len(blocks) == 2:
            edges.add((int(rng.choice(blocks[0])), int(rng.choice(blocks[1]))))
        stub = list(range(n_flex + 1, n_flex + n_stub + 1))
        for s in stub:
            for j in rng.choice(flex, size=int(rng.integers(1, min(3, n_flex) + 1)), replace=False):
                edges.add((s, int(j)))
        # single flexible nodes need an in-neighbour other than themselves
        for block in blocks:
            if len(block) == 1 and not any(b == block[0] and a != b for a, b in edges):
                if stub:
                    edges.add((stub[0], block[0]))
                elif len(blocks) == 2 and block is blocks[1]:
                    edges.add((blocks[0][0], block[0]))
        nodes = [random_node(rng, i) for i in flex + stub]
        spec = make_spec(nodes, sorted(edges))
        if validate(spec).ok:
            return spec


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def record_acceptance(number, label, ok, detail=""):
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {label}"
    if detail:
        line += f"  [{detail}]"
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
