"""Graph exploration process on the flexible subgraph.

Labels flexible nodes P1/P2 (preferential) and D1/D2 (de-preferential) by
propagating along in-neighbourhoods.  A consistent labelling exists exactly
when ``I - W_F`` is singular (all nodes Polya, no stubborn nodes), which
:func:`kernel_oracle` checks independently by exact elimination.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

from .netmodel import DerivedMatrices, NodeKind
from .spectral import identity_minus, kernel_basis_exact


class PartitionError(ValueError):
    pass


class FailureReason(enum.Enum):
    DISJOINTNESS_VIOLATED = "disjointness violated"
    REASSIGNMENT_DETECTED = "reassignment detected"


ROLES = ("P1", "P2", "D1", "D2")


@dataclass(frozen=True)
class PartitionResult:
    admits: bool
    sets: dict[str, frozenset[int]] | None = None   # internal indices
    failure_reason: FailureReason | None = None

    def user_sets(self, dm: DerivedMatrices) -> dict[str, list[int]]:
        if self.sets is None:
            return {}
        return {role: sorted(dm.ids[k] for k in members) for role, members in self.sets.items()}


def strongly_connected_components(nodes, successors) -> list[list[int]]:
    """Tarjan's algorithm, iterative.  Components come out in reverse
    topological order of the condensation (sinks first)."""
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    result = []
    counter = 0
    for root in nodes:
        if root in index:
            continue
        work = [(root, iter(successors(root)))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(successors(w))))
                    advanced = True
                    break
                if w in on_stack:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                result.append(sorted(comp))
    return result


def flexible_components(dm: DerivedMatrices) -> list[list[int]]:
    """SCCs of the flexible subgraph in topological order (sources first)."""
    f = dm.n_flexible
    succ = [[j for j in range(f) if dm.A[i, j]] for i in range(f)]
    comps = strongly_connected_components(range(f), lambda v: succ[v])
    return comps[::-1]


def is_flexible_strongly_connected(dm: DerivedMatrices) -> bool:
    return dm.n_flexible > 0 and len(flexible_components(dm)) == 1


def _sweep(sets, in_nbrs, preferential):
    """One application of the four propagation rules, in order.

    Each rule reads the source set as it stood when the rule started.
    """
    def spread(source, pref_target, depref_target):
        for j in list(sets[source]):
            for i in in_nbrs[j]:
                sets[pref_target if preferential[i] else depref_target].add(i)

    spread("P1", "P1", "D1")
    spread("D1", "P2", "D2")
    spread("D2", "P1", "D1")
    spread("P2", "P2", "D2")


def _disjoint(sets) -> bool:
    total = sum(len(s) for s in sets.values())
    return total == len(set().union(*sets.values()))


def explore_partition(dm: DerivedMatrices, start: int, *, nodes=None) -> PartitionResult:
    """Run the exploration from internal index *start*.

    *nodes* restricts the run to a strongly connected subset of F (used for
    per-component checks); by default the whole flexible set is explored.
    """
    if nodes is None:
        if not is_flexible_strongly_connected(dm):
            raise PartitionError("flexible subgraph is not strongly connected")
        nodes = range(dm.n_flexible)
    members = set(nodes)
    if start not in members:
        raise PartitionError(f"start index {start} is not a flexible node of the explored set")
    in_nbrs = {j: [i for i in members if dm.A[i, j]] for j in members}
    preferential = {i: dm.I_signs[i] > 0 for i in members}

    sets = {role: set() for role in ROLES}
    sets["P1" if preferential[start] else "D1"].add(start)
    while set().union(*sets.values()) != members:
        before = sum(len(s) for s in sets.values())
        _sweep(sets, in_nbrs, preferential)
        if not _disjoint(sets):
            return PartitionResult(False, failure_reason=FailureReason.DISJOINTNESS_VIOLATED)
        if sum(len(s) for s in sets.values()) == before:
            raise PartitionError("exploration stalled: node set not strongly connected")

    snapshot = {role: frozenset(s) for role, s in sets.items()}
    _sweep(sets, in_nbrs, preferential)
    if any(sets[role] != snapshot[role] for role in ROLES):
        return PartitionResult(False, failure_reason=FailureReason.REASSIGNMENT_DETECTED)
    return PartitionResult(True, sets=snapshot)


def _canonical(sets):
    swapped = {"P1": sets["P2"], "P2": sets["P1"], "D1": sets["D2"], "D2": sets["D1"]}
    a = tuple(tuple(sorted(sets[r])) for r in ROLES)
    b = tuple(tuple(sorted(swapped[r])) for r in ROLES)
    return min(a, b)


def partition_invariant_check(dm: DerivedMatrices, max_workers: int | None = 1) -> bool:
    """True iff every start node yields the same answer (sets up to P1<->P2, D1<->D2)."""
    starts = list(range(dm.n_flexible))
    if max_workers == 1:
        results = [explore_partition(dm, s) for s in starts]
    else:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            results = list(pool.map(lambda s: explore_partition(dm, s), starts))
    if len({r.admits for r in results}) != 1:
        return False
    if not results[0].admits:
        return True
    return len({_canonical(r.sets) for r in results}) == 1


def check_edge_consistency(dm: DerivedMatrices, result: PartitionResult) -> bool:
    """Every in-neighbour inside F lands where the propagation rules say."""
    if not result.admits:
        raise ValueError("no partition to check")
    role_of = {k: role for role, members in result.sets.items() for k in members}
    target = {
        "P1": ("P1", "D1"), "D2": ("P1", "D1"),
        "D1": ("P2", "D2"), "P2": ("P2", "D2"),
    }
    for j, role in role_of.items():
        pref_role, depref_role = target[role]
        for i in range(dm.n_flexible):
            if dm.A[i, j] and i in role_of:
                want = pref_role if dm.I_signs[i] > 0 else depref_role
                if role_of[i] != want:
                    return False
    return True


def kernel_oracle(dm: DerivedMatrices) -> bool:
    """True iff ``I - W_F`` is singular, decided in exact arithmetic."""
    if dm.stubborn_ids:
        raise PartitionError("kernel oracle requires S to be empty")
    if any(node.kind is not NodeKind.POLYA for node in dm.nodes):
        raise PartitionError("kernel oracle requires every flexible node to be Polya type")
    if not is_flexible_strongly_connected(dm):
        raise PartitionError("flexible subgraph is not strongly connected")
    f = dm.n_flexible
    W_F = [row[:f] for row in dm.W_exact[:f]]
    return bool(kernel_basis_exact(identity_minus(W_F)))
