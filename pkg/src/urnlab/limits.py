"""Deterministic limits, the mean-field drift and synchronisation checks."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .netmodel import DerivedMatrices, NodeKind
from .partition import explore_partition, flexible_components
from .spectral import SingularMatrix, solve_row_system


class NoDeterministicLimit(ArithmeticError):
    pass


class UnsupportedRegime(ValueError):
    """Anti-Polya flexible nodes fall outside the convergence theory."""


SYNC_RTOL = 1e-12


@dataclass(frozen=True)
class ComponentVerdict:
    ids: list[int]
    source: bool
    non_polya: bool
    all_polya_no_partition: bool
    stubborn_feed: bool
    external_in_edge: bool
    covered: bool


@dataclass(frozen=True)
class ConditionReport:
    strongly_connected_F: bool
    cond_i: bool
    cond_ii: bool
    cond_iii: bool
    guaranteed: bool
    per_scc: list[ComponentVerdict] = field(default_factory=list)
    anti_polya: list[int] = field(default_factory=list)
    invertible: bool = False


@dataclass(frozen=True)
class LimitReport:
    z_star: np.ndarray        # length N, internal order
    rhs_vector: np.ndarray    # length |F|
    residual: float
    proven: bool = True       # False when no convergence condition holds


@dataclass(frozen=True)
class PSCAggregates:
    alpha_F: Fraction
    beta_F: Fraction
    m_F: Fraction
    m_S: Fraction
    beta_S: Fraction
    alpha_0S: Fraction
    beta_0S: Fraction
    m_0S: Fraction


@dataclass(frozen=True)
class SyncReport:
    sc1: float | None = None
    sc2: float | None = None
    sc3: float | None = None
    z_sync: float | None = None
    degenerate: bool = False
    psc: PSCAggregates | None = None
    z_psc: float | None = None


def _anti_polya_flexible(dm: DerivedMatrices) -> list[int]:
    return [dm.ids[k] for k in dm.flexible if dm.nodes[k].kind is NodeKind.ANTI_POLYA]


def require_supported(dm: DerivedMatrices) -> None:
    bad = _anti_polya_flexible(dm)
    if bad:
        raise UnsupportedRegime(f"anti-Polya flexible node(s) {bad}")


def _component_verdict(dm, comp) -> ComponentVerdict:
    members = set(comp)
    nodes = dm.nodes
    ext_flex = any(dm.A[i, j] for j in comp for i in range(dm.n_flexible) if i not in members)
    stub = any(dm.A[i, j] for j in comp for i in dm.stubborn)
    source = not ext_flex
    non_polya = any(nodes[k].kind is NodeKind.NON_POLYA for k in comp)
    all_polya = all(nodes[k].kind is NodeKind.POLYA for k in comp)
    no_partition = False
    if all_polya:
        no_partition = not explore_partition(dm, comp[0], nodes=comp).admits
    covered = (not source) or non_polya or no_partition or stub
    return ComponentVerdict(
        ids=[dm.ids[k] for k in comp],
        source=source,
        non_polya=non_polya,
        all_polya_no_partition=all_polya and no_partition,
        stubborn_feed=stub,
        external_in_edge=ext_flex,
        covered=covered,
    )


def _invertible(dm: DerivedMatrices) -> bool:
    f = dm.n_flexible
    try:
        solve_row_system(np.eye(f) - dm.W_F, np.zeros(f))
    except SingularMatrix:
        return False
    return True


def check_conditions(dm: DerivedMatrices) -> ConditionReport:
    nodes = dm.nodes
    flex = list(dm.flexible)
    comps = flexible_components(dm)
    strongly = len(comps) == 1
    cond_i = any(nodes[k].kind is NodeKind.NON_POLYA for k in flex)
    cond_ii = bool(dm.stubborn_ids)
    all_polya = all(nodes[k].kind is NodeKind.POLYA for k in flex)
    anti = _anti_polya_flexible(dm)

    per_scc = []
    if strongly:
        cond_iii = all_polya and not explore_partition(dm, 0).admits
        guaranteed = cond_i or cond_ii or cond_iii
    else:
        cond_iii = False
        per_scc = [_component_verdict(dm, comp) for comp in comps]
        guaranteed = bool(comps) and all(v.covered for v in per_scc)
    if anti:
        guaranteed = False
    invertible = _invertible(dm)
    if guaranteed and not invertible:
        raise AssertionError("convergence conditions hold but I - W_F is singular")
    return ConditionReport(strongly, cond_i, cond_ii, cond_iii, guaranteed, per_scc, anti, invertible)


def _z0(dm: DerivedMatrices, z0=None) -> np.ndarray:
    if z0 is None:
        return np.array([nd.z0 for nd in dm.nodes])
    return np.asarray(z0, dtype=float)


def limit_rhs(dm: DerivedMatrices, z0=None) -> np.ndarray:
    """Constant part of the drift: ``Z_S^0 W_SF + (e B A~)_F + ((1 - b) A~)_F``."""
    z0 = _z0(dm, z0)
    f = dm.n_flexible
    nodes = dm.nodes
    e = np.array([1.0 if s < 0 else 0.0 for s in dm.I_signs])
    one_minus_b = np.array([(nd.m - nd.beta) / nd.m for nd in nodes])
    BA = dm.B_diag[:, None] * dm.A_tilde
    return z0[f:] @ dm.W_SF + (e @ BA)[:f] + (one_minus_b @ dm.A_tilde)[:f]


def drift(dm: DerivedMatrices, z, z0=None) -> np.ndarray:
    """Mean-field drift ``h(z) = -z (I - W_F) + rhs`` on the flexible block.

    *z0* is a full length-N internal-order vector of initial proportions
    (only its stubborn part is used).
    """
    z = np.asarray(z, dtype=float)
    return -(z - z @ dm.W_F) + limit_rhs(dm, z0)


def limit_ZF(dm: DerivedMatrices, z0=None, *, proven: bool | None = None) -> LimitReport:
    """Fixed point of the drift, with stubborn coordinates copied from *z0*.

    ``proven`` records whether a convergence condition backs the fixed point
    as the almost-sure limit; it is evaluated here unless supplied.
    """
    require_supported(dm)
    z0 = _z0(dm, z0)
    f = dm.n_flexible
    rhs = limit_rhs(dm, z0)
    try:
        zf = solve_row_system(np.eye(f) - dm.W_F, rhs)
    except SingularMatrix:
        raise NoDeterministicLimit("I - W_F is singular; no unique fixed point") from None
    z_star = np.concatenate([zf, z0[f:]])
    residual = float(np.abs(drift(dm, zf, z0)).max()) if f else 0.0
    if proven is None:
        proven = check_conditions(dm).guaranteed
    return LimitReport(z_star, rhs, residual, proven)


# -- synchronisation ---------------------------------------------------------


def _common(values) -> float | None:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return None
    mean = float(values.mean())
    if np.all(np.abs(values - mean) <= SYNC_RTOL * max(1.0, abs(mean))):
        return mean
    return None


def _exact_common(values):
    values = set(values)
    return values.pop() if len(values) == 1 else None


def check_sync(dm: DerivedMatrices, z0=None) -> SyncReport:
    exact_z0 = z0 is None
    z0 = _z0(dm, z0)
    f = dm.n_flexible
    if f == 0:
        return SyncReport()
    nodes = dm.nodes
    sc1 = _common(dm.W_F.sum(axis=0))
    sc2 = _common(z0[f:] @ dm.W_SF if dm.stubborn_ids else np.zeros(f))
    rhs = limit_rhs(dm, z0)
    sc3 = _common(rhs - (z0[f:] @ dm.W_SF if dm.stubborn_ids else 0.0))

    z_sync = None
    degenerate = False
    if sc1 is not None and sc2 is not None and sc3 is not None:
        if abs(1.0 - sc1) <= SYNC_RTOL:
            degenerate = True
        else:
            z_sync = (sc3 + sc2) / (1.0 - sc1)

    psc = None
    z_psc = None
    if all(s > 0 for s in dm.I_signs):
        in_nbrs = dm.in_neighbours()
        stub = set(dm.stubborn)
        per_node = []
        for j in dm.flexible:
            fi = [i for i in in_nbrs[j] if i not in stub]
            si = [i for i in in_nbrs[j] if i in stub]
            if exact_z0:
                zs = {i: Fraction(nodes[i].w0, nodes[i].w0 + nodes[i].b0) for i in si}
            else:
                zs = {i: Fraction(float(z0[i])) for i in si}
            per_node.append((
                sum(nodes[i].alpha for i in fi),
                sum(nodes[i].beta for i in fi),
                sum(nodes[i].m for i in fi),
                sum(nodes[i].m for i in si),
                sum(nodes[i].beta for i in si),
                sum((zs[i] * nodes[i].alpha for i in si), Fraction(0)),
                sum((zs[i] * nodes[i].beta for i in si), Fraction(0)),
                sum((zs[i] * nodes[i].m for i in si), Fraction(0)),
            ))
        common = _exact_common(per_node)
        if common is not None:
            agg = PSCAggregates(*(Fraction(x) for x in common))
            if agg.alpha_F + agg.beta_F < 2 * agg.m_F + agg.m_S:
                psc = agg
                num = (agg.m_F + agg.m_S - agg.beta_F - agg.beta_S
                       - (agg.m_0S - agg.alpha_0S - agg.beta_0S))
                z_psc = float(num / (2 * agg.m_F + agg.m_S - agg.alpha_F - agg.beta_F))
    return SyncReport(sc1, sc2, sc3, z_sync, degenerate, psc, z_psc)
