"""Network specification: parsing, validation, node classification and the
derived interaction matrices.

Internal ordering puts flexible nodes (positive in-degree) first, then
stubborn nodes, each block in document order.  Every matrix in
:class:`DerivedMatrices` uses that ordering; ``order`` maps internal index to
the position in ``spec.nodes``.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np


class SpecError(ValueError):
    """Malformed or inconsistent network document."""


class Sampling(enum.Enum):
    PREFERENTIAL = "preferential"
    DEPREFERENTIAL = "depreferential"


class NodeKind(enum.Enum):
    POLYA = "polya"
    NON_POLYA = "non_polya"
    ANTI_POLYA = "anti_polya"


@dataclass(frozen=True)
class NodeSpec:
    id: int
    sampling: Sampling
    m: int
    alpha: int
    beta: int
    w0: int
    b0: int

    @property
    def sign(self) -> int:
        return 1 if self.sampling is Sampling.PREFERENTIAL else -1

    @property
    def kind(self) -> NodeKind:
        if self.alpha == self.beta == self.m:
            return NodeKind.POLYA
        if self.alpha == self.beta == 0:
            return NodeKind.ANTI_POLYA
        return NodeKind.NON_POLYA

    @property
    def z0(self) -> float:
        return self.w0 / (self.w0 + self.b0)


@dataclass(frozen=True)
class NetworkSpec:
    nodes: tuple[NodeSpec, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def ids(self) -> list[int]:
        return [node.id for node in self.nodes]

    def node(self, node_id: int) -> NodeSpec:
        for node in self.nodes:
            if node.id == node_id:
                return node
        raise KeyError(node_id)

    def in_neighbours(self) -> dict[int, list[int]]:
        nbrs: dict[int, list[int]] = {node.id: [] for node in self.nodes}
        for src, dst in self.edges:
            nbrs[dst].append(src)
        return nbrs


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


_NODE_FIELDS = ("id", "sampling", "m", "alpha", "beta", "w0", "b0")


def _int_field(raw: dict, key: str, where: str) -> int:
    value = raw[key]
    # bool is an int subclass; floats are rejected even when integral
    if isinstance(value, bool) or not isinstance(value, int):
        raise SpecError(f"{where}: field {key!r} must be an integer, got {value!r}")
    return value


def spec_from_dict(doc: dict) -> NetworkSpec:
    if not isinstance(doc, dict):
        raise SpecError("document must be a JSON object")
    unknown = set(doc) - {"nodes", "edges"}
    if unknown:
        raise SpecError(f"unknown top-level field(s): {sorted(unknown)}")
    raw_nodes = doc.get("nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise SpecError("'nodes' must be a non-empty list")
    raw_edges = doc.get("edges", [])
    if not isinstance(raw_edges, list):
        raise SpecError("'edges' must be a list")

    nodes = []
    seen = set()
    for k, raw in enumerate(raw_nodes):
        where = f"nodes[{k}]"
        if not isinstance(raw, dict):
            raise SpecError(f"{where}: expected an object")
        extra = set(raw) - set(_NODE_FIELDS)
        if extra:
            raise SpecError(f"{where}: unknown field(s) {sorted(extra)}")
        missing = [f for f in _NODE_FIELDS if f not in raw]
        if missing:
            raise SpecError(f"{where}: missing field(s) {missing}")
        node_id = _int_field(raw, "id", where)
        if node_id <= 0:
            raise SpecError(f"{where}: node id must be positive")
        if node_id in seen:
            raise SpecError(f"duplicate node id {node_id}")
        seen.add(node_id)
        try:
            sampling = Sampling(raw["sampling"])
        except ValueError:
            raise SpecError(f"{where}: unknown sampling {raw['sampling']!r}") from None
        m = _int_field(raw, "m", where)
        if m <= 0:
            raise SpecError(f"{where}: m must be a positive integer")
        values = {key: _int_field(raw, key, where) for key in ("alpha", "beta", "w0", "b0")}
        if values["w0"] < 0 or values["b0"] < 0:
            raise SpecError(f"{where}: initial ball counts must be non-negative")
        nodes.append(NodeSpec(node_id, sampling, m, **values))

    edges = []
    seen_edges = set()
    for k, raw in enumerate(raw_edges):
        if not isinstance(raw, list) or len(raw) != 2:
            raise SpecError(f"edges[{k}]: expected a [source, target] pair")
        src = _int_field({"source": raw[0]}, "source", f"edges[{k}]")
        dst = _int_field({"target": raw[1]}, "target", f"edges[{k}]")
        for end in (src, dst):
            if end not in seen:
                raise SpecError(f"edges[{k}]: unknown node {end}")
        if (src, dst) in seen_edges:
            raise SpecError(f"duplicate edge {src}->{dst}")
        seen_edges.add((src, dst))
        edges.append((src, dst))
    return NetworkSpec(tuple(nodes), tuple(edges))


def parse_spec(text: str) -> NetworkSpec:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"malformed JSON: {exc}") from None
    return spec_from_dict(doc)


def load_spec(path) -> NetworkSpec:
    with open(path, encoding="utf-8") as fh:
        return parse_spec(fh.read())


def spec_to_dict(spec: NetworkSpec) -> dict:
    nodes = sorted(spec.nodes, key=lambda n: n.id)
    return {
        "edges": [list(e) for e in sorted(spec.edges)],
        "nodes": [
            {
                "alpha": n.alpha,
                "b0": n.b0,
                "beta": n.beta,
                "id": n.id,
                "m": n.m,
                "sampling": n.sampling.value,
                "w0": n.w0,
            }
            for n in nodes
        ],
    }


def render_spec(spec: NetworkSpec) -> str:
    """Canonical serialization: sorted keys, nodes by id, edges lexicographic."""
    return json.dumps(spec_to_dict(spec), sort_keys=True, indent=2) + "\n"


def validate(spec: NetworkSpec) -> ValidationReport:
    report = ValidationReport()
    indeg = {n.id: 0 for n in spec.nodes}
    outdeg = {n.id: 0 for n in spec.nodes}
    for src, dst in spec.edges:
        outdeg[src] += 1
        indeg[dst] += 1
    in_nbrs = spec.in_neighbours()
    for n in spec.nodes:
        if indeg[n.id] == 0 and outdeg[n.id] == 0:
            report.violations.append(f"node {n.id}: isolated node")
        if in_nbrs[n.id] == [n.id]:
            report.violations.append(f"node {n.id}: single self-loop node")
        if n.w0 + n.b0 < 1:
            report.violations.append(f"node {n.id}: empty urn (w0 + b0 = 0)")
        if not 0 <= n.alpha <= n.m:
            report.violations.append(f"node {n.id}: alpha={n.alpha} outside [0, {n.m}]")
        if not 0 <= n.beta <= n.m:
            report.violations.append(f"node {n.id}: beta={n.beta} outside [0, {n.m}]")
        if n.alpha == n.beta == 0:
            report.warnings.append(
                f"node {n.id}: anti-Polya reinforcement (alpha = beta = 0); "
                "convergence theory not covered"
            )
    return report


def check(spec: NetworkSpec) -> NetworkSpec:
    """Raise :class:`SpecError` listing every violation, else return *spec*."""
    report = validate(spec)
    if not report.ok:
        raise SpecError("; ".join(report.violations))
    return spec


def classify_nodes(spec: NetworkSpec) -> tuple[list[int], list[int]]:
    """Return (flexible ids, stubborn ids), each in document order."""
    has_in = {dst for _, dst in spec.edges}
    flexible = [n.id for n in spec.nodes if n.id in has_in]
    stubborn = [n.id for n in spec.nodes if n.id not in has_in]
    return flexible, stubborn


def node_kinds(spec: NetworkSpec) -> dict[int, NodeKind]:
    return {n.id: n.kind for n in spec.nodes}


@dataclass(frozen=True, eq=False)
class DerivedMatrices:
    spec: NetworkSpec
    ids: tuple[int, ...]            # user ids in internal order
    order: tuple[int, ...]          # internal index -> position in spec.nodes
    n_flexible: int
    a_frac: tuple[Fraction, ...]
    b_frac: tuple[Fraction, ...]
    mbar: tuple[int, ...]
    A: np.ndarray
    A_tilde: np.ndarray
    B_diag: np.ndarray
    I_signs: np.ndarray
    W: np.ndarray
    A_tilde_exact: tuple[tuple[Fraction, ...], ...]
    W_exact: tuple[tuple[Fraction, ...], ...]

    @property
    def n(self) -> int:
        return len(self.ids)

    @property
    def flexible(self) -> range:
        return range(self.n_flexible)

    @property
    def stubborn(self) -> range:
        return range(self.n_flexible, self.n)

    @property
    def flexible_ids(self) -> list[int]:
        return list(self.ids[: self.n_flexible])

    @property
    def stubborn_ids(self) -> list[int]:
        return list(self.ids[self.n_flexible :])

    def index_of(self, node_id: int) -> int:
        return self.ids.index(node_id)

    @property
    def nodes(self) -> list[NodeSpec]:
        """Node specs in internal order."""
        return [self.spec.nodes[k] for k in self.order]

    @property
    def W_F(self) -> np.ndarray:
        f = self.n_flexible
        return self.W[:f, :f]

    @property
    def W_SF(self) -> np.ndarray:
        f = self.n_flexible
        return self.W[f:, :f]

    def in_neighbours(self) -> list[list[int]]:
        """In-neighbour internal indices of every node."""
        return [list(np.flatnonzero(self.A[:, j])) for j in range(self.n)]

    def to_user_order(self, values) -> list:
        """Reorder a length-N internal vector into document order."""
        out = [None] * self.n
        for k, pos in enumerate(self.order):
            out[pos] = values[k]
        return out


def derive(spec: NetworkSpec) -> DerivedMatrices:
    flexible, stubborn = classify_nodes(spec)
    ids = tuple(flexible + stubborn)
    pos = {n.id: k for k, n in enumerate(spec.nodes)}
    order = tuple(pos[i] for i in ids)
    index = {node_id: k for k, node_id in enumerate(ids)}
    nodes = [spec.nodes[k] for k in order]
    n = len(ids)
    f = len(flexible)

    A = np.zeros((n, n), dtype=np.int64)
    for src, dst in spec.edges:
        A[index[src], index[dst]] = 1
    mbar = tuple(int(sum(nodes[i].m for i in range(n) if A[i, j])) for j in range(n))
    a_frac = tuple(Fraction(nd.alpha, nd.m) for nd in nodes)
    b_frac = tuple(Fraction(nd.beta, nd.m) for nd in nodes)
    signs = [nd.sign for nd in nodes]

    zero = Fraction(0)
    at_exact = []
    w_exact = []
    for i in range(n):
        at_row = []
        w_row = []
        balance = nodes[i].alpha + nodes[i].beta - nodes[i].m
        for j in range(n):
            if j < f and A[i, j]:
                at_row.append(Fraction(nodes[i].m, mbar[j]))
                w_row.append(Fraction(signs[i] * balance, mbar[j]))
            else:
                at_row.append(zero)
                w_row.append(zero)
        at_exact.append(tuple(at_row))
        w_exact.append(tuple(w_row))

    def to_float(rows):
        return np.array([[float(x) for x in row] for row in rows], dtype=float).reshape(n, n)

    return DerivedMatrices(
        spec=spec,
        ids=ids,
        order=order,
        n_flexible=f,
        a_frac=a_frac,
        b_frac=b_frac,
        mbar=mbar,
        A=A,
        A_tilde=to_float(at_exact),
        B_diag=np.array([float(a + b - 1) for a, b in zip(a_frac, b_frac)]),
        I_signs=np.array(signs, dtype=np.int64),
        W=to_float(w_exact),
        A_tilde_exact=tuple(at_exact),
        W_exact=tuple(w_exact),
    )
