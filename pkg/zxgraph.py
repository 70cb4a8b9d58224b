"""
ZX diagrams of brickwork circuits and the rewrite engine that simplifies them.

Diagrams are multigraphs: ``adj[a][b] == adj[b][a]`` is one shared
``[n_plain, n_hadamard]`` list, self-loops live in ``adj[v][v]``. Phases are
integers mod 4 in units of pi/2. Boundary spiders are open legs: they carry
no tensor and always have exactly one wire.

Rules mutate the diagram in place and raise :class:`RuleNotApplicable` when
their precondition fails; the ``*_applies`` predicates let the simplifiers
scan without exceptions.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence, Set, Tuple, Union

import networkx as nx
import numpy as np
import pandas as pd
from opt_einsum import contract, get_symbol

from circuit import BrickworkCircuit, GateKind, InitialState, ModelParams, sample_circuit

logger = logging.getLogger(__name__)

PLAIN, HADAMARD = 0, 1
DEFAULT_LEG_CAP = 12

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_I = np.eye(2, dtype=complex)


class RuleNotApplicable(ValueError):
    pass


class DumpParseError(ValueError):
    pass


class OracleCapExceeded(ValueError):
    def __init__(self, legs: int, cap: int):
        super().__init__(f"diagram has {legs} open legs, dense evaluation is capped at {cap}")
        self.legs = legs
        self.cap = cap


class Color(str, Enum):
    Z = "Z"
    X = "X"
    BOUNDARY = "B"


@dataclass
class Spider:
    id: int
    color: Color
    phase: int = 0
    site: float = 0.0
    time: float = 0.0
    boundary: Optional[Tuple[str, int]] = None

    @property
    def is_boundary(self) -> bool:
        return self.color is Color.BOUNDARY


@dataclass(frozen=True)
class RewriteEvent:
    rule: str
    step: int
    distance: float
    participants: Tuple[int, ...]


class ZxDiagram:
    def __init__(self):
        self.spiders: Dict[int, Spider] = {}
        self.adj: Dict[int, Dict[int, List[int]]] = {}
        self.inputs: List[int] = []
        self.outputs: List[int] = []
        self._next_id = 0

    # structure

    def add_spider(self, color: Color, phase: int = 0, site: float = 0.0, time: float = 0.0,
                   boundary: Optional[Tuple[str, int]] = None, spider_id: Optional[int] = None) -> int:
        v = self._next_id if spider_id is None else spider_id
        if v in self.spiders:
            raise ValueError(f"spider id {v} already in use")
        self._next_id = max(self._next_id, v + 1)
        self.spiders[v] = Spider(v, Color(color), phase % 4, site, time, boundary)
        self.adj[v] = {}
        return v

    def add_wire(self, a: int, b: int, etype: int = PLAIN, count: int = 1) -> None:
        if a not in self.spiders or b not in self.spiders:
            raise ValueError(f"wire ({a}, {b}) references a missing spider")
        entry = self.adj[a].get(b)
        if entry is None:
            entry = [0, 0]
            self.adj[a][b] = entry
            self.adj[b][a] = entry
        entry[etype] += count

    def remove_wire(self, a: int, b: int, etype: int, count: int = 1) -> None:
        entry = self.adj[a].get(b)
        if entry is None or entry[etype] < count:
            raise ValueError(f"no such wire ({a}, {b}, {etype})")
        entry[etype] -= count
        if entry == [0, 0]:
            del self.adj[a][b]
            if a != b:
                del self.adj[b][a]

    def toggle_hadamard(self, a: int, b: int) -> None:
        """Add a Hadamard wire, or cancel one already present (parallel pairs cancel)."""
        if self.wire_counts(a, b)[HADAMARD]:
            self.remove_wire(a, b, HADAMARD)
        else:
            self.add_wire(a, b, HADAMARD)

    def remove_spider(self, v: int) -> None:
        for u in list(self.adj[v]):
            if u != v:
                del self.adj[u][v]
        del self.adj[v]
        del self.spiders[v]

    def wire_counts(self, a: int, b: int) -> Tuple[int, int]:
        entry = self.adj.get(a, {}).get(b)
        return (entry[0], entry[1]) if entry else (0, 0)

    def neighbors(self, v: int) -> List[int]:
        return sorted(u for u in self.adj[v] if u != v)

    def ends(self, v: int) -> List[Tuple[int, int]]:
        """(neighbour, wire type) per wire end at ``v``; self-loops appear twice."""
        out = []
        for u in sorted(self.adj[v]):
            plain, had = self.adj[v][u]
            mult = 2 if u == v else 1
            out += [(u, PLAIN)] * (plain * mult) + [(u, HADAMARD)] * (had * mult)
        return out

    def degree(self, v: int) -> int:
        total = 0
        for u, (plain, had) in self.adj[v].items():
            total += (plain + had) * (2 if u == v else 1)
        return total

    def self_loops(self, v: int) -> Tuple[int, int]:
        return self.wire_counts(v, v)

    def wires(self) -> Iterator[Tuple[int, int, int]]:
        """Every wire once, as (a, b, type) with a <= b, in a deterministic order."""
        for a in sorted(self.adj):
            for b in sorted(self.adj[a]):
                if b < a:
                    continue
                plain, had = self.adj[a][b]
                for _ in range(plain):
                    yield a, b, PLAIN
                for _ in range(had):
                    yield a, b, HADAMARD

    def is_boundary(self, v: int) -> bool:
        return self.spiders[v].is_boundary

    @property
    def n_spiders(self) -> int:
        return sum(1 for s in self.spiders.values() if not s.is_boundary)

    @property
    def n_wires(self) -> int:
        return sum(1 for _ in self.wires())

    def distance(self, a: int, b: int) -> float:
        sa, sb = self.spiders[a], self.spiders[b]
        return math.hypot(sa.site - sb.site, sa.time - sb.time)

    def copy(self) -> "ZxDiagram":
        out = ZxDiagram()
        for v, s in self.spiders.items():
            out.add_spider(s.color, s.phase, s.site, s.time, s.boundary, spider_id=v)
        for a, b, t in self.wires():
            out.add_wire(a, b, t)
        out.inputs = list(self.inputs)
        out.outputs = list(self.outputs)
        out._next_id = self._next_id
        return out

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.spiders)
        g.add_edges_from((a, b) for a, b, _ in self.wires() if a != b)
        return g

    def validate(self) -> None:
        for v, nbrs in self.adj.items():
            assert v in self.spiders, f"adjacency for missing spider {v}"
            for u, entry in nbrs.items():
                assert u in self.spiders, f"wire to missing spider {u}"
                assert self.adj[u][v] is entry, f"asymmetric wire ({v}, {u})"
        for v in self.inputs + self.outputs:
            assert self.is_boundary(v) and self.degree(v) == 1, f"boundary {v} must have one wire"

    def __repr__(self) -> str:
        return (f"ZxDiagram(spiders={self.n_spiders}, wires={self.n_wires}, "
                f"inputs={len(self.inputs)}, outputs={len(self.outputs)})")


# construction

def _splice_out(d: ZxDiagram, v: int) -> None:
    """Remove a phase-0 degree-2 spider, joining its two wire ends."""
    if any(d.self_loops(v)):
        # both legs joined: a closed loop, i.e. a scalar
        d.remove_spider(v)
        return
    (u1, t1), (u2, t2) = d.ends(v)
    d.remove_spider(v)
    d.add_wire(u1, u2, t1 ^ t2)


def diagram_from_circuit(record: Union[BrickworkCircuit, Mapping[str, Any]],
                         prepare_initial_state: bool = False) -> ZxDiagram:
    """Translate a circuit (or its JSON record) into a ZX diagram.

    CNOT becomes a Z spider on the control joined to an X spider on the
    target; SWAP crosses wires; a Bell measurement caps the two incoming
    wires and opens a fresh cup. By default the result is the circuit
    operator with N inputs and N outputs. With ``prepare_initial_state`` the
    input side is closed with the initial state instead (no inputs).
    """
    c = record if isinstance(record, BrickworkCircuit) else BrickworkCircuit.from_record(record)
    n = c.n_qubits
    d = ZxDiagram()
    cups: List[int] = []
    front: List[int] = [0] * n

    if prepare_initial_state:
        if InitialState(c.initial_state) is InitialState.BELL_PAIRS:
            for k in range(n // 2):
                j = d.add_spider(Color.Z, 0, 2 * k + 0.5, 0.0)
                cups.append(j)
                front[2 * k] = front[2 * k + 1] = j
        else:
            for q in range(n):
                front[q] = d.add_spider(Color.X, 0, q, 0.0)
    else:
        for q in range(n):
            front[q] = d.add_spider(Color.BOUNDARY, 0, q, 0.0, ("input", q))
            d.inputs.append(front[q])

    for brick in c.bricks:
        t = (brick.layer + 1) / 2
        a, b = brick.sites
        if brick.kind is GateKind.CNOT:
            ctl, tgt = brick.control_target
            z = d.add_spider(Color.Z, 0, ctl, t)
            x = d.add_spider(Color.X, 0, tgt, t)
            d.add_wire(front[ctl], z)
            d.add_wire(front[tgt], x)
            d.add_wire(z, x)
            front[ctl], front[tgt] = z, x
        elif brick.kind is GateKind.SWAP:
            front[a], front[b] = front[b], front[a]
        elif brick.kind is GateKind.BELL_MEASURE:
            d.add_wire(front[a], front[b])
            j = d.add_spider(Color.Z, 0, a + 0.5, t)
            cups.append(j)
            front[a] = front[b] = j

    for q in range(n):
        o = d.add_spider(Color.BOUNDARY, 0, q, c.final_time, ("output", q))
        d.add_wire(front[q], o)
        d.outputs.append(o)

    for j in cups:
        _splice_out(d, j)
    logger.debug(f"Built diagram for N={n} depth={c.depth_layers}: {d}")
    return d


# dense evaluation

def spider_tensor(color: Color, phase: int, arity: int) -> np.ndarray:
    t = np.zeros((2,) * arity, dtype=complex)
    t[(0,) * arity] = 1.0
    t[(1,) * arity] += np.exp(1j * np.pi * phase / 2)
    if color is Color.X:
        for axis in range(arity):
            t = np.moveaxis(np.tensordot(_H, t, axes=([1], [axis])), 0, axis)
    return t


def evaluate_dense(d: ZxDiagram, cap: int = DEFAULT_LEG_CAP) -> np.ndarray:
    """The linear map of ``d`` as a (2**outputs, 2**inputs) matrix, up to scalar.

    Legs are ordered outputs then inputs, first leg most significant.
    Disconnected scalar spiders are skipped.
    """
    legs = len(d.inputs) + len(d.outputs)
    if legs > cap:
        raise OracleCapExceeded(legs, cap)

    counter = iter(range(10 ** 9))
    ends: Dict[int, List[str]] = {v: [] for v in d.spiders}
    operands, subscripts = [], []
    for a, b, t in d.wires():
        sa, sb = get_symbol(next(counter)), get_symbol(next(counter))
        operands.append(_H if t == HADAMARD else _I)
        subscripts.append(sa + sb)
        ends[a].append(sa)
        ends[b].append(sb)

    for v, s in d.spiders.items():
        if s.is_boundary or not ends[v]:
            continue
        operands.append(spider_tensor(s.color, s.phase, len(ends[v])))
        subscripts.append("".join(ends[v]))

    shape = (2 ** len(d.outputs), 2 ** len(d.inputs))
    if not operands:
        return np.ones(shape, dtype=complex)
    out = "".join(ends[v][0] for v in d.outputs + d.inputs)
    result = contract(",".join(subscripts) + "->" + out, *operands, optimize="auto")
    return np.asarray(result, dtype=complex).reshape(shape)


# rules

def _is_zx(d: ZxDiagram, v: int) -> bool:
    return v in d.spiders and d.spiders[v].color in (Color.Z, Color.X)


def fusion_applies(d: ZxDiagram, a: int, b: int) -> bool:
    return (a != b and _is_zx(d, a) and _is_zx(d, b)
            and d.spiders[a].color is d.spiders[b].color and d.wire_counts(a, b)[PLAIN] > 0)


def rule_fusion(d: ZxDiagram, a: int, b: int) -> ZxDiagram:
    """Merge ``b`` into ``a`` along one plain wire; extra a-b wires become self-loops."""
    if not fusion_applies(d, a, b):
        raise RuleNotApplicable(f"fusion({a}, {b})")
    d.remove_wire(a, b, PLAIN)
    sa = d.spiders[a]
    sa.phase = (sa.phase + d.spiders[b].phase) % 4
    for u, (plain, had) in list(d.adj[b].items()):
        target = a if u == b else u
        if plain:
            d.add_wire(a, target, PLAIN, plain)
        if had:
            d.add_wire(a, target, HADAMARD, had)
    d.remove_spider(b)
    return d


def self_loop_applies(d: ZxDiagram, v: int) -> bool:
    return _is_zx(d, v) and any(d.self_loops(v))


def rule_self_loop(d: ZxDiagram, v: int) -> ZxDiagram:
    """Drop plain self-loops; each Hadamard self-loop adds pi."""
    if not self_loop_applies(d, v):
        raise RuleNotApplicable(f"self_loop({v})")
    plain, had = d.self_loops(v)
    s = d.spiders[v]
    s.phase = (s.phase + 2 * had) % 4
    del d.adj[v][v]
    return d


def copy_applies(d: ZxDiagram, leaf: int, hub: int) -> bool:
    if not (_is_zx(d, leaf) and _is_zx(d, hub)) or leaf == hub:
        return False
    sl, sh = d.spiders[leaf], d.spiders[hub]
    return (sl.color is not sh.color and sl.phase in (0, 2) and d.degree(leaf) == 1
            and d.wire_counts(leaf, hub) == (1, 0) and not any(d.self_loops(hub)))


def rule_copy(d: ZxDiagram, leaf: int, hub: int) -> ZxDiagram:
    """Push a Pauli-phase leaf through a hub of the other colour."""
    if not copy_applies(d, leaf, hub):
        raise RuleNotApplicable(f"copy({leaf}, {hub})")
    sl = d.spiders[leaf]
    others = [(u, t) for u, t in d.ends(hub) if u != leaf]
    d.remove_spider(leaf)
    d.remove_spider(hub)
    for u, t in others:
        new = d.add_spider(sl.color, sl.phase, sl.site, sl.time)
        d.add_wire(new, u, t)
    return d


def hopf_applies(d: ZxDiagram, a: int, b: int) -> bool:
    if a == b or not (_is_zx(d, a) and _is_zx(d, b)):
        return False
    plain, had = d.wire_counts(a, b)
    if d.spiders[a].color is d.spiders[b].color:
        return had >= 2
    return plain >= 2


def rule_hopf(d: ZxDiagram, a: int, b: int) -> ZxDiagram:
    """Remove a pair of parallel wires: plain between opposite colours, Hadamard between equal ones."""
    if not hopf_applies(d, a, b):
        raise RuleNotApplicable(f"hopf({a}, {b})")
    same = d.spiders[a].color is d.spiders[b].color
    d.remove_wire(a, b, HADAMARD if same else PLAIN, 2)
    return d


def identity_applies(d: ZxDiagram, v: int) -> bool:
    return (_is_zx(d, v) and d.spiders[v].phase == 0 and d.degree(v) == 2
            and not any(d.self_loops(v)))


def rule_identity(d: ZxDiagram, v: int) -> ZxDiagram:
    """Remove a phase-0 two-legged spider; the new wire is Hadamard iff exactly one old one was."""
    if not identity_applies(d, v):
        raise RuleNotApplicable(f"identity({v})")
    _splice_out(d, v)
    return d


def _identity_towards(d: ZxDiagram, v: int, _neighbor: int) -> ZxDiagram:
    # the neighbour only positions the event
    return rule_identity(d, v)


def _color_change_all(d: ZxDiagram) -> None:
    x_spiders = {v for v, s in d.spiders.items() if s.color is Color.X}
    if not x_spiders:
        return
    for a, nbrs in d.adj.items():
        for b, entry in nbrs.items():
            if b < a:
                continue
            if ((a in x_spiders) + (b in x_spiders)) % 2:
                entry[0], entry[1] = entry[1], entry[0]
    for v in x_spiders:
        d.spiders[v].color = Color.Z


def is_graph_like(d: ZxDiagram) -> bool:
    for v, s in d.spiders.items():
        if s.color is Color.X or any(d.self_loops(v)):
            return False
        for u in d.neighbors(v):
            plain, had = d.wire_counts(v, u)
            if plain + had > 1:
                return False
            if not s.is_boundary and not d.is_boundary(u) and plain:
                return False
    return True


class Telemetry:
    """Collects rewrite events; distances are taken before the rewrite runs."""

    def __init__(self, d: ZxDiagram, enabled: bool = True):
        self.d = d
        self.enabled = enabled
        self.step = 0
        self.events: List[RewriteEvent] = []
        self.counts: Dict[str, int] = {}

    def apply(self, rule: str, fn, *ids: int) -> None:
        dist = self.d.distance(ids[0], ids[1]) if len(ids) > 1 else 0.0
        fn(self.d, *ids)
        self.counts[rule] = self.counts.get(rule, 0) + 1
        if self.enabled:
            self.events.append(RewriteEvent(rule, self.step, dist, tuple(ids)))


def _interior_zs(d: ZxDiagram, a: int, b: int) -> bool:
    return (a != b and a in d.spiders and b in d.spiders
            and d.spiders[a].color is Color.Z and d.spiders[b].color is Color.Z)


def _normalize(d: ZxDiagram, tel: Telemetry) -> int:
    """Fuse plain Z-Z wires, resolve self-loops, cancel parallel Hadamard pairs."""
    fired = 0
    changed = True
    while changed:
        changed = False
        for v in sorted(d.spiders):
            if v not in d.spiders or d.spiders[v].color is not Color.Z:
                continue
            while True:
                partner = next((u for u in d.neighbors(v)
                                if _interior_zs(d, v, u) and d.wire_counts(v, u)[PLAIN]), None)
                if partner is None:
                    break
                tel.apply("fusion", rule_fusion, v, partner)
                changed = True
                fired += 1
            if self_loop_applies(d, v):
                tel.apply("self_loop", rule_self_loop, v)
                changed = True
                fired += 1
            for u in d.neighbors(v):
                if u > v and _interior_zs(d, v, u) and d.wire_counts(v, u)[HADAMARD] >= 2:
                    while d.wire_counts(v, u)[HADAMARD] >= 2:
                        tel.apply("parallel_hadamard", rule_hopf, v, u)
                        fired += 1
                    changed = True
    return fired


def to_graph_like(d: ZxDiagram, telemetry: Optional[Telemetry] = None) -> ZxDiagram:
    """Rewrite into graph-like form: only Z spiders, Hadamard internal wires, simple graph."""
    tel = telemetry or Telemetry(d, enabled=False)
    _color_change_all(d)
    _normalize(d, tel)
    return d


def _has_only_hadamard_wires(d: ZxDiagram, v: int) -> bool:
    for u, (plain, had) in d.adj[v].items():
        if u == v or had > 1:
            return False
        if plain and not d.is_boundary(u):
            return False
        if plain + had > 1:
            return False
    return True


def local_complement_applies(d: ZxDiagram, s: int) -> bool:
    if s not in d.spiders:
        return False
    sp = d.spiders[s]
    if sp.color is not Color.Z or sp.phase not in (1, 3) or not _has_only_hadamard_wires(d, s):
        return False
    return all(d.spiders[u].color is Color.Z for u in d.neighbors(s))


def rule_local_complement(d: ZxDiagram, s: int) -> ZxDiagram:
    """Delete a +-pi/2 spider and complement its neighbourhood."""
    if not local_complement_applies(d, s):
        raise RuleNotApplicable(f"local_complement({s})")
    nbrs = d.neighbors(s)
    phase = d.spiders[s].phase
    d.remove_spider(s)
    for i, a in enumerate(nbrs):
        for b in nbrs[i + 1:]:
            d.toggle_hadamard(a, b)
        d.spiders[a].phase = (d.spiders[a].phase - phase) % 4
    return d


def _boundary_neighbors(d: ZxDiagram, v: int) -> List[int]:
    return [u for u in d.neighbors(v) if d.is_boundary(u)]


def pivot_applies(d: ZxDiagram, s: int, t: int) -> bool:
    if not _interior_zs(d, s, t):
        return False
    if d.wire_counts(s, t) != (0, 1):
        return False
    for v in (s, t):
        if d.spiders[v].phase not in (0, 2) or any(d.self_loops(v)):
            return False
        for u, (plain, had) in d.adj[v].items():
            if plain + had != 1 or d.spiders[u].color is Color.X:
                return False
            if plain and not d.is_boundary(u):
                return False
    return len(_boundary_neighbors(d, s)) + len(_boundary_neighbors(d, t)) <= 1


def rule_pivot(d: ZxDiagram, s: int, t: int) -> ZxDiagram:
    """Pivot along the Hadamard wire s-t and delete both spiders.

    With neighbour classes A (only s), B (only t) and C (both): edges are
    toggled across A x B, A x C and B x C; A gains phase(t), B gains
    phase(s) and C gains pi + phase(s) + phase(t). A boundary neighbour is
    first moved behind a fresh phase-0 spider so that s and t are interior.
    """
    if not pivot_applies(d, s, t):
        raise RuleNotApplicable(f"pivot({s}, {t})")
    for v in (s, t):
        for bnd in _boundary_neighbors(d, v):
            etype = PLAIN if d.wire_counts(v, bnd)[PLAIN] else HADAMARD
            d.remove_wire(v, bnd, etype)
            sv = d.spiders[v]
            dummy = d.add_spider(Color.Z, 0, sv.site, sv.time)
            d.add_wire(v, dummy, HADAMARD)
            d.add_wire(dummy, bnd, etype ^ 1)

    ns = set(d.neighbors(s)) - {t}
    nt = set(d.neighbors(t)) - {s}
    shared = sorted(ns & nt)
    only_s, only_t = sorted(ns - nt), sorted(nt - ns)
    ps, pt = d.spiders[s].phase, d.spiders[t].phase
    for group_a, group_b in ((only_s, only_t), (only_s, shared), (only_t, shared)):
        for a in group_a:
            for b in group_b:
                d.toggle_hadamard(a, b)
    for v, delta in [(u, pt) for u in only_s] + [(u, ps) for u in only_t] + [(u, 2 + ps + pt) for u in shared]:
        d.spiders[v].phase = (d.spiders[v].phase + delta) % 4
    d.remove_spider(s)
    d.remove_spider(t)
    return d


def _drop_scalars(d: ZxDiagram) -> int:
    isolated = [v for v, s in d.spiders.items() if not s.is_boundary and not d.adj[v]]
    for v in isolated:
        d.remove_spider(v)
    return len(isolated)


# simplifiers

def _closed_neighborhood(d: ZxDiagram, *ids: int) -> Set[int]:
    out = set(ids)
    for v in ids:
        out.update(d.neighbors(v))
    return out


def _identity_matches(d: ZxDiagram) -> List[Tuple[int, ...]]:
    return [(v, min(u for u, _ in d.ends(v))) for v in sorted(d.spiders)
            if d.spiders[v].color is Color.Z and identity_applies(d, v)]


def _local_complement_matches(d: ZxDiagram) -> List[Tuple[int, ...]]:
    return [(v,) for v in sorted(d.spiders) if local_complement_applies(d, v)]


def _pivot_matches(d: ZxDiagram) -> List[Tuple[int, ...]]:
    out = []
    for s in sorted(d.spiders):
        t = next((u for u in d.neighbors(s) if u > s and pivot_applies(d, s, u)), None)
        if t is not None:
            out.append((s, t))
    return out


CLIFFORD_RULES = (
    ("identity", _identity_matches, _identity_towards, lambda d, v, _nbr: identity_applies(d, v)),
    ("local_complement", _local_complement_matches, rule_local_complement, local_complement_applies),
    ("pivot", _pivot_matches, rule_pivot, pivot_applies),
)


def _rule_round(d: ZxDiagram, tel: Telemetry, rule: str, find, fn, applies) -> int:
    """One step: ``rule`` at every match whose closed neighbourhood is untouched so far."""
    touched: Set[int] = set()
    picked = []
    for ids in find(d):
        hood = _closed_neighborhood(d, *ids)
        if hood & touched:
            continue
        touched |= hood
        picked.append(ids)
    if not picked:
        return 0
    tel.step += 1
    fired = 0
    for ids in picked:
        if applies(d, *ids):
            tel.apply(rule, fn, *ids)
            fired += 1
    _drop_scalars(d)
    tel.step += 1
    if not _normalize(d, tel):
        tel.step -= 1
    return fired


def clifford_simplify(d: ZxDiagram, telemetry: bool = True) -> Tuple[ZxDiagram, List[RewriteEvent]]:
    """Graph-like conversion, then identity / LC / pivot rounds until nothing fires.

    Each step applies a single rule at all non-overlapping locations (ascending
    spider id); a rule is repeated until it has no match before the next rule
    runs. The normalization after a round (fusing the plain wires it leaves)
    is a step of its own. Step 0 is the initial conversion.
    """
    tel = Telemetry(d, telemetry)
    start = d.n_spiders
    to_graph_like(d, tel)
    while True:
        fired = 0
        for rule, find, fn, applies in CLIFFORD_RULES:
            while True:
                n = _rule_round(d, tel, rule, find, fn, applies)
                if not n:
                    break
                fired += n
        if not fired:
            break
    logger.debug(f"Clifford simplification: {start} -> {d.n_spiders} spiders in {tel.step} steps, "
                 f"rules {tel.counts}")
    return d, tel.events


def local_simplify(d: ZxDiagram, telemetry: bool = True) -> Tuple[ZxDiagram, List[RewriteEvent]]:
    """Two-colour simplification with identity, self-loop, fusion, Hopf and copy rules."""
    tel = Telemetry(d, telemetry)
    while True:
        tel.step += 1
        fired = 0
        for v in sorted(d.spiders):
            if identity_applies(d, v):
                nbr = min(u for u, _ in d.ends(v))
                tel.apply("identity", _identity_towards, v, nbr)
                fired += 1
        for v in sorted(d.spiders):
            if v not in d.spiders:
                continue
            while True:
                partner = next((u for u in d.neighbors(v) if fusion_applies(d, v, u)), None)
                if partner is None:
                    break
                tel.apply("fusion", rule_fusion, v, partner)
                fired += 1
            if self_loop_applies(d, v):
                tel.apply("self_loop", rule_self_loop, v)
                fired += 1
        for a in sorted(d.spiders):
            if a not in d.spiders:
                continue
            for b in d.neighbors(a):
                while b > a and hopf_applies(d, a, b):
                    tel.apply("hopf", rule_hopf, a, b)
                    fired += 1
        for leaf in sorted(d.spiders):
            if leaf not in d.spiders or d.degree(leaf) != 1:
                continue
            hub = d.neighbors(leaf)[0] if d.neighbors(leaf) else None
            if hub is not None and copy_applies(d, leaf, hub):
                tel.apply("copy", rule_copy, leaf, hub)
                fired += 1
        _drop_scalars(d)
        if not fired:
            break
    return d, tel.events


# telemetry

def sample_rewrite_events(params: ModelParams) -> List[RewriteEvent]:
    """Clifford-simplify one sampled operator diagram and return its event log."""
    d = diagram_from_circuit(sample_circuit(params))
    _, events = clifford_simplify(d)
    return events


@dataclass
class DistanceStats:
    per_step: pd.DataFrame
    histogram: pd.DataFrame
    d_max: float
    window: float
    n_events: int
    fraction_beyond_n: float
    tail_slope: Optional[float] = None

    def summary(self) -> Dict[str, Any]:
        return {
            "d_max": self.d_max,
            "window": self.window,
            "n_events": self.n_events,
            "fraction_beyond_n": self.fraction_beyond_n,
            "tail_slope": self.tail_slope,
        }


def rewrite_distance_stats(events: Sequence[RewriteEvent], n_qubits: int, window: float = 0.25,
                           bin_width: float = 0.5) -> DistanceStats:
    """Mean distance per step and a histogram over the final ``window`` of steps.

    The reference scale is d_max = sqrt(N**2 + (4N)**2) = sqrt(17) N.
    """
    return distance_stats_over_runs([events], n_qubits, window, bin_width)


def distance_stats_over_runs(logs: Sequence[Sequence[RewriteEvent]], n_qubits: int, window: float = 0.25,
                             bin_width: float = 0.5) -> DistanceStats:
    """Pool several event logs; the final ``window`` is taken per log, relative to its own last step."""
    d_max = math.sqrt(17.0) * n_qubits
    frames = [events_frame(events).assign(run=i) for i, events in enumerate(logs) if events]
    if not frames:
        return DistanceStats(pd.DataFrame(columns=["step", "mean_distance", "count"]),
                             pd.DataFrame(columns=["bin_left", "bin_right", "count"]),
                             d_max, window, 0, 0.0)
    frame = pd.concat(frames, ignore_index=True)
    per_step = (frame.groupby("step")["distance"].agg(["mean", "count"]).reset_index()
                .rename(columns={"mean": "mean_distance"}))

    last = frame.groupby("run")["step"].transform("max")
    tail = frame[frame["step"] >= (1.0 - window) * last]
    distances = tail["distance"].to_numpy(float)
    top = max(d_max, float(distances.max()) if distances.size else 0.0)
    edges = np.arange(0.0, top + bin_width, bin_width)
    counts, edges = np.histogram(distances, bins=edges)
    histogram = pd.DataFrame({"bin_left": edges[:-1], "bin_right": edges[1:], "count": counts})

    beyond = float(np.mean(distances > n_qubits)) if distances.size else 0.0
    centers = 0.5 * (edges[:-1] + edges[1:])
    mask = (counts > 0) & (centers >= 1.0)
    slope = None
    if mask.sum() >= 3:
        slope = float(np.polyfit(np.log(centers[mask]), np.log(counts[mask]), 1)[0])
    return DistanceStats(per_step, histogram, d_max, window, len(frame), beyond, slope)


def events_frame(events: Sequence[RewriteEvent]) -> pd.DataFrame:
    """Event log table with columns step, rule, distance, id_a, id_b (id_b = -1 when absent)."""
    return pd.DataFrame({
        "step": [e.step for e in events],
        "rule": [e.rule for e in events],
        "distance": [e.distance for e in events],
        "id_a": [e.participants[0] for e in events],
        "id_b": [e.participants[1] if len(e.participants) > 1 else -1 for e in events],
    }, columns=["step", "rule", "distance", "id_a", "id_b"])


def diagram_stats(d: ZxDiagram) -> Dict[str, Any]:
    g = d.to_networkx()
    connected = False
    if d.inputs and d.outputs:
        reach = set()
        for v in d.inputs:
            if v not in reach:
                reach |= nx.node_connected_component(g, v)
        connected = any(v in reach for v in d.outputs)
    return {
        "n_spiders": d.n_spiders,
        "n_boundary": len(d.spiders) - d.n_spiders,
        "n_wires": d.n_wires,
        "n_hadamard": sum(1 for *_, t in d.wires() if t == HADAMARD),
        "n_components": nx.number_connected_components(g),
        "boundary_connected": connected,
        "graph_like": is_graph_like(d),
    }


# persistence

def dump_diagram(d: ZxDiagram) -> Dict[str, Any]:
    return {
        "spiders": [
            {"id": s.id, "color": s.color.value, "phase": s.phase, "site": s.site, "time": s.time,
             "boundary": list(s.boundary) if s.boundary else None}
            for s in sorted(d.spiders.values(), key=lambda s: s.id)
        ],
        "wires": [[a, b, "hadamard" if t == HADAMARD else "plain"] for a, b, t in d.wires()],
        "inputs": list(d.inputs),
        "outputs": list(d.outputs),
    }


def load_diagram(dump: Mapping[str, Any]) -> ZxDiagram:
    if not isinstance(dump, Mapping):
        raise DumpParseError("diagram dump must be a JSON object")
    for key in ("spiders", "wires", "inputs", "outputs"):
        if key not in dump:
            raise DumpParseError(f"missing field {key!r}")
    d = ZxDiagram()
    for i, s in enumerate(dump["spiders"]):
        try:
            boundary = tuple(s["boundary"]) if s.get("boundary") else None
            d.add_spider(Color(s["color"]), int(s["phase"]), float(s["site"]), float(s["time"]),
                         (boundary[0], int(boundary[1])) if boundary else None, spider_id=int(s["id"]))
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise DumpParseError(f"spiders[{i}]: {e}") from e
    for i, w in enumerate(dump["wires"]):
        try:
            a, b, kind = w
            d.add_wire(int(a), int(b), {"plain": PLAIN, "hadamard": HADAMARD}[kind])
        except (KeyError, TypeError, ValueError) as e:
            raise DumpParseError(f"wires[{i}]: {e}") from e
    for key in ("inputs", "outputs"):
        ids = [int(v) for v in dump[key]]
        missing = [v for v in ids if v not in d.spiders or not d.is_boundary(v)]
        if missing:
            raise DumpParseError(f"{key}: {missing} are not boundary spiders")
        setattr(d, key, ids)
    return d
