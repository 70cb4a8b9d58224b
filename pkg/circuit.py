"""
Random brickwork circuits: sampling, execution on the stabilizer tableau,
I2 ensembles, crossing estimates and scaling collapses.

Layout conventions:
  * bond ``b`` couples sites (b, b + 1)
  * sub-layer ``2k`` acts on bonds 0, 2, 4, ...; sub-layer ``2k + 1`` on bonds 1, 3, ...
  * one full layer is a pair of sub-layers and advances time by 1, so
    sub-layer ``l`` sits at time ``l / 2``
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from itertools import groupby
from operator import attrgetter
from typing import Any, Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

import scaling
from tableau import (InvalidArgument, StabilizerTableau, apply_cnots, apply_swaps, init_bell_pairs,
                     init_product_state, measure_bell_pair, mutual_information_I2)

logger = logging.getLogger(__name__)

# numpy stream for measurement outcomes, next to the one used for brick sampling
OUTCOME_STREAM = 1
DEFAULT_DEPTH_FACTOR = 4

__all__ = [
    "InvalidArgument", "NoCrossingError", "RecordParseError", "GateKind", "ControlSide", "InitialState",
    "Brick", "ModelParams", "BrickworkCircuit", "operation_probabilities", "sample_circuit", "run_circuit",
    "sample_I2", "realization_params", "measure_I2_ensemble", "I2Estimate", "CrossingEstimate", "find_crossing", "scaling_collapse",
]


class NoCrossingError(RuntimeError):
    """Raised when a pair of curves never crosses on the shared grid."""


class RecordParseError(ValueError):
    """Malformed circuit record; ``location`` points at the offending entry."""

    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class GateKind(str, Enum):
    CNOT = "cnot"
    SWAP = "swap"
    IDENTITY = "identity"
    BELL_MEASURE = "bell"


class ControlSide(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class InitialState(str, Enum):
    BELL_PAIRS = "bell_pairs"
    PRODUCT = "product"


GATE_ORDER = (GateKind.CNOT, GateKind.SWAP, GateKind.IDENTITY, GateKind.BELL_MEASURE)


def operation_probabilities(p, r) -> Dict[GateKind, Any]:
    """Per-brick probabilities; works with floats or ``fractions.Fraction``."""
    return {
        GateKind.CNOT: r * (1 - p),
        GateKind.SWAP: (1 - r) * (1 - p),
        GateKind.IDENTITY: p / 2,
        GateKind.BELL_MEASURE: p / 2,
    }


@dataclass(frozen=True)
class Brick:
    layer: int
    bond: int
    kind: GateKind
    control_side: Optional[ControlSide] = None

    @property
    def sites(self) -> Tuple[int, int]:
        return self.bond, self.bond + 1

    @property
    def time(self) -> float:
        return self.layer / 2

    @property
    def control_target(self) -> Tuple[int, int]:
        a, b = self.sites
        return (a, b) if self.control_side is ControlSide.LEFT else (b, a)

    def to_list(self) -> list:
        out = [self.layer, self.bond, self.kind.value]
        if self.kind is GateKind.CNOT:
            out.append(self.control_side.value)
        return out


@dataclass
class ModelParams:
    p: float
    r: float
    n_qubits: int
    depth_layers: Optional[int] = None
    initial_state: str = InitialState.BELL_PAIRS.value
    seed: int = 0

    def __post_init__(self):
        for name in ("p", "r"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidArgument(f"{name}={value} is outside [0, 1]")
        if self.n_qubits < 2 or self.n_qubits % 2:
            raise InvalidArgument(f"n_qubits must be even and >= 2, got {self.n_qubits}")
        if self.depth_layers is None:
            self.depth_layers = DEFAULT_DEPTH_FACTOR * self.n_qubits
        if self.depth_layers < 1:
            raise InvalidArgument(f"depth_layers must be positive, got {self.depth_layers}")
        try:
            InitialState(self.initial_state)
        except ValueError:
            raise InvalidArgument(f"unknown initial_state {self.initial_state!r}") from None

    def with_seed(self, seed: int) -> "ModelParams":
        return ModelParams(self.p, self.r, self.n_qubits, self.depth_layers, self.initial_state, int(seed))


def bonds_in_layer(n_qubits: int, layer: int) -> range:
    return range(layer % 2, n_qubits - 1, 2)


@dataclass
class BrickworkCircuit:
    n_qubits: int
    depth_layers: int
    bricks: List[Brick] = field(default_factory=list)
    seed: int = 0
    initial_state: str = InitialState.BELL_PAIRS.value

    @property
    def n_sublayers(self) -> int:
        return 2 * self.depth_layers

    @property
    def final_time(self) -> float:
        return float(self.depth_layers)

    def bricks_in_layer(self, layer: int) -> List[Brick]:
        return [b for b in self.bricks if b.layer == layer]

    def kind_counts(self) -> Dict[GateKind, int]:
        counts = {k: 0 for k in GateKind}
        for b in self.bricks:
            counts[b.kind] += 1
        return counts

    def to_record(self) -> Dict[str, Any]:
        return {
            "n_qubits": self.n_qubits,
            "depth": self.depth_layers,
            "seed": self.seed,
            "initial_state": self.initial_state,
            "bricks": [b.to_list() for b in self.bricks],
        }

    @classmethod
    def from_record(cls, record: Mapping[str, Any]) -> "BrickworkCircuit":
        """Parse and validate a circuit record (the JSON contract)."""
        if not isinstance(record, Mapping):
            raise RecordParseError("record must be a JSON object")
        for key in ("n_qubits", "depth", "bricks"):
            if key not in record:
                raise RecordParseError(f"missing field {key!r}", key)
        n, depth = record["n_qubits"], record["depth"]
        if not isinstance(n, int) or n < 2 or n % 2:
            raise RecordParseError(f"n_qubits must be an even integer >= 2, got {n!r}", "n_qubits")
        if not isinstance(depth, int) or depth < 1:
            raise RecordParseError(f"depth must be a positive integer, got {depth!r}", "depth")
        initial = record.get("initial_state", InitialState.BELL_PAIRS.value)
        if initial not in {s.value for s in InitialState}:
            raise RecordParseError(f"unknown initial_state {initial!r}", "initial_state")

        bricks = []
        seen = set()
        for i, entry in enumerate(record["bricks"]):
            where = f"bricks[{i}]"
            if not isinstance(entry, (list, tuple)) or len(entry) not in (3, 4):
                raise RecordParseError("expected [layer, bond, kind, control_side?]", where)
            layer, bond, kind = entry[:3]
            if not isinstance(layer, int) or not 0 <= layer < 2 * depth:
                raise RecordParseError(f"layer {layer!r} out of range", where)
            if not isinstance(bond, int) or bond not in bonds_in_layer(n, layer):
                raise RecordParseError(f"bond {bond!r} is not active in layer {layer}", where)
            if (layer, bond) in seen:
                raise RecordParseError(f"duplicate brick at layer {layer}, bond {bond}", where)
            seen.add((layer, bond))
            try:
                kind = GateKind(kind)
            except ValueError:
                raise RecordParseError(f"unknown gate kind {kind!r}", where) from None
            side = None
            if kind is GateKind.CNOT:
                if len(entry) != 4:
                    raise RecordParseError("CNOT needs a control side", where)
                try:
                    side = ControlSide(entry[3])
                except ValueError:
                    raise RecordParseError(f"unknown control side {entry[3]!r}", where) from None
            bricks.append(Brick(layer, bond, kind, side))
        bricks.sort(key=lambda b: (b.layer, b.bond))
        return cls(n, depth, bricks, int(record.get("seed", 0)), initial)

    @classmethod
    def uniform(cls, n_qubits: int, depth_layers: int, kind: GateKind,
                control_side: ControlSide = ControlSide.LEFT, **kwargs) -> "BrickworkCircuit":
        """Circuit with every brick of the same kind (handy for tests)."""
        bricks = [Brick(l, b, kind, control_side if kind is GateKind.CNOT else None)
                  for l in range(2 * depth_layers) for b in bonds_in_layer(n_qubits, l)]
        return cls(n_qubits, depth_layers, bricks, **kwargs)


def sample_circuit(params: ModelParams) -> BrickworkCircuit:
    """Draw every brick i.i.d. from the operation table, reproducibly from ``params.seed``."""
    rng = np.random.default_rng(params.seed)
    n = params.n_qubits
    slots = [(l, b) for l in range(2 * params.depth_layers) for b in bonds_in_layer(n, l)]
    probs = operation_probabilities(params.p, params.r)
    cumulative = np.cumsum([probs[k] for k in GATE_ORDER])
    draws = rng.random(len(slots))
    sides = rng.integers(0, 2, size=len(slots))
    kinds = np.minimum(np.searchsorted(cumulative, draws, side="right"), len(GATE_ORDER) - 1)

    bricks = []
    for (layer, bond), k, s in zip(slots, kinds, sides):
        kind = GATE_ORDER[k]
        side = (ControlSide.LEFT if s == 0 else ControlSide.RIGHT) if kind is GateKind.CNOT else None
        bricks.append(Brick(layer, bond, kind, side))
    return BrickworkCircuit(n, params.depth_layers, bricks, params.seed, params.initial_state)


def initial_tableau(n_qubits: int, initial_state: str) -> StabilizerTableau:
    if InitialState(initial_state) is InitialState.BELL_PAIRS:
        return init_bell_pairs(n_qubits)
    return init_product_state(n_qubits)


def run_circuit(c: BrickworkCircuit, params: Optional[ModelParams] = None,
                rng: Optional[np.random.Generator] = None) -> StabilizerTableau:
    """Evolve the initial state through every brick, layer by layer, left to right.

    ``params`` may override the initial state; measurement outcomes come from
    ``rng`` or, by default, a stream derived from the circuit seed.
    """
    if params is not None and params.n_qubits != c.n_qubits:
        raise InvalidArgument(f"params describe N={params.n_qubits}, circuit has N={c.n_qubits}")
    initial = params.initial_state if params is not None else c.initial_state
    if rng is None:
        rng = np.random.default_rng([c.seed, OUTCOME_STREAM])
    t = initial_tableau(c.n_qubits, initial)
    for _, layer in groupby(sorted(c.bricks, key=attrgetter("layer")), key=attrgetter("layer")):
        cnots, swaps, bells = [], [], []
        for brick in layer:
            if brick.kind is GateKind.CNOT:
                cnots.append(brick.control_target)
            elif brick.kind is GateKind.SWAP:
                swaps.append(brick.sites)
            elif brick.kind is GateKind.BELL_MEASURE:
                bells.append(brick.sites)
        # bricks of one sub-layer act on disjoint sites
        if cnots:
            apply_cnots(t, *zip(*cnots))
        if swaps:
            apply_swaps(t, *zip(*swaps))
        for a, b in bells:
            measure_bell_pair(t, a, b, rng)
    return t


def sample_I2(params: ModelParams) -> int:
    """One realization: sample, run, return I2. Top-level so worker pools can pickle it."""
    value = mutual_information_I2(run_circuit(sample_circuit(params), params))
    if value < 0:
        logger.error(f"Negative I2={value} for p={params.p} r={params.r} N={params.n_qubits} seed={params.seed}")
    return value


@dataclass(frozen=True)
class I2Estimate:
    mean: float
    stderr: float
    n_realizations: int


def realization_params(params: ModelParams, n_realizations: int, rng: np.random.Generator) -> List[ModelParams]:
    seeds = rng.integers(0, 2 ** 63 - 1, size=n_realizations, dtype=np.int64)
    return [params.with_seed(int(s)) for s in seeds]


def measure_I2_ensemble(params: ModelParams, n_realizations: int, rng: np.random.Generator,
                        runner: Callable = map) -> I2Estimate:
    """Mean and standard error of I2 over independent seeded realizations.

    ``runner`` is a map-like callable (``map`` or a pool's ordered map).
    """
    if n_realizations <= 1:
        raise InvalidArgument(f"need at least 2 realizations, got {n_realizations}")
    if params.n_qubits % 6:
        raise InvalidArgument(f"I2 ensembles need N divisible by 6, got {params.n_qubits}")
    values = np.fromiter(runner(sample_I2, realization_params(params, n_realizations, rng)), dtype=float)
    return I2Estimate(float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size)), values.size)


@dataclass
class CrossingEstimate:
    x: float
    error: float
    pairs: List[Tuple[int, int, float, float]]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "crossing": self.x,
            "error": self.error,
            "pairs": [{"n_small": a, "n_large": b, "crossing": x, "error": e} for a, b, x, e in self.pairs],
        }


def _as_curve(data) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    if isinstance(data, pd.DataFrame):
        x, y = data["x"].to_numpy(float), data["y"].to_numpy(float)
        err = data["err"].to_numpy(float) if "err" in data else np.zeros_like(y)
    else:
        x, y = np.asarray(data[0], float), np.asarray(data[1], float)
        err = np.asarray(data[2], float) if len(data) > 2 else np.zeros_like(y)
    order = np.argsort(x)
    return x[order], y[order], err[order]


def _pair_crossing(small, large, label: str) -> Tuple[float, float]:
    xs, ys, es = small
    xl, yl, el = large
    grid, i_s, i_l = np.intersect1d(xs, xl, return_indices=True)
    if grid.size < 2:
        raise NoCrossingError(f"{label}: fewer than two shared grid points")
    diff = ys[i_s] - yl[i_l]
    diff_err = np.hypot(es[i_s], el[i_l])
    if np.all(diff == 0):
        raise NoCrossingError(f"{label}: curves coincide on the whole grid")

    candidates = []
    for i in range(grid.size - 1):
        d0, d1 = diff[i], diff[i + 1]
        if d0 == 0 or d0 * d1 < 0:
            dx = grid[i + 1] - grid[i]
            slope = (d1 - d0) / dx
            if slope == 0:
                continue
            frac = 0.0 if d0 == 0 else d0 / (d0 - d1)
            x = grid[i] + frac * dx
            err = np.hypot((1 - frac) * diff_err[i], frac * diff_err[i + 1]) / abs(slope)
            candidates.append((abs(slope), x, err))
    if diff[-1] == 0 and diff[-2] != 0:
        slope = (diff[-1] - diff[-2]) / (grid[-1] - grid[-2])
        candidates.append((abs(slope), grid[-1], diff_err[-1] / abs(slope)))
    if not candidates:
        raise NoCrossingError(f"{label}: curves never cross on the grid")
    if len(candidates) > 1:
        logger.debug(f"{label}: {len(candidates)} sign changes, keeping the steepest")
    _, x, err = max(candidates, key=lambda c: c[0])
    return float(x), float(err)


def find_crossing(curves: Mapping[int, Any]) -> CrossingEstimate:
    """Inverse-variance weighted crossing of successive-N curve pairs.

    ``curves`` maps N to either a DataFrame with columns x, y[, err] or an
    ``(x, y[, err])`` tuple.
    """
    sizes = sorted(curves)
    if len(sizes) < 2:
        raise InvalidArgument("need curves for at least two sizes")
    parsed = {n: _as_curve(curves[n]) for n in sizes}
    pairs = []
    for a, b in zip(sizes, sizes[1:]):
        x, err = _pair_crossing(parsed[a], parsed[b], f"N={a} vs N={b}")
        pairs.append((a, b, x, err))

    xs = np.array([p[2] for p in pairs])
    errs = np.array([p[3] for p in pairs])
    weights = np.ones_like(xs) if np.any(errs <= 0) else 1.0 / errs ** 2
    mean = float(np.average(xs, weights=weights))
    stat = float(np.sqrt(1.0 / weights.sum())) if np.all(errs > 0) else 0.0
    spread = float(np.sqrt(np.average((xs - mean) ** 2, weights=weights)))
    return CrossingEstimate(mean, max(stat, spread), pairs)


def scaling_collapse(data: pd.DataFrame, x_c: float, exponent: float,
                     mode: str = "transition") -> Tuple[pd.DataFrame, scaling.CollapseResult]:
    """Rescale I2 curves and score the collapse.

    ``data`` has columns N, x, y. In ``transition`` mode ``exponent`` is nu
    and x becomes (x - x_c) * N**(1/nu); in ``boundary`` mode x is the
    distance delta to the boundary and becomes delta * N**d with d = exponent.
    """
    if data is None or len(data) == 0:
        raise InvalidArgument("scaling collapse needs data")
    n = data["N"].to_numpy(float)
    x = data["x"].to_numpy(float)
    if mode == "transition":
        scaled = (x - x_c) * n ** (1.0 / exponent)
    elif mode == "boundary":
        scaled = x * n ** exponent
    else:
        raise InvalidArgument(f"unknown collapse mode {mode!r}")
    frame = pd.DataFrame({"x_scaled": scaled, "y": data["y"].to_numpy(float), "N": data["N"].to_numpy(int)})
    return frame, scaling.collapse_score(frame)
