"""Network topologies and the nonlinear node dynamics simulated on them.

Two dynamics families are provided: a biochemical model (constant inflow,
linear decay, bilinear neighbor coupling) and a gene-regulatory model
(linear decay driven by saturating neighbor activation).  Both are
integrated with fixed-step RK4 and sampled every ``steps_per_sample``
substeps, so one trajectory tick spans ``dt * steps_per_sample`` time
units.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

BIOCHEMICAL = "biochemical"
REGULATORY = "regulatory"
_KINDS = (BIOCHEMICAL, REGULATORY)

# States beyond this magnitude are treated as numerical blow-up.
OVERFLOW_GUARD = 1e12


@dataclass(frozen=True)
class Graph:
    """Undirected, self-loop-free topology on ``n`` nodes.

    ``adjacency`` is a dense 0/1 matrix; it is validated and stored as
    float64 so it can be used directly in vectorized coupling terms.
    """

    n: int
    adjacency: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.adjacency, dtype=float)
        if self.n < 1:
            raise ValueError("graph needs at least one node")
        if a.shape != (self.n, self.n):
            raise ValueError(f"adjacency must be {self.n}x{self.n}, got {a.shape}")
        if not np.isin(a, (0.0, 1.0)).all():
            raise ValueError("adjacency entries must be 0 or 1")
        if np.diagonal(a).any():
            raise ValueError("adjacency has self-loops")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        object.__setattr__(self, "adjacency", a)

    @property
    def edge_count(self) -> int:
        return int(round(self.adjacency.sum())) // 2

    def to_dict(self) -> dict:
        return {"n": self.n, "adjacency": self.adjacency.astype(int).tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Graph":
        return cls(n=int(d["n"]), adjacency=np.asarray(d["adjacency"], dtype=float))


def generate_er_graph(n: int, p: float, seed: int | None = None) -> Graph:
    """Sample an Erdos-Renyi graph: each unordered pair is an edge with prob ``p``."""
    if n < 1:
        raise ValueError("graph needs at least one node")
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"edge probability must lie in [0, 1], got {p}")
    rng = np.random.default_rng(seed)
    a = np.zeros((n, n))
    rows, cols = np.triu_indices(n, k=1)
    a[rows, cols] = rng.random(rows.size) < p
    a += a.T
    return Graph(n=n, adjacency=a)


@dataclass(frozen=True)
class DynamicsParams:
    """Rates and integration settings for one dynamics family.

    ``adjacency_coupling=True`` restricts the interaction sum to graph
    neighbors; setting it False sums the coupling term over every node
    (including ``j == i``), which treats the interaction as all-to-all.
    """

    kind: str
    flow_in: float = 0.0
    decay: float = 1.0
    coupling: float = 1.0
    dt: float = 0.01
    steps_per_sample: int = 10
    adjacency_coupling: bool = True

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown dynamics kind {self.kind!r}")
        if self.decay <= 0:
            raise ValueError("decay rate must be positive")
        if self.coupling < 0:
            raise ValueError("coupling rate must be nonnegative")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.steps_per_sample < 1:
            raise ValueError("steps_per_sample must be at least 1")

    @classmethod
    def biochemical(cls, flow_in: float = 10.0, decay: float = 1.0,
                    coupling: float = 1.0, **kwargs) -> "DynamicsParams":
        return cls(kind=BIOCHEMICAL, flow_in=flow_in, decay=decay,
                   coupling=coupling, **kwargs)

    @classmethod
    def regulatory(cls, decay: float = 1.0, coupling: float = 1.0,
                   **kwargs) -> "DynamicsParams":
        return cls(kind=REGULATORY, flow_in=0.0, decay=decay,
                   coupling=coupling, **kwargs)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind, "flow_in": self.flow_in, "decay": self.decay,
            "coupling": self.coupling, "dt": self.dt,
            "steps_per_sample": self.steps_per_sample,
            "adjacency_coupling": self.adjacency_coupling,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DynamicsParams":
        return cls(**d)


def default_initial_range(kind: str) -> tuple[float, float]:
    """Initial-state sampling interval conventionally used with each dynamics."""
    if kind == BIOCHEMICAL:
        return (0.0, 1.0)
    if kind == REGULATORY:
        return (0.0, 100.0)
    raise ValueError(f"unknown dynamics kind {kind!r}")


def _coupling_matrix(graph: Graph, params: DynamicsParams) -> np.ndarray:
    if params.adjacency_coupling:
        return graph.adjacency
    return np.ones((graph.n, graph.n))


def _rhs(x, graph, params, cmat):
    # x may be a single state (n,) or a batch of columns (n, d)
    if params.kind == BIOCHEMICAL:
        return params.flow_in - params.decay * x - params.coupling * x * (cmat @ x)
    sat = x * x
    sat = sat / (1.0 + sat)
    return -params.decay * x + params.coupling * (cmat @ sat)


def derivative(x: np.ndarray, graph: Graph, params: DynamicsParams) -> np.ndarray:
    """Instantaneous time derivative of the node states."""
    x = np.asarray(x, dtype=float)
    if x.shape[0] != graph.n:
        raise ValueError(f"state has {x.shape[0]} entries, graph has {graph.n} nodes")
    if not np.isfinite(x).all():
        raise ValueError("state contains non-finite entries")
    return _rhs(x, graph, params, _coupling_matrix(graph, params))


@dataclass(frozen=True)
class Trajectory:
    """Sampled states, one column per tick (column 0 is the initial state)."""

    states: np.ndarray
    params: DynamicsParams | None = None
    seed: int | None = None

    def __post_init__(self):
        s = np.asarray(self.states, dtype=float)
        if s.ndim != 2:
            raise ValueError("states must be a 2-D node-by-tick array")
        if s.shape[1] < 2:
            raise ValueError("a trajectory needs at least two ticks")
        if not np.isfinite(s).all():
            raise ValueError("trajectory contains non-finite entries")
        object.__setattr__(self, "states", s)

    @property
    def n(self) -> int:
        return self.states.shape[0]

    @property
    def tau(self) -> int:
        return self.states.shape[1]


def _integrate(graph, params, x0, num_steps):
    """Fixed-step RK4 path for one state vector or a batch of columns."""
    cmat = _coupling_matrix(graph, params)
    h = params.dt
    out = np.empty((graph.n, num_steps) + x0.shape[1:])
    out[:, 0] = x0
    x = x0.astype(float, copy=True)
    # overflow on a diverging path is reported through the guard below,
    # not as a numpy warning
    with np.errstate(over="ignore", invalid="ignore"):
        for tick in range(1, num_steps):
            for _ in range(params.steps_per_sample):
                k1 = _rhs(x, graph, params, cmat)
                k2 = _rhs(x + 0.5 * h * k1, graph, params, cmat)
                k3 = _rhs(x + 0.5 * h * k2, graph, params, cmat)
                k4 = _rhs(x + h * k3, graph, params, cmat)
                x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if not np.isfinite(x).all() or np.abs(x).max() > OVERFLOW_GUARD:
                raise RuntimeError(f"simulation diverged at tick {tick}")
            out[:, tick] = x
    return out


def simulate(graph: Graph, params: DynamicsParams, x1: np.ndarray,
             num_steps: int, seed: int | None = None) -> Trajectory:
    """Integrate from initial state ``x1`` for ``num_steps`` ticks.

    ``seed`` is recorded as provenance only (the integration itself is
    deterministic); pass the seed used to draw ``x1`` when there is one.
    """
    x1 = np.asarray(x1, dtype=float)
    if x1.shape != (graph.n,):
        raise ValueError(f"initial state must have shape ({graph.n},)")
    if not np.isfinite(x1).all():
        raise ValueError("initial state contains non-finite entries")
    if num_steps < 2:
        raise ValueError("num_steps must be at least 2")
    states = _integrate(graph, params, x1, num_steps)
    return Trajectory(states=states, params=params, seed=seed)


def simulate_ensemble(graph: Graph, params: DynamicsParams, x1s: np.ndarray,
                      num_steps: int, seed: int | None = None) -> list[Trajectory]:
    """Integrate a batch of initial states (columns of ``x1s``) in one sweep."""
    x1s = np.asarray(x1s, dtype=float)
    if x1s.ndim != 2 or x1s.shape[0] != graph.n:
        raise ValueError(f"x1s must be ({graph.n}, d)")
    if num_steps < 2:
        raise ValueError("num_steps must be at least 2")
    paths = _integrate(graph, params, x1s, num_steps)
    return [Trajectory(states=paths[:, :, d], params=params, seed=seed)
            for d in range(x1s.shape[1])]


def random_initial_state(n: int, low: float, high: float,
                         seed: int | None = None) -> np.ndarray:
    """Uniform initial state on (low, high)."""
    if not low < high:
        raise ValueError("need low < high")
    rng = np.random.default_rng(seed)
    return rng.uniform(low, high, n)


def random_initial_states(n: int, d: int, low: float, high: float,
                          seed: int | None = None) -> np.ndarray:
    """Uniform (n, d) batch of initial states."""
    if not low < high:
        raise ValueError("need low < high")
    if d < 1:
        raise ValueError("need at least one column")
    rng = np.random.default_rng(seed)
    return rng.uniform(low, high, (n, d))


# ---------------------------------------------------------------------------
# On-disk formats: flat CSV for states, JSON bundle for full provenance.

def trajectory_to_csv(trajectory: Trajectory, path: str | Path) -> Path:
    """Write ``t,x_1,...,x_N`` rows, one per tick (t counts from 1)."""
    path = Path(path)
    n = trajectory.n
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x_{i + 1}" for i in range(n)])
        for t in range(trajectory.tau):
            writer.writerow([t + 1] + [repr(float(v))
                                       for v in trajectory.states[:, t]])
    return path


def trajectory_from_csv(path: str | Path,
                        params: DynamicsParams | None = None) -> Trajectory:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "t":
            raise ValueError(f"{path}: expected a 't,x_1,...' header")
        rows = [list(map(float, row[1:])) for row in reader if row]
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return Trajectory(states=np.asarray(rows).T, params=params)


def save_bundle(path: str | Path, graph: Graph, params: DynamicsParams,
                trajectory: Trajectory, seed: int | None = None) -> Path:
    """JSON bundle carrying the graph, the rates, and the sampled states."""
    path = Path(path)
    payload = {
        "graph": graph.to_dict(),
        "params": params.to_dict(),
        "seed": seed if seed is not None else trajectory.seed,
        "states": trajectory.states.tolist(),
    }
    path.write_text(json.dumps(payload))
    return path


def load_bundle(path: str | Path) -> tuple[Graph, DynamicsParams, Trajectory]:
    payload = json.loads(Path(path).read_text())
    graph = Graph.from_dict(payload["graph"])
    params = DynamicsParams.from_dict(payload["params"])
    trajectory = Trajectory(states=np.asarray(payload["states"], dtype=float),
                            params=params, seed=payload.get("seed"))
    return graph, params, trajectory
