"""Greedy sensor-node selection on the stacked evolution operator.

Sampling a node set S makes observable exactly the dictionary entries whose
owner nodes all lie in S (the constant entry is always available).  Those
entries, read at every tick, select rows of the stacked operator powers; the
conditioning of that row submatrix - the ratio of its largest singular value
to its N-th - scores how well the initial state can be recovered from the
samples.  Nodes are added greedily until the score clears a threshold or a
sensor budget is exhausted.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .koopman import EvolutionStack
from .observables import ObservableSpec

# Singular values below RANK_TOL (resp. SCORE_TOL) times the largest are
# treated as zero when checking rank (resp. scoring a candidate set).
RANK_TOL = 1e-10
SCORE_TOL = 1e-12


@dataclass(frozen=True)
class SelectionConfig:
    """Stopping rules for the greedy search.

    ``gamma`` is the target score (quotient of extreme singular values,
    always >= 1); ``None`` disables that stop so selection runs to the node
    budget.  ``max_nodes`` defaults to every node.
    """

    gamma: float | None = 1e6
    max_nodes: int | None = None

    def __post_init__(self):
        if self.gamma is not None and self.gamma < 1.0:
            raise ValueError("gamma is a singular-value quotient; it cannot be < 1")
        if self.max_nodes is not None and self.max_nodes < 1:
            raise ValueError("max_nodes must be at least 1")


@dataclass(frozen=True)
class SamplingPlan:
    """A chosen node set and the stacked rows it makes observable."""

    nodes: tuple[int, ...]
    observable_indices: np.ndarray   # sorted dictionary rows readable from nodes
    row_indices: np.ndarray          # rows of the stacked system, time-major
    tau: int
    score: float = math.inf
    rank_deficient: bool = False
    score_trace: tuple[float, ...] = ()

    @property
    def sample_count(self) -> int:
        return int(self.row_indices.size)


def gamma_map(nodes, spec: ObservableSpec, tau: int) -> SamplingPlan:
    """Map a node set to its observable dictionary rows and stacked-row indices.

    Row indices are time-major: all selected entries at tick 1, then tick 2,
    and so on, each tick's entries in ascending dictionary order.
    """
    if tau < 1:
        raise ValueError("tau must be at least 1")
    node_list = [int(v) for v in nodes]
    if len(set(node_list)) != len(node_list):
        raise ValueError("duplicate nodes in sampling set")
    for v in node_list:
        if not 0 <= v < spec.n:
            raise ValueError(f"node {v} outside 0..{spec.n - 1}")
    node_set = set(node_list)
    obs = np.array([m for m, term in enumerate(spec.terms)
                    if set(term.owners) <= node_set], dtype=int)
    m = spec.size
    rows = (np.arange(tau)[:, None] * m + obs[None, :]).ravel() if obs.size \
        else np.empty(0, dtype=int)
    return SamplingPlan(nodes=tuple(node_list), observable_indices=obs,
                        row_indices=rows, tau=tau)


def selected_rows(plan: SamplingPlan, theta: EvolutionStack) -> np.ndarray:
    """The row submatrix of the stacked operator powers that the plan samples."""
    if plan.tau != theta.tau:
        raise ValueError("plan and evolution stack disagree on tau")
    return theta.theta[plan.row_indices]


def sigma_quotient(matrix: np.ndarray, k: int,
                   tol: float = SCORE_TOL) -> tuple[float, float]:
    """Return ``(sigma_1 / sigma_k, sigma_k)`` of ``matrix``.

    The quotient is +inf when the matrix has fewer than ``k`` rows or when
    ``sigma_k`` falls below ``tol * sigma_1``.
    """
    if matrix.shape[0] < k:
        return math.inf, 0.0
    svals = np.linalg.svd(matrix, compute_uv=False)
    if svals.size < k or svals[0] <= 0.0:
        return math.inf, 0.0
    sk = float(svals[k - 1])
    if sk <= tol * svals[0]:
        return math.inf, sk
    return float(svals[0] / sk), sk


def selection_score(nodes, theta: EvolutionStack, spec: ObservableSpec) -> float:
    """Conditioning score of a node set: sigma_1/sigma_N of its sampled rows."""
    plan = gamma_map(nodes, spec, theta.tau)
    score, _ = sigma_quotient(selected_rows(plan, theta), spec.n)
    return score


def greedy_select(theta: EvolutionStack, spec: ObservableSpec,
                  config: SelectionConfig | None = None) -> SamplingPlan:
    """Grow a node set one node at a time, always taking the candidate with the
    best (lowest) score; among candidates with infinite score the one with the
    largest N-th singular value wins.  Ties go to the lowest node index.

    Stops when the score reaches ``config.gamma`` or the node budget is hit.
    The returned plan is flagged ``rank_deficient`` when no finite score was
    reached within the budget.
    """
    config = config or SelectionConfig()
    n = spec.n
    budget = min(config.max_nodes or n, n)
    selected: list[int] = []
    trace: list[float] = []
    current_score = math.inf
    while len(selected) < budget:
        best_key = None
        best_node = -1
        for cand in range(n):
            if cand in selected:
                continue
            plan = gamma_map(selected + [cand], spec, theta.tau)
            score, sigma_n = sigma_quotient(selected_rows(plan, theta), n)
            key = (score, -sigma_n, cand)
            if best_key is None or key < best_key:
                best_key, best_node = key, cand
        selected.append(best_node)
        current_score = best_key[0]
        trace.append(current_score)
        if config.gamma is not None and current_score <= config.gamma:
            break
    plan = gamma_map(selected, spec, theta.tau)
    return replace(plan, score=current_score,
                   rank_deficient=not math.isfinite(current_score),
                   score_trace=tuple(trace))


def verify_rank(plan: SamplingPlan, theta: EvolutionStack,
                spec: ObservableSpec) -> bool:
    """True when the sampled rows have numerical rank N.

    The row-count necessary condition is checked before any factorization.
    """
    if plan.row_indices.size < spec.n:
        return False
    svals = np.linalg.svd(selected_rows(plan, theta), compute_uv=False)
    if svals.size == 0 or svals[0] <= 0.0:
        return False
    # rank at least N determines the state; with M > N observables the rows
    # routinely carry more than N independent directions, which is harmless
    return int((svals > RANK_TOL * svals[0]).sum()) >= spec.n


# ---------------------------------------------------------------------------
# Serialization

def plan_to_dict(plan: SamplingPlan) -> dict:
    return {
        "nodes": list(plan.nodes),
        "observable_indices": plan.observable_indices.tolist(),
        "row_indices": plan.row_indices.tolist(),
        "tau": plan.tau,
        "score": plan.score if math.isfinite(plan.score) else None,
        "rank_deficient": plan.rank_deficient,
        "score_trace": [s if math.isfinite(s) else None for s in plan.score_trace],
    }


def plan_from_dict(d: dict) -> SamplingPlan:
    def _restore(v):
        return math.inf if v is None else float(v)

    return SamplingPlan(
        nodes=tuple(int(v) for v in d["nodes"]),
        observable_indices=np.asarray(d["observable_indices"], dtype=int),
        row_indices=np.asarray(d["row_indices"], dtype=int),
        tau=int(d["tau"]),
        score=_restore(d["score"]),
        rank_deficient=bool(d["rank_deficient"]),
        score_trace=tuple(_restore(s) for s in d["score_trace"]),
    )


def save_plan(plan: SamplingPlan, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(plan_to_dict(plan)))
    return path


def load_plan(path: str | Path) -> SamplingPlan:
    return plan_from_dict(json.loads(Path(path).read_text()))
