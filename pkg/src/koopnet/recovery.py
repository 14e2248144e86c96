"""Full-network recovery from node samples.

Samples are the dictionary entries owned by the chosen sensor nodes, read at
every tick of one trajectory.  The unknown initial state enters those samples
through the lift followed by the stacked linear evolution, so recovery
minimizes the squared sample mismatch over the initial state with an analytic
gradient (chain rule through the lift Jacobian) and a DFP quasi-Newton
search.  The recovered initial state is then rolled forward through the
operator powers and unlifted into a full trajectory estimate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .koopman import EvolutionStack, KoopmanModel, rollout
from .metrics import nrmse, per_tick_nrmse  # noqa: F401  (re-exported API)
from .observables import (ObservableSpec, lift, lift_jacobian,
                          lift_trajectory, unlift, unlift_trajectory)
from .optimize import MinimizeResult, minimize_dfp
from .sampling import SamplingPlan


@dataclass(frozen=True)
class OptimizerConfig:
    """Recovery solver settings.

    ``fill_value`` is the starting guess for unsampled nodes (conventionally
    the midpoint of the dynamics' initial-state range); sampled nodes always
    start from their observed first-tick values.  ``multistarts`` extra runs
    perturb the unsampled entries with Gaussian jitter of standard deviation
    ``jitter_scale * max(|fill_value|, 1)``, and one further deterministic
    start unlifts the min-norm least-squares solution of the sampled linear
    system; the run with the lowest final objective wins.
    """

    max_iterations: int = 500
    gradient_tol: float = 1e-8
    c1: float = 1e-4
    c2: float = 0.9
    multistarts: int = 3
    fill_value: float = 0.5
    jitter_scale: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.c1 < self.c2 < 1.0:
            raise ValueError("need 0 < c1 < c2 < 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.gradient_tol <= 0.0:
            raise ValueError("gradient_tol must be positive")
        if self.multistarts < 0:
            raise ValueError("multistarts must be nonnegative")


@dataclass(frozen=True)
class SampleMatrix:
    """Observed sample vector plus the plan that produced it (time-major)."""

    values: np.ndarray
    plan: SamplingPlan

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != (self.plan.row_indices.size,):
            raise ValueError("sample vector length does not match the plan")
        object.__setattr__(self, "values", v)


@dataclass(frozen=True)
class RecoveryResult:
    x1: np.ndarray
    trajectory: np.ndarray        # node-by-tick reconstruction
    objective: float
    iterations: int
    converged: bool
    objective_trace: tuple[float, ...] = ()


def take_samples(trajectory, spec: ObservableSpec, plan: SamplingPlan) -> SampleMatrix:
    """Read the plan's dictionary entries off a trajectory, tick by tick."""
    states = trajectory.states if hasattr(trajectory, "states") else np.asarray(trajectory)
    if states.shape[0] != spec.n:
        raise ValueError("trajectory and dictionary disagree on the node count")
    if states.shape[1] != plan.tau:
        raise ValueError(f"plan expects {plan.tau} ticks, trajectory has {states.shape[1]}")
    z = lift_trajectory(spec, states)
    stacked = z.T.ravel()  # entry t*M + m holds observable m at tick t
    return SampleMatrix(values=stacked[plan.row_indices], plan=plan)


def initial_guess(samples: SampleMatrix, spec: ObservableSpec,
                  fill_value: float) -> np.ndarray:
    """Sampled nodes from their observed first-tick values; the rest filled."""
    plan = samples.plan
    x0 = np.full(spec.n, float(fill_value))
    obs = plan.observable_indices
    first_tick = samples.values[:obs.size]
    for node in plan.nodes:
        row = int(spec.linear_indices[node])
        pos = int(np.searchsorted(obs, row))
        if pos >= obs.size or obs[pos] != row:
            raise RuntimeError(f"plan does not expose the state entry of node {node}")
        x0[node] = first_tick[pos] * spec.scale
    return x0


def _objective_pair(a: np.ndarray, y: np.ndarray, spec: ObservableSpec):
    def objective(x):
        try:
            psi = lift(spec, x)
        except ValueError:
            return math.inf
        r = a @ psi - y
        return float(r @ r)

    def gradient(x):
        psi = lift(spec, x)
        jac = lift_jacobian(spec, x)
        return 2.0 * (jac.T @ (a.T @ (a @ psi - y)))

    return objective, gradient


def recover_initial_state(samples: SampleMatrix, theta: EvolutionStack,
                          spec: ObservableSpec,
                          config: OptimizerConfig | None = None) -> RecoveryResult:
    """Estimate the initial state behind ``samples`` and reconstruct the rest."""
    config = config or OptimizerConfig()
    plan = samples.plan
    if theta.m != spec.size:
        raise ValueError("evolution stack and dictionary disagree on size")
    a = theta.theta[plan.row_indices]
    objective, gradient = _objective_pair(a, samples.values, spec)

    base = initial_guess(samples, spec, config.fill_value)
    rng = np.random.default_rng(config.seed)
    free = np.array([i not in set(plan.nodes) for i in range(spec.n)])
    sigma = config.jitter_scale * max(abs(config.fill_value), 1.0)

    starts = [base]
    for _ in range(config.multistarts):
        x0 = base.copy()
        x0[free] += rng.normal(0.0, sigma, int(free.sum()))
        starts.append(x0)
    warm = _linear_warm_start(a, samples.values, spec)
    if warm is not None:
        starts.append(warm)

    best: MinimizeResult | None = None
    failures = []
    for x0 in starts:
        try:
            run = minimize_dfp(objective, gradient, x0,
                               gradient_tol=config.gradient_tol,
                               max_iterations=config.max_iterations,
                               c1=config.c1, c2=config.c2)
        except ValueError as exc:  # infeasible start
            failures.append(str(exc))
            continue
        if best is None or run.fun < best.fun:
            best = run
    if best is None:
        raise RuntimeError("every recovery start failed: " + "; ".join(failures))

    trajectory = _forward(best.x, theta, spec)
    return RecoveryResult(x1=best.x, trajectory=trajectory, objective=best.fun,
                          iterations=best.iterations, converged=best.converged,
                          objective_trace=tuple(best.objective_trace))


def _linear_warm_start(a: np.ndarray, y: np.ndarray,
                       spec: ObservableSpec) -> np.ndarray | None:
    """Deterministic extra start: unlift the min-norm solution of A z = y.

    Ignoring the constraint that z must lie on the lift manifold gives a
    linear least-squares problem whose solution, read back through the
    dictionary's linear entries, usually lands in the right basin even when
    the jittered starts do not.  Entries are floored at zero because both
    dynamics evolve nonnegative states.
    """
    if not (np.isfinite(a).all() and np.isfinite(y).all()):
        return None
    try:
        z1, *_ = np.linalg.lstsq(a, y, rcond=1e-10)
    except np.linalg.LinAlgError:
        return None
    return np.clip(unlift(spec, z1), 0.0, None)


def _forward(x1: np.ndarray, theta: EvolutionStack, spec: ObservableSpec) -> np.ndarray:
    z1 = lift(spec, x1)
    out = np.empty((spec.n, theta.tau))
    out[:, 0] = x1
    for t in range(1, theta.tau):
        out[:, t] = unlift(spec, theta.block(t) @ z1)
    return out


def reconstruct_trajectory(x1: np.ndarray, model: KoopmanModel, tau: int) -> np.ndarray:
    """Roll an initial-state estimate forward into node states (first column exact)."""
    if tau < 1:
        raise ValueError("tau must be at least 1")
    x1 = np.asarray(x1, dtype=float)
    z = rollout(model, lift(model.spec, x1), tau)
    out = unlift_trajectory(model.spec, z)
    out[:, 0] = x1
    return out


# ---------------------------------------------------------------------------
# Serialization

def result_to_dict(result: RecoveryResult, truth: np.ndarray | None = None) -> dict:
    d = {
        "x1": result.x1.tolist(),
        "trajectory": result.trajectory.tolist(),
        "objective": result.objective,
        "iterations": result.iterations,
        "converged": result.converged,
        "objective_trace": list(result.objective_trace),
    }
    if truth is not None:
        truth = truth.states if hasattr(truth, "states") else np.asarray(truth)
        d["nrmse"] = nrmse(result.trajectory, truth)
        d["per_tick_nrmse"] = per_tick_nrmse(result.trajectory, truth).tolist()
    return d


def save_result(result: RecoveryResult, path: str | Path,
                truth: np.ndarray | None = None) -> Path:
    path = Path(path)
    path.write_text(json.dumps(result_to_dict(result, truth)))
    return path
