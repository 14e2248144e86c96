"""
A miniature method comparison
=============================

The real experiment harness runs 20 trials at N = 20; this is the same
machinery shrunk to a couple of trials on 10 nodes so it finishes in well
under a minute.  Three methods face the same truth trajectories at each
sampling budget:

  log-koopman   greedy selection + quasi-Newton recovery (the pipeline)
  poly-gramian  polynomial dictionary, eigen-energy sensors, linear solve
  linear-gft    bandlimited reconstruction in the graph Laplacian basis

Run `koopnet sweep-sampling --config <file>` for the full-size version.
"""

import math

from koopnet import ExperimentConfig, run_sampling_sweep

config = ExperimentConfig(n_values=(10,), seed=33, trials=2,
                          training_trajectories=60, training_ticks=40,
                          sampling_ticks=15, sampling_rates=(0.3, 0.6, 0.9),
                          refine_trajectories=25)
report = run_sampling_sweep(config)

print(f"{'method':<14} {'rate':>5} {'budget':>7} {'mean N-RMSE':>12} "
      f"{'worst':>10} {'fails':>6}")
print("-" * 60)
for row in report.aggregates:
    mean = "--" if row["mean_nrmse"] is None else f"{row['mean_nrmse']:.4f}"
    worst = "--" if row["max_nrmse"] is None else f"{row['max_nrmse']:.4f}"
    budget = min(10, max(1, math.ceil(row["rate"] * 10)))
    print(f"{row['method']:<14} {row['rate']:>5.0%} {budget:>7} "
          f"{mean:>12} {worst:>10} {row['failures']:>6}")

print("\nNotes: the gramian baseline solves a minimum-norm linear system in")
print("the lifted space; it is competitive at generous budgets but degrades")
print("sharply once the kept rows go rank-poor (at the 20-node scale of the")
print("full harness the low-budget cases blow up outright -- that is the")
print("method, not a bug).  The GFT baseline is well behaved but capped by")
print("how bandlimited the trajectory actually is in the Laplacian basis.")
