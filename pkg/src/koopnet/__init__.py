"""Koopman linearization, sensor selection, and recovery on networks.

The pipeline: simulate nonlinear node dynamics on a graph, lift the states
through an observable dictionary (log-based by default, so the dictionary
grows linearly with the network), fit the lifted one-tick operator by least
squares, pick a minimal sensor-node set by greedy conditioning analysis of
the stacked operator powers, and recover full trajectories from the sampled
nodes with a quasi-Newton solve through the lift.
"""

from .baselines import (GramianSelector, LinearGFTBasis, build_laplacian_basis,
                        gramian_nodes_for_budget, gramian_select,
                        linear_gft_recover, linear_gft_recover_trajectory,
                        linear_gft_select, linear_observable_recover)
from .dynamics import (BIOCHEMICAL, REGULATORY, DynamicsParams, Graph,
                       Trajectory, default_initial_range, derivative,
                       generate_er_graph, load_bundle, random_initial_state,
                       random_initial_states, save_bundle, simulate,
                       simulate_ensemble, trajectory_from_csv,
                       trajectory_to_csv)
from .experiments import (ExperimentConfig, ExperimentReport, TrialRecord,
                          aggregate, emit, report_from_json,
                          run_linearization_sweep, run_sampling_sweep)
from .koopman import (EvolutionStack, KoopmanModel, TrainingSet,
                      assemble_training, build_theta, fit, linearization_nrmse,
                      load_model, predict, refine_with_samples, rollout,
                      save_model)
from .metrics import nrmse, per_tick_nrmse
from .observables import (IDENTITY, LOG, POLY, ObservableSpec, ObservableTerm,
                          build_spec, check_scale, identity_spec, lift,
                          lift_jacobian, lift_trajectory, log_spec, poly_spec,
                          spec_from_json, spec_to_json, unlift,
                          unlift_trajectory)
from .optimize import MinimizeResult, dfp_update, minimize_dfp
from .recovery import (OptimizerConfig, RecoveryResult, SampleMatrix,
                       initial_guess, recover_initial_state,
                       reconstruct_trajectory, result_to_dict, save_result,
                       take_samples)
from .sampling import (SamplingPlan, SelectionConfig, gamma_map, greedy_select,
                       load_plan, save_plan, selected_rows, selection_score,
                       sigma_quotient, verify_rank)

__version__ = "0.1.0"
