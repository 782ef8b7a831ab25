"""Stochastic predictive control with identified multi-step predictors.

Pipeline: simulate a mass-spring-damper benchmark, identify a state-space
model by EM from one noisy input-output trajectory, build the steady-state
Kalman filter, identify per-horizon multi-step output predictors with a
parameter covariance by generalized least squares, tighten half-space
output chance constraints (ellipsoidal trust-region or Monte Carlo
quadratic-form quantile), and solve the resulting second-order cone
program with a self-contained interior-point solver.
"""
from .em import EMConfig, em_identify
from .harness import (ExperimentConfig, StudyReport, TrialArtifact,
                      feasibility_study, init_belief, reachability_study,
                      run_pipeline, run_studies, run_trial, violation_study,
                      write_report)
from .kalman import (FilterOutput, InnovationForm, dare_steady_state,
                     kalman_filter, rts_smooth)
from .model import (GaussianBelief, MultiStepMatrices, StateSpaceModel,
                    Trajectory, build_msd_chain, multi_step_from_model,
                    simulate, to_observer_canonical, to_output_normal_form)
from .msp import (BandedCovariance, MultiStepPredictor, RegressorSet,
                  build_noise_covariance, build_regressors, extract_matrices,
                  gls_identify, identify_predictor, predictors_from_json,
                  predictors_to_json, surrogate_disturbance_terms, unvec, vec)
from .socp import (ConicProgram, Solution, assemble, exact_predictors, solve,
                   solve_nominal_exact)
from .tightening import (ChanceSpec, HalfspaceConstraint, SocRow,
                         build_rows_ellipsoidal, build_rows_proposed,
                         chi2_quantile, quad_form_quantile, trust_region_max)

__version__ = "0.1.0"

__all__ = [
    "BandedCovariance", "ChanceSpec", "ConicProgram", "EMConfig",
    "ExperimentConfig", "FilterOutput", "GaussianBelief",
    "HalfspaceConstraint", "InnovationForm", "MultiStepMatrices",
    "MultiStepPredictor", "RegressorSet", "SocRow", "Solution",
    "StateSpaceModel", "StudyReport", "Trajectory", "TrialArtifact",
    "assemble", "build_msd_chain", "build_noise_covariance",
    "build_regressors", "build_rows_ellipsoidal", "build_rows_proposed",
    "chi2_quantile", "dare_steady_state", "em_identify", "exact_predictors",
    "extract_matrices", "feasibility_study", "gls_identify",
    "identify_predictor", "init_belief", "kalman_filter",
    "multi_step_from_model", "predictors_from_json", "predictors_to_json",
    "quad_form_quantile", "reachability_study", "rts_smooth", "run_pipeline",
    "run_studies", "run_trial", "simulate", "solve", "solve_nominal_exact",
    "surrogate_disturbance_terms", "to_observer_canonical",
    "to_output_normal_form", "trust_region_max", "unvec", "vec",
    "violation_study", "write_report",
]
