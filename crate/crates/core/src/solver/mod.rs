//! Group-sparse recovery: mixed-norm projections, spectral projected
//! gradient, Pareto-curve root finding and cross-validated stopping.

mod groups;
mod operator;
mod spg;
mod trace;

pub use groups::{
    group_norm_12, group_norm_inf2, group_norms, project_group_l1, project_l1_ball, GroupStructure,
};
pub use operator::SensingOperator;
pub use spg::{
    cv_spgl1, newton_root_bpsigma, pareto_value_and_slope, spg_solve_lstau, SolveResult, SolveStatus,
    SolverConfig,
};
pub use trace::{IterationRecord, ParetoRecord, SolveTrace};
