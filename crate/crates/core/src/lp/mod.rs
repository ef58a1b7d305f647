//! LP feasibility `A x >= b` over a box, solved by running perturbed
//! leaders over the constraints against a bounded oracle.

mod instance;
mod oracle;
mod solver;

pub use instance::{
    certified_rho, format_instance, parse_instance, random_feasible_instance,
    random_infeasible_instance, read_instance, write_instance, LpInstance,
};
pub use oracle::{oracle_box_b1, oracle_search, ArmDistribution, OracleAnswer};
pub use solver::{fpml_distribution, lp_feasibility_solve, lp_iterations, FeasibilityOutcome, OracleKind};
