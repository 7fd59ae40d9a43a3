//! The coupled Newton system: block gathering, condensation of the Lagrange
//! multipliers and slave interface dofs for either master choice, the
//! uncondensed saddle-point oracle, and the time-step Newton driver.

mod blocks;
mod condense;
mod newton;
mod saddle;

pub use blocks::{gather_blocks, BlockSystem, CouplingMeta, FsiProblem, SplitBlocks};
pub use condense::{condense_fluid_handled, condense_structure_handled, CondensedSystem, Layout};
pub use newton::{
    newton_solve_step, recover_lambda, BoundaryDriver, CoupledState, NewtonConfig, OracleCheck,
    StepDiagnostics,
};
pub use saddle::{build_saddle_system, SaddleLayout, SaddleSystem};
