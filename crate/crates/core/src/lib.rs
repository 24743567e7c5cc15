//! RBF-corrected explicit Runge-Kutta methods for scalar ODEs.

pub mod analysis;
pub mod classical;
pub mod error;
pub mod format;
pub mod jet;
pub mod problems;
pub mod rbf;
pub mod scalar;
pub mod stability;
pub mod tableau;

pub use analysis::{
    convergence_studies, convergence_study, global_error, integrate, integrate_with, ConvergenceRow,
    ConvergenceTable, ErrorNorm, IntegrateOptions, Trajectory,
};
pub use classical::{classical_step, StepInput};
pub use error::{Error, Result};
pub use jet::{Jet3, JetProvider, Provenance};
pub use problems::{benchmark_problems, problem_by_name, OdeProblem};
pub use rbf::{FallbackReason, RbfStepTrace, ShapeMode, ShapeParams};
pub use stability::{
    amplification, raster, real_stability_interval, AmplificationMode, AmplificationSpec, StabilityRaster,
    Window,
};
pub use tableau::{catalog, lookup, ButcherTableau, CaseId, Kernel, MethodSpec};
