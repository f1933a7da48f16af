//! Finite-dimensional engine: Hermitian generators, window schedules and the
//! reference propagator of the time-dependent Hamiltonian being emulated.

mod hermitian;
mod schedule;
mod target;

pub use hermitian::{
    hermitian_propagator, hermiticity_defect, max_abs, unitarity_defect, CMatrix, HermitianOp,
};
pub use schedule::{
    schedule_from_target, schedule_from_target_at, GeneratorSchedule, SchedulePattern,
    WindowGenerator,
};
pub use target::{ordered_product, target_propagator, TargetEvolution, CONVERGENCE_TOL};
