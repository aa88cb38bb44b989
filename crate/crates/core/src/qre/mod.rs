//! Logit (quantal response) equilibria: residuals, solvers, the 2x2 scalar
//! reduction, exploration-rate sweeps and fold detection.

mod folds;
mod region;
mod solve;
mod stability;
mod surface;
mod two_by_two;

pub use folds::{detect_folds, FoldCell, FoldComponent, FoldKind, FoldReport, Polyline};
pub use region::{region_check, region_check_xy, Region, RegionCheck};
pub use solve::{
    qre_residual, response_curve_seeds, solve_qre, solve_qre_multi, QREPoint, ACCEPT_RESIDUAL, DAMPING,
    DEDUP_TOL,
};
pub use stability::{stability_of, Stability, JACOBIAN_STEP};
pub use surface::{linspace, sweep_surface, SurfaceScan};
pub use two_by_two::{qre_2x2_roots, qre_2x2_roots_for_deltas, BISECTION_TOL, SCAN_POINTS, STABILITY_TOL};
