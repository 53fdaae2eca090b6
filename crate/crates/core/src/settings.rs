/// Numeric tolerances shared across the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NumericSettings {
    /// Defining-relation residual accepted for group and algebra membership.
    pub structural_tol: f64,
    /// Accepted error for exp/log and inverse round-trips.
    pub roundtrip_tol: f64,
    /// Spectral radius of `g - I` inside which `log(exp(xi)) = xi` is guaranteed.
    pub log_radius: f64,
    /// Horizontality residual accepted at every lift sample.
    pub lift_tol: f64,
    /// Step-halving retries before a lift is reported as diverged.
    pub lift_refinements: usize,
    /// Default RK4 step in path time.
    pub lift_step: f64,
    /// Central-difference step for the exterior derivative of local forms.
    pub curvature_fd_step: f64,
    /// Relative singular-value threshold for rank decisions on the horizontal space.
    pub rank_rel_tol: f64,
    /// Absolute singular-value threshold for kernel and invertibility tests.
    pub kernel_tol: f64,
    /// Step used when differentiating the reduced-subbundle constraint.
    pub tangency_fd_step: f64,
    /// Closedness tolerance for loops (absolute, per coordinate).
    pub loop_closure_tol: f64,
}

impl NumericSettings {
    pub const DEFAULT: NumericSettings = NumericSettings {
        structural_tol: 1e-10,
        roundtrip_tol: 1e-9,
        log_radius: 0.9,
        lift_tol: 1e-7,
        lift_refinements: 3,
        lift_step: 1e-3,
        curvature_fd_step: 1e-5,
        rank_rel_tol: 1e-8,
        kernel_tol: 1e-8,
        tangency_fd_step: 1e-6,
        loop_closure_tol: 1e-12,
    };
}

impl Default for NumericSettings {
    fn default() -> Self {
        Self::DEFAULT
    }
}
