//! Residual tolerances. Every identity check compares a max-norm residual
//! against `base * (1 + scale)` where `scale` is the max-norm of the operands;
//! Lie-algebra mode is exact linear algebra, so residuals are rounding-only.

/// Tolerance policy shared by the library checks, the verification registry
/// and the CLI. `global_scale` multiplies every tolerance; it is fed from the
/// `NORDEN_TOLERANCE_SCALE` environment variable by the CLI (default 1.0).
#[derive(Debug, Clone, Copy)]
pub struct Tolerances {
    /// Base for exact identities, default 1e-9.
    pub identity_base: f64,
    /// Base for class-membership and parallelism verdicts, default 1e-8.
    pub membership_base: f64,
    /// Chart-mode finite differences vs exact derivatives, default 1e-6.
    pub fd_cross_check: f64,
    /// Global multiplier applied to everything.
    pub global_scale: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity_base: 1e-9,
            membership_base: 1e-8,
            fd_cross_check: 1e-6,
            global_scale: 1.0,
        }
    }
}

impl Tolerances {
    pub fn with_global_scale(scale: f64) -> Self {
        Self { global_scale: scale, ..Self::default() }
    }

    /// Reads NORDEN_TOLERANCE_SCALE (default 1.0).
    pub fn from_env() -> Self {
        let scale = std::env::var("NORDEN_TOLERANCE_SCALE")
            .ok()
            .and_then(|s| s.parse::<f64>().ok())
            .unwrap_or(1.0);
        Self::with_global_scale(scale)
    }

    /// Tolerance for an exact identity whose operands have max-norm `scale`.
    pub fn identity(&self, scale: f64) -> f64 {
        self.identity_base * (1.0 + scale) * self.global_scale
    }

    /// Tolerance for a membership verdict (is this residual "zero"?).
    pub fn membership(&self, scale: f64) -> f64 {
        self.membership_base * (1.0 + scale) * self.global_scale
    }

    /// Tolerance for the finite-difference cross-checks in chart mode.
    pub fn fd(&self) -> f64 {
        self.fd_cross_check * self.global_scale
    }
}
