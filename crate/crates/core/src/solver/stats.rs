use std::fmt;

/// Iteration count, residual and wall-clock timings of one solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub assemble_seconds: f64,
    pub solve_seconds: f64,
}

impl fmt::Display for SolveStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} iterations, relative residual {:.3e}",
            self.iterations, self.relative_residual
        )
    }
}
