use std::fmt;
use std::time::Duration;

use steer_core::volume::DeformTimings;

use crate::{Result, ServerError};

/// Solver steps per progression sample.
pub const SAMPLE_STEPS: u32 = 10;

/// Wall-time intervals collected during a session.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TimingLedger {
    /// Surface extraction and consolidation into one mesh.
    pub extract_surface: Vec<Duration>,
    pub send_surface: Vec<Duration>,
    /// One entry per schedule step.
    pub deformations: Vec<DeformationTiming>,
    /// Wall time of consecutive blocks of [`SAMPLE_STEPS`] solver steps.
    pub solver_samples: Vec<Duration>,
    pending: Duration,
    pending_steps: u32,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct DeformationTiming {
    /// Matrix allocation and factorization or preconditioner setup.
    pub allocation: Duration,
    /// Element formation and assembly.
    pub assembly: Duration,
    pub solve: Duration,
    /// Whole schedule step, including the mesh update and quality check.
    pub total: Duration,
}

impl DeformationTiming {
    pub fn new(t: DeformTimings, total: Duration) -> Self {
        Self { allocation: t.setup, assembly: t.assembly, solve: t.solve, total }
    }
}

impl TimingLedger {
    pub fn record_solver_step(&mut self, d: Duration) {
        self.pending += d;
        self.pending_steps += 1;
        if self.pending_steps == SAMPLE_STEPS {
            self.solver_samples.push(self.pending);
            self.pending = Duration::ZERO;
            self.pending_steps = 0;
        }
    }

    pub fn record_deformation(&mut self, t: DeformationTiming) {
        self.deformations.push(t);
    }
}

fn mean(xs: impl IntoIterator<Item = Duration>) -> Duration {
    let (sum, n) = xs.into_iter().fold((Duration::ZERO, 0u32), |(s, n), d| (s + d, n + 1));
    if n == 0 {
        Duration::ZERO
    } else {
        sum / n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverheadReport {
    pub extract_surface: Duration,
    pub send_surface: Duration,
    pub allocation: Duration,
    pub assembly: Duration,
    pub solve: Duration,
    /// Mean wall time of one schedule step.
    pub deformation: Duration,
    /// Mean wall time of [`SAMPLE_STEPS`] solver steps.
    pub solver_sample: Duration,
    /// Mean deformation time in units of solver steps.
    pub overhead_steps: f64,
}

/// Summarizes a ledger with at least one deformation and three solver
/// samples. All durations are means.
pub fn overhead_report(ledger: &TimingLedger) -> Result<OverheadReport> {
    if ledger.deformations.is_empty() || ledger.solver_samples.len() < 3 {
        return Err(ServerError::InsufficientTimings {
            deformations: ledger.deformations.len(),
            samples: ledger.solver_samples.len(),
        });
    }
    let d = &ledger.deformations;
    let deformation = mean(d.iter().map(|t| t.total));
    let solver_sample = mean(ledger.solver_samples.iter().copied());
    let per_step = solver_sample.as_secs_f64() / SAMPLE_STEPS as f64;
    let overhead_steps = if deformation.is_zero() { 0.0 } else { deformation.as_secs_f64() / per_step };
    Ok(OverheadReport {
        extract_surface: mean(ledger.extract_surface.iter().copied()),
        send_surface: mean(ledger.send_surface.iter().copied()),
        allocation: mean(d.iter().map(|t| t.allocation)),
        assembly: mean(d.iter().map(|t| t.assembly)),
        solve: mean(d.iter().map(|t| t.solve)),
        deformation,
        solver_sample,
        overhead_steps,
    })
}

impl fmt::Display for OverheadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        writeln!(f, "extract and consolidate surface  {:10.3} ms", ms(self.extract_surface))?;
        writeln!(f, "send surface                     {:10.3} ms", ms(self.send_surface))?;
        writeln!(f, "matrix allocation                {:10.3} ms", ms(self.allocation))?;
        writeln!(f, "formation and assembly           {:10.3} ms", ms(self.assembly))?;
        writeln!(f, "solve                            {:10.3} ms", ms(self.solve))?;
        writeln!(f, "deformation step                 {:10.3} ms", ms(self.deformation))?;
        writeln!(f, "{SAMPLE_STEPS} solver steps                   {:10.3} ms", ms(self.solver_sample))?;
        write!(f, "overhead                         {:10.2} steps", self.overhead_steps)
    }
}
