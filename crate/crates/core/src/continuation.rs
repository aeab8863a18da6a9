//! The sweep in the coupling: relax at `alpha = 0`, then step `alpha` up and
//! re-relax from the previous minimiser, recording diagnostics at each point.

use log::{info, warn};

use crate::diagnostics::{self, core_curve, hopf_charge};
use crate::energy::EnergyBreakdown;
use crate::error::{invalid, Result};
use crate::lattice::{DirectorField, OneFormField};
use crate::optimizer::{self, OptimizerConfig};

/// Values closer than this are treated as the same coupling when building
/// schedules.
const SNAP: f64 = 1e-9;

/// Couplings to visit, strictly increasing from 0 to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationSchedule {
    alphas: Vec<f64>,
}

impl ContinuationSchedule {
    pub fn new(alphas: Vec<f64>) -> Result<Self> {
        if alphas.first() != Some(&0.0) || alphas.last() != Some(&1.0) {
            return Err(invalid("schedule must start at 0 and end at 1"));
        }
        if let Some(w) = alphas.windows(2).find(|w| !(w[1] > w[0])) {
            return Err(invalid(format!("schedule not strictly increasing at {} -> {}", w[0], w[1])));
        }
        Ok(ContinuationSchedule { alphas })
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    /// The points strictly after `alpha`; what remains when resuming.
    pub fn remaining_after(&self, alpha: f64) -> &[f64] {
        let start = self.alphas.partition_point(|&a| a <= alpha);
        &self.alphas[start..]
    }
}

/// `coarse_step` spacing up to `refine_threshold`, then `fine_step` spacing
/// up to 1. Points are computed by multiplication rather than accumulation so
/// the grid does not drift.
pub fn default_schedule(coarse_step: f64, refine_threshold: f64, fine_step: f64) -> Result<ContinuationSchedule> {
    if !(fine_step > 0.0 && fine_step <= coarse_step && coarse_step.is_finite()) {
        return Err(invalid(format!("need 0 < fine_step <= coarse_step, got {fine_step}, {coarse_step}")));
    }
    if !(refine_threshold > 0.0 && refine_threshold < 1.0) {
        return Err(invalid(format!("refine_threshold must lie in (0, 1), got {refine_threshold}")));
    }
    let mut alphas = Vec::new();
    let mut k = 0usize;
    loop {
        let a = k as f64 * coarse_step;
        if a >= refine_threshold - SNAP {
            break;
        }
        alphas.push(a);
        k += 1;
    }
    alphas.push(refine_threshold);
    let mut k = 1usize;
    loop {
        let a = refine_threshold + k as f64 * fine_step;
        if a >= 1.0 - SNAP {
            break;
        }
        alphas.push(a);
        k += 1;
    }
    alphas.push(1.0);
    ContinuationSchedule::new(alphas)
}

/// Coarse 0.02 up to 0.9, then 0.005.
pub fn standard_schedule() -> ContinuationSchedule {
    default_schedule(0.02, 0.9, 0.005).expect("constants are valid")
}

/// Diagnostics of the minimiser found at one coupling.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuationRecord {
    pub alpha: f64,
    pub energy: EnergyBreakdown,
    pub hopf_charge: f64,
    pub core_length: f64,
    pub core_reliable: bool,
    /// `None` when the total energy is not positive.
    pub derrick_ratio: Option<f64>,
    pub instability_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ContinuationRecord {
    /// Measures a configuration. `iterations` and `converged` describe how it
    /// was obtained.
    pub fn measure(
        phi: &DirectorField,
        c: &OneFormField,
        energy: EnergyBreakdown,
        iterations: usize,
        converged: bool,
    ) -> Result<Self> {
        let curve = core_curve(phi);
        Ok(ContinuationRecord {
            alpha: energy.alpha,
            energy,
            hopf_charge: hopf_charge(phi)?,
            core_length: curve.length,
            core_reliable: curve.is_reliable(phi.spec().h()),
            derrick_ratio: diagnostics::derrick_ratio(&energy).ok(),
            instability_norm: diagnostics::instability_norm(phi, c)?,
            iterations,
            converged,
        })
    }
}

/// Receives each record together with the minimiser it describes, before
/// the sweep moves on. Checkpointing and CSV output live behind this.
pub trait RecordSink {
    fn accept(&mut self, record: &ContinuationRecord, phi: &DirectorField, c: &OneFormField) -> Result<()>;
}

impl RecordSink for Vec<ContinuationRecord> {
    fn accept(&mut self, record: &ContinuationRecord, _: &DirectorField, _: &OneFormField) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Discards everything; the records are still returned by [`run`].
pub struct NullSink;

impl RecordSink for NullSink {
    fn accept(&mut self, _: &ContinuationRecord, _: &DirectorField, _: &OneFormField) -> Result<()> {
        Ok(())
    }
}

/// Relaxes at each coupling in `alphas` in turn, each time starting from the
/// previous minimiser. A step that fails to converge is recorded and the
/// sweep continues; a numerical breakdown aborts it, leaving whatever the
/// sink has already persisted.
pub fn run_points<S: RecordSink + ?Sized>(
    phi: &DirectorField,
    c: &OneFormField,
    alphas: &[f64],
    opt: &OptimizerConfig,
    sink: &mut S,
) -> Result<Vec<ContinuationRecord>> {
    opt.validate()?;
    let mut phi = phi.clone();
    let mut c = c.clone();
    let mut records = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let result = optimizer::minimize(&phi, &c, alpha, opt)?;
        if !result.converged {
            warn!(
                "alpha={alpha}: stopped after {} iterations ({:?}), gradient sup norm {:.3e}",
                result.iterations, result.status, result.final_grad_supnorm
            );
        }
        phi = result.phi;
        c = result.c;
        let record = ContinuationRecord::measure(&phi, &c, result.energy, result.iterations, result.converged)?;
        info!(
            "alpha={alpha:.4} E={:.6} Q={:.4} core={:.4} reliable={} iterations={}",
            record.energy.total, record.hopf_charge, record.core_length, record.core_reliable, record.iterations
        );
        sink.accept(&record, &phi, &c)?;
        records.push(record);
    }
    Ok(records)
}

/// The whole sweep from `(phi, c)`.
pub fn run<S: RecordSink + ?Sized>(
    phi: &DirectorField,
    c: &OneFormField,
    schedule: &ContinuationSchedule,
    opt: &OptimizerConfig,
    sink: &mut S,
) -> Result<Vec<ContinuationRecord>> {
    run_points(phi, c, schedule.alphas(), opt, sink)
}

/// Continues a sweep from a minimiser saved at `alpha`, visiting only the
/// later points of `schedule`.
pub fn resume<S: RecordSink + ?Sized>(
    phi: &DirectorField,
    c: &OneFormField,
    alpha: f64,
    schedule: &ContinuationSchedule,
    opt: &OptimizerConfig,
    sink: &mut S,
) -> Result<Vec<ContinuationRecord>> {
    run_points(phi, c, schedule.remaining_after(alpha), opt, sink)
}
