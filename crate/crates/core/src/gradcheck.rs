//! Finite-difference check of tape gradients.

use crate::error::{PrismError, Result};
use crate::params::{ParamId, ParamStore};
use crate::tape::{Tape, Var};

/// Step for central differences.
pub const DEFAULT_STEP: f64 = 1e-5;
/// Floor on the relative-error denominator.
pub const DENOM_FLOOR: f64 = 1e-8;

/// One coordinate where the two one-sided slopes disagree, so the central
/// difference straddles a kink and says nothing about the subgradient.
#[derive(Clone, Debug, PartialEq)]
pub struct Kink {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct GradCheckReport {
    /// Worst relative error over every checked coordinate.
    pub max_rel_err: f64,
    /// `(parameter name, flat index)` of the worst coordinate.
    pub worst: Option<(String, usize)>,
    /// Largest raw `|analytic − numeric|`, noise included.
    pub max_abs_diff: f64,
    pub checked: usize,
    pub skipped: Vec<Kink>,
}

impl GradCheckReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_err < tol
    }
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(DENOM_FLOOR)
}

fn eval<F>(f: &F, params: &ParamStore) -> Result<f64>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var>,
{
    let mut tape = Tape::new();
    let out = f(&mut tape, params)?;
    let value = tape.value(out);
    if value.len() != 1 {
        return Err(PrismError::Usage(format!(
            "grad_check needs a scalar, got {:?}",
            value.shape()
        )));
    }
    Ok(value.data()[0])
}

/// Compares `backward()` against central differences on every scalar of
/// every parameter in `params`.
///
/// A coordinate whose error exceeds `kink_tol` and whose forward and backward
/// one-sided slopes also disagree by more than `kink_tol` is recorded in
/// `skipped` instead of counting towards `max_rel_err`. Discrepancies within
/// the rounding noise of the difference quotient count as zero error.
pub fn grad_check<F>(f: F, params: &ParamStore, h: f64, kink_tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &ParamStore) -> Result<Var>,
{
    let mut tape = Tape::new();
    let loss = f(&mut tape, params)?;
    let base = tape.value(loss).item();
    let grads = tape.backward(loss)?;

    let mut report = GradCheckReport::default();
    let mut probe = params.clone();
    for id in 0..params.len() {
        let analytic = grads
            .get(id as ParamId)
            .ok_or_else(|| PrismError::Internal(format!("no gradient for {}", params.name(id))))?
            .clone();
        for i in 0..params.get(id).len() {
            let orig = params.get(id).data()[i];
            probe.get_mut(id).data_mut()[i] = orig + h;
            let up = eval(&f, &probe)?;
            probe.get_mut(id).data_mut()[i] = orig - h;
            let down = eval(&f, &probe)?;
            probe.get_mut(id).data_mut()[i] = orig;

            let a = analytic.data()[i];
            let numeric = (up - down) / (2.0 * h);
            // Rounding in `up - down` limits what the quotient can resolve;
            // smaller discrepancies are noise, not gradient error.
            let noise = 4.0 * f64::EPSILON * up.abs().max(down.abs()) / (2.0 * h);
            let err = if (a - numeric).abs() <= noise {
                0.0
            } else {
                relative_error(a, numeric)
            };
            let forward = (up - base) / h;
            let backward = (base - down) / h;
            if err >= kink_tol && relative_error(forward, backward) > kink_tol {
                report.skipped.push(Kink {
                    param: params.name(id).to_string(),
                    index: i,
                    analytic: a,
                    numeric,
                });
                continue;
            }
            report.checked += 1;
            report.max_abs_diff = report.max_abs_diff.max((a - numeric).abs());
            if err > report.max_rel_err || report.worst.is_none() {
                report.max_rel_err = report.max_rel_err.max(err);
                report.worst = Some((params.name(id).to_string(), i));
            }
        }
    }
    Ok(report)
}
