use serde::Serialize;

use super::StepView;
use crate::error::{Error, Result};

/// Lyapunov bookkeeping for one learner step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TsaRecord {
    pub n: u64,
    pub threshold: usize,
    pub w: f64,
    pub gamma: f64,
    pub eta: f64,
    /// `||theta - f(W)||^2` over the defined coordinates of `f`; `None` when
    /// no fixed-point oracle is available.
    pub theta_residual_sq: Option<f64>,
    /// `(W - W*)^2`.
    pub w_residual_sq: f64,
    /// `(eta/gamma) ||theta - f(W)||^2 + (W - W*)^2`.
    pub lyapunov: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct TsaTelemetry {
    pub records: Vec<TsaRecord>,
}

/// Residuals and Lyapunov value of one step. `f_w` is `f(W_n)` in weight
/// coordinates, with `None` entries skipped.
pub fn lyapunov_record(view: &StepView<'_>, f_w: Option<&[Option<f64>]>, w_true: f64) -> Result<TsaRecord> {
    let theta_residual_sq = match f_w {
        Some(f) => {
            if f.len() != view.weights.len() {
                return Err(Error::InvalidFeatures(format!(
                    "fixed point has {} coordinates, weights have {}",
                    f.len(),
                    view.weights.len()
                )));
            }
            Some(
                f.iter()
                    .zip(view.weights)
                    .filter_map(|(f, t)| f.map(|f| (t - f) * (t - f)))
                    .sum::<f64>(),
            )
        }
        None => None,
    };
    let w_residual_sq = (view.w - w_true).powi(2);
    let lyapunov = theta_residual_sq.map_or(0.0, |r| view.eta / view.gamma * r) + w_residual_sq;
    Ok(TsaRecord {
        n: view.n,
        threshold: view.threshold,
        w: view.w,
        gamma: view.gamma,
        eta: view.eta,
        theta_residual_sq,
        w_residual_sq,
        lyapunov,
    })
}

/// Telemetry over a recorded trace. `f_oracle` maps `W` to the fixed-point
/// weights; pass `None` for feature maps without a computable fixed point,
/// in which case only the index residual is tracked.
pub fn tsa_telemetry<'a, I>(
    trace: I,
    f_oracle: Option<&dyn Fn(f64) -> Result<Vec<Option<f64>>>>,
    w_true: f64,
) -> Result<TsaTelemetry>
where
    I: IntoIterator<Item = StepView<'a>>,
{
    let mut records = Vec::new();
    for view in trace {
        let f = f_oracle.map(|o| o(view.w)).transpose()?;
        records.push(lyapunov_record(&view, f.as_deref(), w_true)?);
    }
    Ok(TsaTelemetry { records })
}
