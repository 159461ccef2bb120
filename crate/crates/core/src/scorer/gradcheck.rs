//! Central-difference check of the analytic gradients.

use std::collections::BTreeSet;

use super::model::{Example, Model};
use super::ScoreError;

/// Relative errors are taken against `max(|analytic|, |numeric|, FLOOR)`.
const FLOOR: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Tensor name and flat index of the worst coordinate.
    pub worst: Option<(&'static str, usize)>,
    pub coordinates_checked: usize,
}

/// Compares analytic gradients of the example loss with central finite
/// differences over every coordinate of every parameter tensor. Rows of the
/// n-gram table the example never reads are skipped: both gradients are
/// exactly zero there.
pub fn grad_check(model: &Model, example: &Example, eps: f64) -> Result<GradCheckReport, ScoreError> {
    assert!((1e-6..=1e-3).contains(&eps), "eps must lie in [1e-6, 1e-3]");
    let (_, analytic, _) = model.loss_and_gradient(std::slice::from_ref(example))?;
    let touched: BTreeSet<usize> = example
        .context
        .target
        .iter()
        .chain(example.context.window.iter().flatten())
        .copied()
        .collect();
    let hidden = model.config().hidden;
    let mut probe = model.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        coordinates_checked: 0,
    };
    let analytic = analytic.tensors();
    for (t, (name, grad)) in analytic.iter().enumerate() {
        let coords: Vec<usize> = if *name == "context.ngram_table" {
            touched.iter().flat_map(|r| r * hidden..(r + 1) * hidden).collect()
        } else {
            (0..grad.data.len()).collect()
        };
        for i in coords {
            let original = probe.tensors()[t].1.data[i];
            set(&mut probe, t, i, original + eps);
            let plus = probe.loss(example)?;
            set(&mut probe, t, i, original - eps);
            let minus = probe.loss(example)?;
            set(&mut probe, t, i, original);
            let numeric = (plus - minus) / (2.0 * eps);
            let a = grad.data[i];
            let err = (a - numeric).abs() / a.abs().max(numeric.abs()).max(FLOOR);
            report.coordinates_checked += 1;
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((name, i));
            }
        }
    }
    Ok(report)
}

fn set(model: &mut Model, tensor: usize, index: usize, value: f64) {
    model.tensors_mut()[tensor].1.data[index] = value;
}
