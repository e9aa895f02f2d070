//! Analytic gradients against central finite differences.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::batch::LabeledBatch;
use crate::error::NetError;
use crate::network::Network;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    /// Worst relative error over all parameters.
    pub max_rel_error: f64,
    /// Fraction of parameters with relative error below `1e-3`.
    pub within_tolerance: f64,
    /// Parameters whose `±h` perturbation switched some ReLU unit on or off,
    /// so the central difference spans a kink.
    pub kinks: usize,
    /// Worst relative error over the remaining parameters.
    pub max_rel_error_smooth: f64,
}

/// `|a - b| / max(|a|, |b|, 1e-6)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Compares every parameter's gradient of the batch-mean loss with
/// `(L(w + h) - L(w - h)) / 2h`. Dropout is off.
pub fn gradient_check(net: &mut Network<f64>, batch: &LabeledBatch, h: f64) -> Result<GradCheckReport, NetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    net.compute_gradients(batch, 0.0, &mut rng)?;
    let analytic: Vec<Vec<f64>> = net.gradients().iter().map(|g| g.to_vec()).collect();
    let mut report = GradCheckReport {
        checked: 0,
        max_rel_error: 0.0,
        within_tolerance: 0.0,
        kinks: 0,
        max_rel_error_smooth: 0.0,
    };
    let mut good = 0;
    for (t, grads) in analytic.iter().enumerate() {
        for (j, &a) in grads.iter().enumerate() {
            let orig = net.parameters()[t][j];
            net.parameters_mut()[t][j] = orig + h;
            let plus = net.evaluate_loss(batch)?.loss;
            let pattern_plus = net.relu_pattern(batch);
            net.parameters_mut()[t][j] = orig - h;
            let minus = net.evaluate_loss(batch)?.loss;
            let kink = pattern_plus != net.relu_pattern(batch);
            net.parameters_mut()[t][j] = orig;
            let e = relative_error(a, (plus - minus) / (2.0 * h));
            report.max_rel_error = report.max_rel_error.max(e);
            if kink {
                report.kinks += 1;
            } else {
                report.max_rel_error_smooth = report.max_rel_error_smooth.max(e);
            }
            good += usize::from(e < 1e-3);
            report.checked += 1;
        }
    }
    report.within_tolerance = good as f64 / report.checked.max(1) as f64;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::layers::Dense;
    use rand::Rng;

    fn objective(d: &Dense<f64>, x: &[f64], y: &[f64], batch: usize) -> f64 {
        let mut out = Vec::new();
        d.forward(x, batch, &mut out);
        out.iter().zip(y).map(|(o, t)| 0.5 * (o - t).powi(2)).sum()
    }

    fn slot(d: &mut Dense<f64>, which: usize, j: usize) -> &mut f64 {
        if which == 0 {
            &mut d.w[j]
        } else {
            &mut d.b[j]
        }
    }

    #[test]
    fn linear_layer_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let (batch, fin, fout) = (3, 5, 4);
        let mut d = Dense::<f64>::new(fin, fout, &mut rng);
        d.b.iter_mut().for_each(|b| *b = rng.random_range(-1.0..1.0));
        let x: Vec<f64> = (0..batch * fin).map(|_| rng.random_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..batch * fout).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut out = Vec::new();
        d.forward(&x, batch, &mut out);
        let dout: Vec<f64> = out.iter().zip(&y).map(|(o, t)| o - t).collect();
        d.backward(&x, &dout, batch, None);
        let h = 1e-4;
        for which in 0..2 {
            for j in 0..if which == 0 { d.w.len() } else { d.b.len() } {
                let orig = *slot(&mut d, which, j);
                *slot(&mut d, which, j) = orig + h;
                let plus = objective(&d, &x, &y, batch);
                *slot(&mut d, which, j) = orig - h;
                let minus = objective(&d, &x, &y, batch);
                *slot(&mut d, which, j) = orig;
                let analytic = if which == 0 { d.gw[j] } else { d.gb[j] };
                assert!(relative_error(analytic, (plus - minus) / (2.0 * h)) < 1e-6);
            }
        }
    }
}
