//! Central-difference gradient checking.

/// Compares an analytic gradient against central finite differences of
/// `loss`, elementwise, returning the largest relative error with
/// denominator `max(|g_i|, 1e-8)`.
///
/// `params` is restored to its original contents before returning.
pub fn finite_diff_check<F>(
    mut loss: F,
    analytic_grad: &[f64],
    params: &mut [f64],
    h: f64,
) -> f64
where
    F: FnMut(&[f64]) -> f64,
{
    assert!(h > 0.0, "step size must be positive");
    assert_eq!(analytic_grad.len(), params.len());
    let mut max_rel = 0.0f64;
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + h;
        let up = loss(params);
        params[i] = orig - h;
        let down = loss(params);
        params[i] = orig;
        let numeric = (up - down) / (2.0 * h);
        let rel = (analytic_grad[i] - numeric).abs() / analytic_grad[i].abs().max(1e-8);
        max_rel = max_rel.max(rel);
    }
    max_rel
}
