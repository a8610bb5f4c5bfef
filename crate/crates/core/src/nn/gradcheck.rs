/// Outcome of a finite-difference comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

/// Gradients below this magnitude are compared in absolute terms.
const DENOMINATOR_FLOOR: f64 = 1e-6;

/// Compares the analytic gradient returned by `f` at `point` against
/// five-point central differences, coordinate by coordinate. The fourth-order
/// stencil allows a step large enough that cancellation in `f` stays well
/// below the tolerance on small gradients.
///
/// The per-coordinate error is `|analytic - numeric| / max(|numeric|, 1e-6)`,
/// so an analytic gradient scaled by two reports an error of one.
pub fn gradient_check<F>(mut f: F, point: &[f64], eps: f64) -> GradCheckReport
where
    F: FnMut(&[f64]) -> (f64, Vec<f64>),
{
    let (_, analytic) = f(point);
    assert_eq!(analytic.len(), point.len(), "gradient length must match the point");
    let mut probe = point.to_vec();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
    };
    for i in 0..point.len() {
        let mut at = |offset: f64| {
            probe[i] = point[i] + offset;
            f(&probe).0
        };
        let (up2, up, down, down2) = (at(2.0 * eps), at(eps), at(-eps), at(-2.0 * eps));
        probe[i] = point[i];
        let numeric = (8.0 * (up - down) - (up2 - down2)) / (12.0 * eps);
        let err = (analytic[i] - numeric).abs() / numeric.abs().max(DENOMINATOR_FLOOR);
        if err > report.max_relative_error || !err.is_finite() {
            report = GradCheckReport {
                max_relative_error: err,
                worst_index: i,
                analytic: analytic[i],
                numeric,
            };
        }
    }
    report
}
