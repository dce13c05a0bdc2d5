//! Central finite-difference checks for analytic gradients.

use rand::seq::index::sample;
use rand::Rng;

/// Gradients smaller than this are compared in absolute terms.
pub const GRAD_FLOOR: f64 = 1e-6;

/// Default step for central differences.
pub const FD_STEP: f64 = 1e-5;

/// `|a − n| / max(|a|, |n|, GRAD_FLOOR)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(GRAD_FLOOR)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub coords: Vec<usize>,
    pub analytic: Vec<f64>,
    pub numeric: Vec<f64>,
    pub max_rel_error: f64,
}

/// Compares `analytic` against central differences of `loss` at `count`
/// distinct random coordinates of `params` (all of them if fewer).
pub fn check_gradient<R, F>(params: &[f64], analytic: &[f64], count: usize, h: f64, rng: &mut R, mut loss: F) -> GradCheck
where
    R: Rng + ?Sized,
    F: FnMut(&[f64]) -> f64,
{
    assert_eq!(params.len(), analytic.len(), "gradient length");
    let coords: Vec<usize> = sample(rng, params.len(), count.min(params.len())).into_vec();
    let mut p = params.to_vec();
    let mut numeric = Vec::with_capacity(coords.len());
    let mut picked = Vec::with_capacity(coords.len());
    let mut worst: f64 = 0.0;
    for &i in &coords {
        p[i] = params[i] + h;
        let up = loss(&p);
        p[i] = params[i] - h;
        let down = loss(&p);
        p[i] = params[i];
        let n = (up - down) / (2.0 * h);
        worst = worst.max(relative_error(analytic[i], n));
        numeric.push(n);
        picked.push(analytic[i]);
    }
    GradCheck {
        coords,
        analytic: picked,
        numeric,
        max_rel_error: worst,
    }
}
