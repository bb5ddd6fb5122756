//! Qualitative-dynamics instruments: equilibria, linear stability, cobweb
//! traces, bifurcation scans and twin-trajectory divergence rates.

use rayon::prelude::*;
use thiserror::Error;

use crate::dynamics::{integrate, DynamicsError, IntegratorConfig, StateVector};
use crate::systems::{logistic_step, lorenz_field, LogisticParams, LorenzParams};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("twin trajectories coincide exactly at t = {t}; separation has no logarithm")]
    SeparationUnderflow { t: f64 },
    #[error("bifurcation scan produced a non-finite iterate at parameter {param}")]
    NonFiniteState { param: f64 },
}

pub type Result<T> = std::result::Result<T, AnalysisError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stability {
    Stable,
    Unstable,
    Bifurcation,
}

/// Stability of the origin for `x' = a x`.
pub fn classify_linear(a: f64) -> Stability {
    if a < 0.0 {
        Stability::Stable
    } else if a > 0.0 {
        Stability::Unstable
    } else {
        Stability::Bifurcation
    }
}

/// True iff the max-norm of `field(0, point)` is at most `tol`.
pub fn verify_equilibrium<F>(field: F, point: &StateVector, tol: f64) -> bool
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let mut out = vec![0.0; point.dim()];
    field(0.0, point, &mut out);
    out.iter().all(|v| v.abs() <= tol)
}

/// The origin, plus `C± = (±√(b(r−1)), ±√(b(r−1)), r−1)` when `r > 1`.
pub fn lorenz_equilibria(p: LorenzParams) -> Vec<StateVector> {
    let origin = StateVector::new(vec![0.0; 3]).expect("origin is finite");
    if p.r() <= 1.0 {
        return vec![origin];
    }
    let c = (p.b() * (p.r() - 1.0)).sqrt();
    let z = p.r() - 1.0;
    vec![origin, StateVector::new(vec![c, c, z]).expect("finite"), StateVector::new(vec![-c, -c, z]).expect("finite")]
}

/// Convenience wrapper: [`verify_equilibrium`] on the Lorenz field.
pub fn is_lorenz_equilibrium(p: LorenzParams, point: &StateVector, tol: f64) -> bool {
    verify_equilibrium(|_, s, out: &mut [f64]| lorenz_field(p, s, out), point, tol)
}

/// Staircase polyline of graphical iteration for the logistic map.
#[derive(Debug, Clone, PartialEq)]
pub struct CobwebTrace {
    /// `(x0, 0)` followed by alternating vertical and horizontal moves.
    pub vertices: Vec<(f64, f64)>,
    /// Samples of `(x, f(x))` over `[0, 1]`.
    pub curve_samples: Vec<(f64, f64)>,
}

pub const COBWEB_CURVE_SAMPLES: usize = 256;

pub fn cobweb_trace(p: LogisticParams, x0: f64, n: usize) -> Result<CobwebTrace> {
    if !(0.0..=1.0).contains(&x0) {
        return Err(AnalysisError::Domain(format!("x0 must lie in [0, 1], got {x0}")));
    }
    if n == 0 {
        return Err(AnalysisError::Domain("n must be positive".into()));
    }
    let mut vertices = Vec::with_capacity(2 * n + 1);
    vertices.push((x0, 0.0));
    let mut x = x0;
    for _ in 0..n {
        let fx = logistic_step(p, x);
        vertices.push((x, fx));
        vertices.push((fx, fx));
        x = fx;
    }
    let last = (COBWEB_CURVE_SAMPLES - 1) as f64;
    let curve_samples = (0..COBWEB_CURVE_SAMPLES)
        .map(|i| {
            let x = i as f64 / last;
            (x, logistic_step(p, x))
        })
        .collect();
    Ok(CobwebTrace { vertices, curve_samples })
}

/// Post-transient attractor samples over a parameter sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct BifurcationDiagram {
    /// `(parameter, x)` pairs, grouped by parameter in ascending order.
    pub points: Vec<(f64, f64)>,
    pub param_range: (f64, f64),
    pub samples_per_param: usize,
    pub discard: usize,
}

pub const MIN_BIFURCATION_DISCARD: usize = 100;

/// Sweeps `p_steps` evenly spaced parameters over `[p_lo, p_hi]` (a single
/// step uses `p_lo`), iterating `family(param, x)` from `x0`, dropping
/// `discard` transients and keeping the next `keep` iterates.
pub fn bifurcation_scan<F>(
    family: F,
    p_lo: f64,
    p_hi: f64,
    p_steps: usize,
    x0: f64,
    discard: usize,
    keep: usize,
) -> Result<BifurcationDiagram>
where
    F: Fn(f64, f64) -> f64 + Sync,
{
    if !(p_lo < p_hi) {
        return Err(AnalysisError::Domain(format!("need p_lo < p_hi, got [{p_lo}, {p_hi}]")));
    }
    if p_steps == 0 || keep == 0 {
        return Err(AnalysisError::Domain("p_steps and keep must be positive".into()));
    }
    if discard < MIN_BIFURCATION_DISCARD {
        return Err(AnalysisError::Domain(format!(
            "discard must be at least {MIN_BIFURCATION_DISCARD}, got {discard}"
        )));
    }
    let param_at = |i: usize| {
        if p_steps == 1 {
            p_lo
        } else {
            p_lo + (p_hi - p_lo) * i as f64 / (p_steps - 1) as f64
        }
    };
    let per_param: Vec<Result<Vec<(f64, f64)>>> = (0..p_steps)
        .into_par_iter()
        .map(|i| {
            let param = param_at(i);
            let mut x = x0;
            for _ in 0..discard {
                x = family(param, x);
            }
            let mut out = Vec::with_capacity(keep);
            for _ in 0..keep {
                x = family(param, x);
                if !x.is_finite() {
                    return Err(AnalysisError::NonFiniteState { param });
                }
                out.push((param, x));
            }
            Ok(out)
        })
        .collect();
    let mut points = Vec::with_capacity(p_steps * keep);
    for chunk in per_param {
        points.extend(chunk?);
    }
    Ok(BifurcationDiagram { points, param_range: (p_lo, p_hi), samples_per_param: keep, discard })
}

/// Logistic family `(mu, x) -> mu x (1 - x)` for [`bifurcation_scan`].
pub fn logistic_family(mu: f64, x: f64) -> f64 {
    logistic_step(LogisticParams::new(mu.clamp(0.0, 4.0)).expect("clamped"), x)
}

/// Sorts `values` and merges neighbours closer than `radius`; returns one
/// representative (the mean) per cluster.
pub fn distinct_clusters(values: &[f64], radius: f64) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut clusters: Vec<Vec<f64>> = Vec::new();
    for v in sorted {
        match clusters.last_mut() {
            Some(c) if v - c[c.len() - 1] <= radius => c.push(v),
            _ => clusters.push(vec![v]),
        }
    }
    clusters.iter().map(|c| c.iter().sum::<f64>() / c.len() as f64).collect()
}

/// Twin-trajectory separation log and its fitted exponential rate.
#[derive(Debug, Clone, PartialEq)]
pub struct DivergenceReport {
    pub times: Vec<f64>,
    /// Natural log of the Euclidean distance between the twins.
    pub log_separation: Vec<f64>,
    pub fitted_rate: f64,
    pub fit_window: (f64, f64),
}

pub const DIVERGENCE_GRID_POINTS: usize = 2000;
/// Fraction of the attractor diameter beyond which separation is saturated.
pub const SATURATION_FRACTION: f64 = 0.01;

/// Integrates `x0` and `x0 + (delta0, 0, ..)` over `[0, t1]` on a shared
/// uniform grid of [`DIVERGENCE_GRID_POINTS`] samples. Each grid interval is
/// integrated as its own chained segment so both twins land on identical
/// times. The rate is the least-squares slope of log-separation against time,
/// fitted from `t = 0` up to the first sample whose separation exceeds
/// [`SATURATION_FRACTION`] of the reference trajectory's diameter (largest
/// per-coordinate range). A stationary reference imposes no cutoff.
pub fn divergence_rate<F>(
    field: F,
    x0: &StateVector,
    delta0: f64,
    t1: f64,
    config: &IntegratorConfig,
) -> Result<DivergenceReport>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    if !(delta0 > 0.0 && delta0.is_finite()) {
        return Err(AnalysisError::Domain(format!("delta0 must be positive, got {delta0}")));
    }
    if !(t1 > 0.0 && t1.is_finite()) {
        return Err(AnalysisError::Domain(format!("t1 must be positive, got {t1}")));
    }
    config.validate()?;

    let mut perturbed = x0.as_slice().to_vec();
    perturbed[0] += delta0;
    let perturbed = StateVector::new(perturbed)?;

    let last = (DIVERGENCE_GRID_POINTS - 1) as f64;
    let times: Vec<f64> = (0..DIVERGENCE_GRID_POINTS).map(|i| t1 * i as f64 / last).collect();

    let (reference, twin) = rayon::join(
        || sample_on_grid(&field, x0, &times, config),
        || sample_on_grid(&field, &perturbed, &times, config),
    );
    let (reference, twin) = (reference?, twin?);

    let mut log_separation = Vec::with_capacity(times.len());
    let mut separation = Vec::with_capacity(times.len());
    for ((a, b), &t) in reference.iter().zip(&twin).zip(&times) {
        let d = a.iter().zip(b.iter()).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        if d == 0.0 {
            return Err(AnalysisError::SeparationUnderflow { t });
        }
        separation.push(d);
        log_separation.push(d.ln());
    }

    let diameter = (0..x0.dim())
        .map(|k| {
            let (lo, hi) =
                reference.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| (lo.min(s[k]), hi.max(s[k])));
            hi - lo
        })
        .fold(0.0, f64::max);
    let cutoff = if diameter > 0.0 { SATURATION_FRACTION * diameter } else { f64::INFINITY };
    let end = separation.iter().position(|&d| d > cutoff).unwrap_or(separation.len());
    if end < 2 {
        return Err(AnalysisError::Domain(format!(
            "separation saturates immediately (delta0 = {delta0} vs cutoff {cutoff}); use a smaller delta0"
        )));
    }
    let fitted_rate = least_squares_slope(&times[..end], &log_separation[..end]);

    Ok(DivergenceReport { times: times.clone(), log_separation, fitted_rate, fit_window: (times[0], times[end - 1]) })
}

fn sample_on_grid<F>(field: &F, x0: &StateVector, times: &[f64], config: &IntegratorConfig) -> Result<Vec<StateVector>>
where
    F: Fn(f64, &[f64], &mut [f64]),
{
    let mut out = Vec::with_capacity(times.len());
    out.push(x0.clone());
    let mut state = x0.clone();
    for w in times.windows(2) {
        let segment = integrate(field, &state, w[0], w[1], config)?;
        state = segment.last_state().clone();
        out.push(state.clone());
    }
    Ok(out)
}

/// Ordinary least-squares slope of `y` on `x`.
pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{linear_solution, Linear1DParams};
    use proptest::prelude::*;

    fn sv(v: &[f64]) -> StateVector {
        StateVector::from_slice(v).unwrap()
    }

    #[test]
    fn linear_classification() {
        assert_eq!(classify_linear(-0.5), Stability::Stable);
        assert_eq!(classify_linear(0.0), Stability::Bifurcation);
        assert_eq!(classify_linear(-0.0), Stability::Bifurcation);
        assert_eq!(classify_linear(1e-300), Stability::Unstable);
    }

    #[test]
    fn classification_agrees_with_closed_form() {
        for i in -40..=40 {
            let a = i as f64 * 0.05;
            if a == 0.0 {
                continue;
            }
            let decays = linear_solution(Linear1DParams { a }, 1.0, 10.0).abs() < 1.0;
            assert_eq!(classify_linear(a) == Stability::Stable, decays, "a = {a}");
        }
    }

    #[test]
    fn lorenz_equilibrium_checks() {
        let p = LorenzParams::CLASSIC;
        assert!(is_lorenz_equilibrium(p, &sv(&[0.0, 0.0, 0.0]), 1e-12));
        assert!(is_lorenz_equilibrium(p, &sv(&[8.485281, 8.485281, 27.0]), 1e-5));
        assert!(!is_lorenz_equilibrium(p, &sv(&[1.0, 1.0, 1.0]), 1e-6));
    }

    #[test]
    fn lorenz_equilibria_by_regime() {
        let below = LorenzParams::new(10.0, 0.5, 8.0 / 3.0).unwrap();
        assert_eq!(lorenz_equilibria(below), vec![sv(&[0.0, 0.0, 0.0])]);
        let boundary = LorenzParams::new(10.0, 1.0, 8.0 / 3.0).unwrap();
        assert_eq!(lorenz_equilibria(boundary), vec![sv(&[0.0, 0.0, 0.0])]);
        let eq = lorenz_equilibria(LorenzParams::CLASSIC);
        assert_eq!(eq.len(), 3);
        assert!((eq[1][0] - 8.485281).abs() < 1e-6 && (eq[2][0] + 8.485281).abs() < 1e-6);
        assert_eq!(eq[1][2], 27.0);
    }

    #[test]
    fn cobweb_first_vertices() {
        let tr = cobweb_trace(LogisticParams::COBWEB, 0.2, 10).unwrap();
        assert_eq!(tr.vertices.len(), 21);
        assert_eq!(tr.vertices[0], (0.2, 0.0));
        let x1 = 3.8282 * 0.2 * 0.8;
        let x2 = 3.8282 * x1 * (1.0 - x1);
        assert!((tr.vertices[1].1 - 0.612512).abs() < 1e-12);
        assert_eq!(tr.vertices[1].0, 0.2);
        assert_eq!(tr.vertices[2], (tr.vertices[1].1, tr.vertices[1].1));
        assert_eq!(tr.vertices[3].0, tr.vertices[2].0);
        assert!((tr.vertices[3].1 - x2).abs() < 1e-12);
        assert!(tr.curve_samples.len() >= 256);
        assert_eq!(tr.curve_samples[0].0, 0.0);
        assert_eq!(tr.curve_samples.last().unwrap().0, 1.0);
    }

    #[test]
    fn cobweb_fixed_points() {
        let tr = cobweb_trace(LogisticParams::new(2.0).unwrap(), 0.5, 5).unwrap();
        assert!(tr.vertices[1..].iter().all(|&v| v == (0.5, 0.5)));
        let tr = cobweb_trace(LogisticParams::new(4.0).unwrap(), 0.0, 5).unwrap();
        assert!(tr.vertices.iter().all(|&v| v == (0.0, 0.0)));
    }

    #[test]
    fn cobweb_rejects_out_of_domain() {
        assert!(cobweb_trace(LogisticParams::COBWEB, 1.5, 3).is_err());
        assert!(cobweb_trace(LogisticParams::COBWEB, -0.1, 3).is_err());
    }

    fn scan_at(mu: f64) -> Vec<f64> {
        bifurcation_scan(logistic_family, mu, mu + 1e-12, 1, 0.3, 500, 10)
            .unwrap()
            .points
            .into_iter()
            .map(|(_, x)| x)
            .collect()
    }

    #[test]
    fn bifurcation_examples() {
        assert!(scan_at(0.5).iter().all(|x| x.abs() < 1e-6));
        assert!(scan_at(2.0).iter().all(|x| (x - 0.5).abs() < 1e-9));
        let c = distinct_clusters(&scan_at(3.2), 1e-4);
        assert_eq!(c.len(), 2);
        // Period-2 cycle ((mu+1) ± sqrt((mu+1)(mu-3))) / (2 mu).
        let root = (4.2f64 * 0.2).sqrt();
        assert!((c[0] - (4.2 - root) / 6.4).abs() < 1e-6 && (c[0] - 0.513045).abs() < 1e-6);
        assert!((c[1] - (4.2 + root) / 6.4).abs() < 1e-6 && (c[1] - 0.799455).abs() < 1e-6);
    }

    #[test]
    fn period_doubling_onset() {
        let run = |mu: f64| {
            let d = bifurcation_scan(logistic_family, mu, mu + 1e-12, 1, 0.3, 20_000, 64).unwrap();
            distinct_clusters(&d.points.iter().map(|p| p.1).collect::<Vec<_>>(), 1e-4).len()
        };
        assert_eq!(run(2.95), 1);
        assert_eq!(run(3.05), 2);
    }

    #[test]
    fn bifurcation_validation() {
        assert!(bifurcation_scan(logistic_family, 3.0, 2.0, 5, 0.3, 500, 10).is_err());
        assert!(bifurcation_scan(logistic_family, 2.0, 3.0, 5, 0.3, 99, 10).is_err());
        let d = bifurcation_scan(logistic_family, 2.5, 4.0, 31, 0.3, 200, 20).unwrap();
        assert_eq!(d.points.len(), 31 * 20);
        assert!(d.points.iter().all(|&(_, x)| (0.0..=1.0).contains(&x)));
        assert_eq!(d.points[0].0, 2.5);
        assert_eq!(d.points.last().unwrap().0, 4.0);
    }

    #[test]
    fn divergence_on_linear_field() {
        let cfg = IntegratorConfig::with_tolerances(1e-8, 1e-8);
        let field = |_: f64, x: &[f64], dx: &mut [f64]| dx[0] = 0.7 * x[0];
        let rep = divergence_rate(field, &sv(&[1.0]), 1e-8, 10.0, &cfg).unwrap();
        assert!((rep.fitted_rate - 0.7).abs() <= 0.05 * 0.7, "{}", rep.fitted_rate);
        assert_eq!(rep.times.len(), DIVERGENCE_GRID_POINTS);
        assert!(rep.times.windows(2).all(|w| w[1] > w[0]));
        let half = divergence_rate(field, &sv(&[1.0]), 0.5e-8, 10.0, &cfg).unwrap();
        assert!((half.fitted_rate - rep.fitted_rate).abs() <= 0.1 * rep.fitted_rate);
    }

    #[test]
    fn divergence_on_zero_field() {
        let cfg = IntegratorConfig::default();
        let rep = divergence_rate(|_, _, dx: &mut [f64]| dx.fill(0.0), &sv(&[1.0, 2.0]), 1e-8, 5.0, &cfg).unwrap();
        assert!(rep.fitted_rate.abs() < 1e-6);
    }

    #[test]
    fn divergence_detects_coincident_twins() {
        let cfg = IntegratorConfig::default();
        // 1e20 + 1e-8 rounds back to 1e20.
        let err = divergence_rate(|_, _, dx: &mut [f64]| dx.fill(0.0), &sv(&[1e20]), 1e-8, 1.0, &cfg);
        assert!(matches!(err, Err(AnalysisError::SeparationUnderflow { .. })));
    }

    #[test]
    fn divergence_on_lorenz_is_positive() {
        let cfg = IntegratorConfig::with_tolerances(1e-10, 1e-10);
        let p = LorenzParams::CLASSIC;
        let rep = divergence_rate(
            |_, s, out: &mut [f64]| lorenz_field(p, s, out),
            &sv(&[15.0, 20.0, 30.0]),
            1e-8,
            40.0,
            &cfg,
        )
        .unwrap();
        assert!(rep.fitted_rate > 0.5, "{}", rep.fitted_rate);
    }

    proptest! {
        #[test]
        fn cobweb_staircase_is_continuous(mu in 0.0f64..=4.0, x0 in 0.0f64..=1.0) {
            let p = LogisticParams::new(mu).unwrap();
            let tr = cobweb_trace(p, x0, 20).unwrap();
            let v = &tr.vertices;
            for k in 1..v.len() - 1 {
                if k % 2 == 1 {
                    // vertical move landed on the curve; next move is horizontal
                    prop_assert_eq!(v[k].1, v[k + 1].1);
                    prop_assert!((v[k].1 - logistic_step(p, v[k].0)).abs() <= 1e-12);
                } else {
                    prop_assert_eq!(v[k].1, v[k + 1].0);
                    prop_assert!((v[k].0 - v[k].1).abs() <= 1e-12);
                }
            }
        }

        #[test]
        fn lorenz_equilibria_verify(sigma in 0.1f64..20.0, r in 0.1f64..60.0, b in 0.1f64..5.0) {
            let p = LorenzParams::new(sigma, r, b).unwrap();
            for e in lorenz_equilibria(p) {
                prop_assert!(is_lorenz_equilibrium(p, &e, 1e-9));
            }
        }
    }
}
