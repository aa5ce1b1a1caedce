//! Curvature of the model metrics, computed two ways: closed forms in the
//! profile `F` and a finite-difference oracle in an explicit chart.
//!
//! For `g = dr^2/F + F dtheta^2 + r^2 g_flat` the curvature operator is
//! diagonal on frame 2-planes with
//!
//! ```text
//! K_12 = -F''/2,   K_1i = K_2i = -F'/(2r),   K_ij = -F/r^2.
//! ```

pub mod fd;
pub mod phi;
pub mod tensor;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::metrics::{self, CutoffSpec, FilledEnd, MetricKind, ProfileMetric};
use crate::quad;

pub use fd::{riemann_fd, ChartMetric, FdOptions, PolarChart, RadialChart, Stencil};
pub use phi::{phi_operator, phi_profile, Perturbed, PhiReport};
pub use tensor::{CurvaturePoint, PlaneCurvature, Riemann};

/// Sectional curvatures of frame planes for the profile `[F, F', F'']` at `r`.
pub fn profile_sectionals(n: usize, f: [f64; 3], r: f64) -> DMatrix<f64> {
    let [f0, f1, f2] = f;
    DMatrix::from_fn(n, n, |a, b| match (a.min(b), a.max(b)) {
        (x, y) if x == y => 0.0,
        (0, 1) => -0.5 * f2,
        (0, _) | (1, _) => -0.5 * f1 / r,
        _ => -f0 / (r * r),
    })
}

/// Closed-form curvature of any profile metric at `r`.
pub fn curvature_closed_form(g: &ProfileMetric, r: f64) -> Result<CurvaturePoint> {
    let (lo, hi) = g.radial_domain();
    if !(r >= lo && r <= hi && r > 0.0) {
        return Err(Error::OutOfRange {
            what: "radius",
            value: r,
            range: format!("[{lo}, {hi}]"),
        });
    }
    let k = profile_sectionals(g.n(), g.f(r), r);
    Ok(CurvaturePoint::from_riemann(r, Riemann::from_sectionals(&k)))
}

/// Black-hole sectional curvatures at `r >= r_+` directly from `(n, m)`:
///
/// ```text
/// K_12 = -1 + (n-3)(n-2) m / r^{n-1}
/// K_1i = K_2i = -1 - (n-3) m / r^{n-1}
/// K_ij = -1 + 2m / r^{n-1}
/// ```
pub fn sectional_closed_form(n: usize, m: f64, r: f64) -> Result<CurvaturePoint> {
    let p = metrics::bh_params(n, m, None)?;
    if !(r >= p.r_plus) {
        return Err(Error::OutOfRange {
            what: "radius",
            value: r,
            range: format!("[r_+, inf) = [{}, inf)", p.r_plus),
        });
    }
    let nf = n as f64;
    let mu = m / r.powi(n as i32 - 1);
    let k12 = -1.0 + (nf - 3.0) * (nf - 2.0) * mu;
    let k1i = -1.0 - (nf - 3.0) * mu;
    let kij = -1.0 + 2.0 * mu;
    let k = DMatrix::from_fn(n, n, |a, b| match (a.min(b), a.max(b)) {
        (x, y) if x == y => 0.0,
        (0, 1) => k12,
        (0, _) | (1, _) => k1i,
        _ => kij,
    });
    Ok(CurvaturePoint::from_riemann(r, Riemann::from_sectionals(&k)))
}

/// Finite-difference curvature in the `(r, theta, x)` chart with step `h`.
pub fn curvature_fd(g: &ProfileMetric, r: f64, h: f64) -> Result<CurvaturePoint> {
    curvature_fd_with(
        g,
        r,
        &FdOptions {
            h,
            ..FdOptions::at_scale(r)
        },
    )
}

pub fn curvature_fd_with(g: &ProfileMetric, r: f64, opts: &FdOptions) -> Result<CurvaturePoint> {
    let (lo, _) = g.radial_domain();
    let reach = r - opts.stencil.reach() * opts.h;
    if !(reach > lo) || !(reach > 0.0) {
        return Err(Error::StencilOutsideDomain { reach, r_lo: lo });
    }
    let chart = RadialChart { metric: g };
    let mut x = vec![0.0; g.n()];
    x[0] = r;
    Ok(CurvaturePoint::from_riemann(r, riemann_fd(&chart, &x, opts)?))
}

/// Finite-difference curvature in the polar chart around the horizon, at the
/// point of radius `r`.
pub fn curvature_fd_polar(g: &ProfileMetric, r: f64, opts: &FdOptions) -> Result<CurvaturePoint> {
    let chart = PolarChart::new(g)?;
    let mut x = vec![0.0; g.n()];
    x[0] = chart.rho_of_r(r);
    Ok(CurvaturePoint::from_riemann(r, riemann_fd(&chart, &x, opts)?))
}

/// Finite-difference curvature, switching to the polar chart within a
/// quarter horizon radius of the horizon.
pub fn curvature_fd_auto(g: &ProfileMetric, r: f64) -> Result<CurvaturePoint> {
    match g.horizon() {
        Some(rp) if r < 1.25 * rp => {
            let opts = FdOptions::at_scale(rp);
            curvature_fd_polar(g, r, &opts)
        }
        _ => curvature_fd_with(g, r, &FdOptions::at_scale(r)),
    }
}

/// Extremes of the sectional curvature over a grid, against the limits
/// `-1 - (n-3)/2 <= K <= -1 + (n-3)(n-2)/2`.
#[derive(Debug, Clone, Serialize)]
pub struct CurvatureBounds {
    pub k_min: f64,
    pub k_max: f64,
    pub lower: f64,
    pub upper: f64,
}

impl CurvatureBounds {
    /// Amount by which the extremes leave the limits (0 if inside).
    pub fn excess(&self) -> f64 {
        (self.lower - self.k_min).max(self.k_max - self.upper).max(0.0)
    }

    pub fn within(&self, slack: f64) -> bool {
        self.k_min >= self.lower - slack && self.k_max <= self.upper + slack
    }
}

pub fn curvature_bounds(g: &ProfileMetric, grid: &[f64]) -> Result<CurvatureBounds> {
    if g.kind() == MetricKind::Cusp {
        return Err(Error::Domain("curvature bounds need a black-hole or glued metric".into()));
    }
    if grid.is_empty() {
        return Err(Error::Domain("empty radius grid".into()));
    }
    let nf = g.n() as f64;
    let mut b = CurvatureBounds {
        k_min: f64::INFINITY,
        k_max: f64::NEG_INFINITY,
        lower: -1.0 - (nf - 3.0) / 2.0,
        upper: -1.0 + (nf - 3.0) * (nf - 2.0) / 2.0,
    };
    for &r in grid {
        let p = curvature_closed_form(g, r)?;
        b.k_min = b.k_min.min(p.k_min());
        b.k_max = b.k_max.max(p.k_max());
    }
    Ok(b)
}

/// `count` radii spaced evenly in `log r` over `[a, b]`.
pub fn log_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..count)
        .map(|i| match i {
            0 => a,
            i if i == count - 1 => b,
            i => (la + (lb - la) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

/// Supremum of the finite-difference Einstein residual over `[R/2, 2R]`.
pub fn annulus_sup_residual(g: &ProfileMetric, samples: usize) -> Result<f64> {
    let metrics::Profile::Glued { r_match, .. } = g.profile() else {
        return Err(Error::Domain("annulus residual needs a glued metric".into()));
    };
    let grid = log_grid(0.5 * r_match, 2.0 * r_match, samples.max(2));
    let vals: Result<Vec<f64>> = grid
        .par_iter()
        .map(|&r| curvature_fd_with(g, r, &FdOptions::at_scale(r)).map(|p| p.einstein_residual))
        .collect();
    Ok(vals?.into_iter().fold(0.0, f64::max))
}

/// Least-squares fit of `log y` against `log x`; returns `(slope, intercept)`.
pub fn loglog_fit(xs: &[f64], ys: &[f64], min_points: usize) -> Result<(f64, f64)> {
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < min_points {
        return Err(Error::DegenerateFit(format!(
            "{} points, at least {min_points} needed",
            xs.len()
        )));
    }
    if xs.iter().chain(ys).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateFit("log-log fit needs positive finite data".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / k;
    let my = ly.iter().sum::<f64>() / k;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(Error::DegenerateFit("all abscissae coincide".into()));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub n: usize,
    pub radii: Vec<f64>,
    pub sup_residual: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
}

/// Glued metric of a rectangular end matched at `r_match`.
pub fn glued_model(n: usize, m: f64, r_match: f64, cutoff: CutoffSpec) -> Result<ProfileMetric> {
    FilledEnd::rectangular(n, m, r_match, 1.0)?.glue(cutoff)
}

/// Sup-residual over the gluing annulus for each matching radius, and the
/// log-log slope against `R`.
pub fn residual_decay(n: usize, m: f64, radii: &[f64], cutoff: CutoffSpec, samples: usize) -> Result<DecayFit> {
    if radii.len() < 3 {
        return Err(Error::DegenerateFit(format!(
            "{} matching radii, at least 3 needed",
            radii.len()
        )));
    }
    let rp = metrics::horizon_radius(n, m);
    if let Some(&bad) = radii.iter().find(|&&r| !(r > 4.0 * rp)) {
        return Err(Error::OutOfRange {
            what: "matching radius",
            value: bad,
            range: format!("(4 r_+, inf) = ({}, inf)", 4.0 * rp),
        });
    }
    let sups: Result<Vec<f64>> = radii
        .par_iter()
        .map(|&r| glued_model(n, m, r, cutoff).and_then(|g| annulus_sup_residual(&g, samples)))
        .collect();
    let sups = sups?;
    let (slope, intercept) = loglog_fit(radii, &sups, 3)?;
    Ok(DecayFit {
        n,
        radii: radii.to_vec(),
        sup_residual: sups,
        slope,
        intercept,
    })
}

/// Least-squares slope of `log y` against `log R`, requiring 3 points.
pub fn residual_decay_slope(radii: &[f64], sup_residual: &[f64]) -> Result<f64> {
    loglog_fit(radii, sup_residual, 3).map(|f| f.0)
}

/// `int |W|^p dV` over the whole model. The cusp region of a glued metric
/// has `W = 0`, so the integral runs over `[r_+, 2R]` there.
pub fn weyl_lp(g: &ProfileMetric, p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::OutOfRange {
            what: "exponent p",
            value: p,
            range: "[1, inf)".into(),
        });
    }
    let n = g.n();
    let area = g.cross_section_area();
    let weyl = |r: f64| -> f64 {
        let k = profile_sectionals(n, g.f(r), r);
        Riemann::from_sectionals(&k).weyl().norm_sq_bivector().sqrt()
    };
    let density = |r: f64| weyl(r).powf(p) * g.volume_density(r);
    match g.profile() {
        metrics::Profile::Cusp => Ok(0.0),
        metrics::Profile::Glued { m, r_match, .. } => {
            let rp = metrics::horizon_radius(n, m);
            let pieces = [rp, 0.5 * r_match, 2.0 * r_match];
            let total: f64 = pieces
                .windows(2)
                .map(|w| quad::integrate(density, w[0], w[1], 1e-11))
                .sum();
            Ok(area * total)
        }
        metrics::Profile::BlackHole { m } => {
            if n == 3 {
                return Ok(0.0);
            }
            if p <= 1.0 {
                return Err(Error::Divergent(format!(
                    "|W|^p r^(n-2) ~ r^(n-2-(n-1)p) is not integrable at infinity for p = {p}"
                )));
            }
            let rp = metrics::horizon_radius(n, m);
            let near = quad::integrate(density, rp, 2.0 * rp, 1e-11);
            let far = quad::integrate_to_infinity(density, 2.0 * rp, 1e-11);
            Ok(area * (near + far))
        }
    }
}

/// `sup |W|` over `[r_+, r_+ + width]`, closed form, on a grid.
pub fn sup_weyl_near_horizon(g: &ProfileMetric, width: f64, samples: usize) -> Result<f64> {
    let rp = g
        .horizon()
        .ok_or_else(|| Error::Domain("metric has no horizon".into()))?;
    let mut best = 0.0f64;
    for i in 0..samples.max(2) {
        let r = rp + width * i as f64 / (samples.max(2) - 1) as f64;
        best = best.max(curvature_closed_form(g, r)?.weyl_norm);
    }
    Ok(best)
}
