//! Cohomogeneity-one model metrics.
//!
//! Every model here has the form
//!
//! ```text
//! g = F(r)^{-1} dr^2 + F(r) dtheta^2 + r^2 g_flat
//! ```
//!
//! with `F = r^2` for the hyperbolic cusp, `F = V = r^2 - 2m r^{3-n}` for the
//! toral black hole and `F = r^2 - 2m chi(r) r^{3-n}` for the glued metric.
//! For the cusp the `theta` circle is just one more flat direction.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{complete_basis, curve_length, CompletedBasis, FillingCurve, Lattice};

/// Default mass; gives `r_+ = 1`.
pub const DEFAULT_MASS: f64 = 0.5;

/// Relative tolerance on the boundary Gram match at the seam.
pub const SEAM_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Cusp,
    BlackHole,
    Glued,
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension n = {n} must be at least 3")));
    }
    Ok(())
}

/// `V(r) = r^2 - 2m r^{-(n-3)}`.
pub fn v_profile(n: usize, m: f64, r: f64) -> Result<f64> {
    check_n(n)?;
    if !(r > 0.0) {
        return Err(Error::Domain(format!("radius r = {r} must be positive")));
    }
    Ok(v_and_derivs(n, m, r)[0])
}

/// `[V, V', V'']` at `r`.
fn v_and_derivs(n: usize, m: f64, r: f64) -> [f64; 3] {
    let k = 3.0 - n as f64; // exponent of the mass term
    let t = 2.0 * m * r.powf(k);
    [
        r * r - t,
        2.0 * r - k * t / r,
        2.0 - k * (k - 1.0) * t / (r * r),
    ]
}

pub fn horizon_radius(n: usize, m: f64) -> f64 {
    (2.0 * m).powf(1.0 / (n as f64 - 1.0))
}

/// Period of `theta` that closes the horizon smoothly: `4 pi / ((n-1) r_+)`.
pub fn beta_of_mass(n: usize, m: f64) -> f64 {
    4.0 * PI / ((n as f64 - 1.0) * horizon_radius(n, m))
}

/// Twist data of a filled end: the completed basis of the boundary torus and
/// the rotation fractions `<b_i, sigma>/|sigma|^2` of each `b_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Twist {
    pub basis: CompletedBasis,
    pub fractions: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlackHoleParams {
    pub n: usize,
    pub m: f64,
    pub r_plus: f64,
    pub beta: f64,
    pub twist: Option<Twist>,
}

pub fn bh_params(n: usize, m: f64, twist: Option<Twist>) -> Result<BlackHoleParams> {
    check_n(n)?;
    if !(m > 0.0) || !m.is_finite() {
        return Err(Error::Domain(format!("mass m = {m} must be positive")));
    }
    if let Some(t) = &twist {
        if t.basis.dim() != n - 1 || t.fractions.len() != n - 2 {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                got: t.basis.dim(),
            });
        }
    }
    Ok(BlackHoleParams {
        n,
        m,
        r_plus: horizon_radius(n, m),
        beta: beta_of_mass(n, m),
        twist,
    })
}

/// Radius `R > r_+` at which the `theta` circle has length `l_sigma`:
/// `sqrt(V(R)) beta = l_sigma`.
pub fn match_radius(n: usize, m: f64, l_sigma: f64) -> Result<f64> {
    check_n(n)?;
    if !(l_sigma > 0.0) || !l_sigma.is_finite() {
        return Err(Error::Domain(format!("curve length {l_sigma} must be positive")));
    }
    if !(m > 0.0) {
        return Err(Error::Domain(format!("mass m = {m} must be positive")));
    }
    let rp = horizon_radius(n, m);
    let beta = beta_of_mass(n, m);
    let target = (l_sigma / beta).powi(2);
    if n == 3 {
        return Ok((target + 2.0 * m).sqrt());
    }
    // V increases from 0 at r_+; V(r) <= r^2 so the root is >= sqrt(target).
    let (mut lo, mut hi) = (rp, rp.max(target.sqrt()) * 2.0);
    while v_and_derivs(n, m, hi)[0] < target {
        hi *= 2.0;
    }
    let mut r = 0.5 * (lo + hi);
    for _ in 0..200 {
        let [v, dv, _] = v_and_derivs(n, m, r);
        let res = v - target;
        if res.abs() <= 1e-15 * target {
            break;
        }
        if res > 0.0 {
            hi = r;
        } else {
            lo = r;
        }
        let newton = r - res / dv;
        r = if newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (hi - lo) <= 4.0 * f64::EPSILON * r {
            break;
        }
    }
    Ok(r)
}

/// Smooth step `S: [0,1] -> [0,1]` used by the cutoff `chi`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CutoffShape {
    /// `psi(x) / (psi(x) + psi(1-x))` with `psi(x) = exp(-1/x)`; C-infinity.
    #[default]
    Smooth,
    /// `6x^5 - 15x^4 + 10x^3`; C^2 at the ends.
    Quintic,
}

fn psi(x: f64) -> [f64; 3] {
    if x <= 0.0 {
        return [0.0; 3];
    }
    let p = (-1.0 / x).exp();
    let x2 = x * x;
    [p, p / x2, p * (1.0 - 2.0 * x) / (x2 * x2)]
}

impl CutoffShape {
    /// `[S, S', S'']` at `x`, clamped outside `[0, 1]`.
    pub fn step(self, x: f64) -> [f64; 3] {
        if x <= 0.0 {
            return [0.0; 3];
        }
        if x >= 1.0 {
            return [1.0, 0.0, 0.0];
        }
        match self {
            CutoffShape::Quintic => {
                let x2 = x * x;
                [
                    x2 * x * (10.0 - 15.0 * x + 6.0 * x2),
                    30.0 * x2 * (1.0 - x) * (1.0 - x),
                    60.0 * x * (1.0 - x) * (1.0 - 2.0 * x),
                ]
            }
            CutoffShape::Smooth => {
                let [a, a1, a2] = psi(x);
                let [b, b1, b2] = psi(1.0 - x);
                // derivatives of psi(1-x) in x
                let (bx, bxx) = (-b1, b2);
                let d = a + b;
                let num = a1 * b - a * bx;
                let d1 = a1 + bx;
                let num1 = a2 * b - a * bxx;
                [a / d, num / (d * d), (num1 * d - 2.0 * num * d1) / (d * d * d)]
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct CutoffSpec {
    pub shape: CutoffShape,
}

impl CutoffSpec {
    /// `[chi, chi', chi'']` for `chi(r) = S(log(2R/r) / log 4)`.
    pub fn chi(&self, r_match: f64, r: f64) -> [f64; 3] {
        let ln4 = 4f64.ln();
        let x = (2.0 * r_match / r).ln() / ln4;
        let dx = -1.0 / (r * ln4);
        let ddx = 1.0 / (r * r * ln4);
        let [s, s1, s2] = self.shape.step(x);
        [s, s1 * dx, s2 * dx * dx + s1 * ddx]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlueSpec {
    pub r_match: f64,
    pub cutoff: CutoffSpec,
}

/// Which profile function `F` the metric uses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Cusp,
    BlackHole { m: f64 },
    Glued { m: f64, r_match: f64, cutoff: CutoffSpec },
}

/// Flat cross-section data.
#[derive(Debug, Clone, PartialEq)]
pub enum CrossSection {
    /// `T^{n-1}` with Gram `r^2 G`.
    Torus(Lattice),
    /// `S^1_beta x T^{n-2}`, core Gram `r^2 G_core`, optionally twisted.
    Filled {
        beta: f64,
        core: Lattice,
        twist: Option<Twist>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileMetric {
    n: usize,
    profile: Profile,
    r_lo: f64,
    r_hi: f64,
    cross_section: CrossSection,
}

impl ProfileMetric {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> MetricKind {
        match self.profile {
            Profile::Cusp => MetricKind::Cusp,
            Profile::BlackHole { .. } => MetricKind::BlackHole,
            Profile::Glued { .. } => MetricKind::Glued,
        }
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn radial_domain(&self) -> (f64, f64) {
        (self.r_lo, self.r_hi)
    }

    pub fn cross_section(&self) -> &CrossSection {
        &self.cross_section
    }

    pub fn mass(&self) -> Option<f64> {
        match self.profile {
            Profile::Cusp => None,
            Profile::BlackHole { m } | Profile::Glued { m, .. } => Some(m),
        }
    }

    /// Horizon radius for black-hole and glued metrics.
    pub fn horizon(&self) -> Option<f64> {
        self.mass().map(|m| horizon_radius(self.n, m))
    }

    pub fn beta(&self) -> Option<f64> {
        match &self.cross_section {
            CrossSection::Filled { beta, .. } => Some(*beta),
            CrossSection::Torus(_) => None,
        }
    }

    /// `[F, F', F'']` at `r`.
    pub fn f(&self, r: f64) -> [f64; 3] {
        match self.profile {
            Profile::Cusp => [r * r, 2.0 * r, 2.0],
            Profile::BlackHole { m } => v_and_derivs(self.n, m, r),
            Profile::Glued { m, r_match, cutoff } => {
                if r <= 0.5 * r_match {
                    v_and_derivs(self.n, m, r)
                } else if r >= 2.0 * r_match {
                    [r * r, 2.0 * r, 2.0]
                } else {
                    let [c, c1, c2] = cutoff.chi(r_match, r);
                    let k = 3.0 - self.n as f64;
                    let p = 2.0 * m * r.powf(k);
                    let p1 = k * p / r;
                    let p2 = k * (k - 1.0) * p / (r * r);
                    [
                        r * r - c * p,
                        2.0 * r - (c1 * p + c * p1),
                        2.0 - (c2 * p + 2.0 * c1 * p1 + c * p2),
                    ]
                }
            }
        }
    }

    pub fn g_rr(&self, r: f64) -> f64 {
        1.0 / self.f(r)[0]
    }

    pub fn g_theta(&self, r: f64) -> f64 {
        self.f(r)[0]
    }

    pub fn warp(&self, r: f64) -> f64 {
        r * r
    }

    /// `F(r_+ + eps) / eps`, free of cancellation, for points where the
    /// profile agrees with the black hole.
    pub fn horizon_quotient(&self, eps: f64) -> Option<f64> {
        let m = self.mass()?;
        let rp = horizon_radius(self.n, m);
        if let Profile::Glued { r_match, .. } = self.profile {
            if rp + eps > 0.5 * r_match {
                return None;
            }
        }
        let r = rp + eps;
        // r^{n-1} - r_+^{n-1} = eps * sum_k r^k r_+^{n-2-k}
        let sum: f64 = (0..self.n - 1)
            .map(|k| r.powi(k as i32) * rp.powi((self.n - 2 - k) as i32))
            .sum();
        Some(r.powf(3.0 - self.n as f64) * sum)
    }

    /// Diagonal metric components in the chart `(r, theta, x_1..x_{n-2})`
    /// with the flat factor orthonormalized at unit radius.
    pub fn chart_diagonal(&self, r: f64) -> Vec<f64> {
        let f = self.f(r)[0];
        let mut d = vec![r * r; self.n];
        d[0] = 1.0 / f;
        d[1] = f;
        d
    }

    /// Coordinate volume of the cross-section at unit warp.
    pub fn cross_section_area(&self) -> f64 {
        match &self.cross_section {
            CrossSection::Torus(l) => l.area(),
            CrossSection::Filled { beta, core, .. } => beta * core.area(),
        }
    }

    /// `sqrt(g_rr g_theta) r^{n-2}`; volume per unit cross-section area.
    pub fn volume_density(&self, r: f64) -> f64 {
        r.powi(self.n as i32 - 2)
    }

    /// Gram of the level torus at radius `r`, in the basis the cross-section
    /// was specified in (the boundary basis `v_i` for twisted filled ends).
    pub fn torus_gram_at(&self, r: f64) -> DMatrix<f64> {
        match &self.cross_section {
            CrossSection::Torus(l) => l.gram() * (r * r),
            CrossSection::Filled { beta, core, twist } => {
                let f = self.f(r)[0].max(0.0);
                let s2 = beta * beta * f;
                let d = self.n - 1;
                match twist {
                    None => {
                        let mut g = DMatrix::zeros(d, d);
                        g[(0, 0)] = s2;
                        for i in 1..d {
                            for j in 1..d {
                                g[(i, j)] = r * r * core.gram()[(i - 1, j - 1)];
                            }
                        }
                        g
                    }
                    Some(t) => {
                        let mut c = vec![1.0];
                        c.extend_from_slice(&t.fractions);
                        let mut g = DMatrix::from_fn(d, d, |i, j| c[i] * c[j] * s2);
                        for i in 1..d {
                            for j in 1..d {
                                g[(i, j)] += r * r * core.gram()[(i - 1, j - 1)];
                            }
                        }
                        let b = t.basis.matrix().map(|x| x as f64);
                        let binv = b.try_inverse().expect("unimodular");
                        binv.transpose() * g * binv
                    }
                }
            }
        }
    }

    /// `lambda(r) = sqrt(V(r) / V(R))`.
    pub fn lambda_at(&self, r: f64, r_match: f64) -> f64 {
        (self.f(r)[0].max(0.0) / self.f(r_match)[0]).sqrt()
    }

    /// Geodesic distance between two levels, `int dr / sqrt(F)`.
    pub fn radial_distance(&self, r0: f64, r1: f64) -> f64 {
        if r1 < r0 {
            return -self.radial_distance(r1, r0);
        }
        // r = r0 + u^2 removes the square-root singularity at a horizon
        let u1 = (r1 - r0).sqrt();
        crate::quad::integrate(
            |u| {
                let f = self.f(r0 + u * u)[0];
                if f > 0.0 {
                    2.0 * u / f.sqrt()
                } else {
                    0.0
                }
            },
            0.0,
            u1,
            1e-12,
        )
    }
}

/// Hyperbolic cusp `r^{-2} dr^2 + r^2 g_T` over `r in (0, inf)`.
pub fn cusp_metric(n: usize, l: &Lattice) -> Result<ProfileMetric> {
    check_n(n)?;
    if l.dim() != n - 1 {
        return Err(Error::DimensionMismatch {
            expected: n - 1,
            got: l.dim(),
        });
    }
    Ok(ProfileMetric {
        n,
        profile: Profile::Cusp,
        r_lo: 0.0,
        r_hi: f64::INFINITY,
        cross_section: CrossSection::Torus(l.clone()),
    })
}

/// Cusp rescaled so that the level `r = R` is the flat torus `g0`.
pub fn scaled_cusp_metric(n: usize, g0: &Lattice, r_match: f64) -> Result<ProfileMetric> {
    cusp_metric(n, &g0.scaled(1.0 / r_match))
}

/// `V^{-1} dr^2 + V dtheta^2 + r^2 g_core` over `r in [r_+, inf)`.
pub fn black_hole_metric(p: &BlackHoleParams, core: &Lattice) -> Result<ProfileMetric> {
    check_n(p.n)?;
    if core.dim() != p.n - 2 {
        return Err(Error::DimensionMismatch {
            expected: p.n - 2,
            got: core.dim(),
        });
    }
    if let Some(t) = &p.twist {
        if t.fractions.len() != core.dim() {
            return Err(Error::DimensionMismatch {
                expected: core.dim(),
                got: t.fractions.len(),
            });
        }
    }
    Ok(ProfileMetric {
        n: p.n,
        profile: Profile::BlackHole { m: p.m },
        r_lo: p.r_plus,
        r_hi: f64::INFINITY,
        cross_section: CrossSection::Filled {
            beta: p.beta,
            core: core.clone(),
            twist: p.twist.clone(),
        },
    })
}

/// Largest difference of the two boundary Grams, entry `(i, j)` measured
/// against `sqrt(g_ii g_jj)`.
pub fn seam_discrepancy(cusp: &ProfileMetric, bh: &ProfileMetric, r_match: f64) -> f64 {
    let a = cusp.torus_gram_at(r_match);
    let b = bh.torus_gram_at(r_match);
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    let d = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let scale = (a[(i, i)] * a[(j, j)]).sqrt().max((b[(i, i)] * b[(j, j)]).sqrt());
            worst = worst.max((a[(i, j)] - b[(i, j)]).abs() / scale);
        }
    }
    worst
}

/// Relative difference of the black-hole and scaled-cusp profiles at the
/// seam: `max(|V/R^2 - 1|, |R^2/V - 1|)` at `r = R`.
pub fn seam_profile_discrepancy(n: usize, m: f64, r_match: f64) -> f64 {
    let v = v_and_derivs(n, m, r_match)[0];
    let c = r_match * r_match;
    (v / c - 1.0).abs().max((c / v - 1.0).abs())
}

/// Smooths the corner between a black-hole region and a scaled cusp.
pub fn glue(cusp: &ProfileMetric, bh: &ProfileMetric, spec: &GlueSpec) -> Result<ProfileMetric> {
    if cusp.kind() != MetricKind::Cusp || bh.kind() != MetricKind::BlackHole {
        return Err(Error::Domain("glue expects a cusp and a black-hole metric".into()));
    }
    if cusp.n != bh.n {
        return Err(Error::DimensionMismatch {
            expected: cusp.n,
            got: bh.n,
        });
    }
    let m = bh.mass().expect("black hole has a mass");
    let rp = horizon_radius(bh.n, m);
    if !(spec.r_match > 2.0 * rp) {
        return Err(Error::OutOfRange {
            what: "matching radius",
            value: spec.r_match,
            range: format!("(2 r_+, inf) = ({}, inf)", 2.0 * rp),
        });
    }
    let disc = seam_discrepancy(cusp, bh, spec.r_match);
    if !(disc <= SEAM_TOLERANCE) {
        return Err(Error::SeamMismatch {
            discrepancy: disc,
            tolerance: SEAM_TOLERANCE,
        });
    }
    Ok(ProfileMetric {
        n: bh.n,
        profile: Profile::Glued {
            m,
            r_match: spec.r_match,
            cutoff: spec.cutoff,
        },
        r_lo: rp,
        r_hi: f64::INFINITY,
        cross_section: bh.cross_section.clone(),
    })
}

/// A toral end `(T^{n-1}, g0)` filled along `sigma`: the matched black hole,
/// the scaled cusp it replaces, and the matching data.
#[derive(Debug, Clone)]
pub struct FilledEnd {
    pub n: usize,
    pub m: f64,
    pub sigma: FillingCurve,
    pub curve_length: f64,
    pub r_match: f64,
    pub params: BlackHoleParams,
    pub black_hole: ProfileMetric,
    pub cusp: ProfileMetric,
}

impl FilledEnd {
    pub fn new(n: usize, m: f64, g0: &Lattice, sigma: &FillingCurve) -> Result<Self> {
        check_n(n)?;
        if g0.dim() != n - 1 {
            return Err(Error::DimensionMismatch {
                expected: n - 1,
                got: g0.dim(),
            });
        }
        let len = curve_length(g0, sigma)?;
        let r_match = match_radius(n, m, len)?;
        let basis = complete_basis(g0, sigma)?;
        let fractions = basis.twist_fractions(g0);
        // orthogonal parts of b_i, rescaled to unit radius
        let s = sigma.coeffs();
        let d = n - 1;
        let perp: Vec<Vec<f64>> = basis.columns()[1..]
            .iter()
            .zip(&fractions)
            .map(|(b, c)| (0..d).map(|k| b[k] as f64 - c * s[k] as f64).collect())
            .collect();
        let core_gram = DMatrix::from_fn(d - 1, d - 1, |i, j| {
            g0.inner_f64(&perp[i], &perp[j]) / (r_match * r_match)
        });
        let core = Lattice::new(core_gram)?;
        let params = bh_params(n, m, Some(Twist { basis, fractions }))?;
        let black_hole = black_hole_metric(&params, &core)?;
        let cusp = scaled_cusp_metric(n, g0, r_match)?;
        Ok(Self {
            n,
            m,
            sigma: sigma.clone(),
            curve_length: len,
            r_match,
            params,
            black_hole,
            cusp,
        })
    }

    /// Rectangular boundary torus of the given area whose first basis vector
    /// is the filling curve and matches at `r_match`.
    pub fn rectangular(n: usize, m: f64, r_match: f64, boundary_area: f64) -> Result<Self> {
        check_n(n)?;
        let beta = beta_of_mass(n, m);
        let v = v_and_derivs(n, m, r_match)[0];
        if !(v > 0.0) {
            return Err(Error::OutOfRange {
                what: "matching radius",
                value: r_match,
                range: format!("(r_+, inf) = ({}, inf)", horizon_radius(n, m)),
            });
        }
        let l_sigma = beta * v.sqrt();
        let side = (boundary_area / l_sigma).powf(1.0 / (n as f64 - 2.0));
        let d = n - 1;
        let g0 = Lattice::new(DMatrix::from_fn(d, d, |i, j| match (i, j) {
            (0, 0) => l_sigma * l_sigma,
            (i, j) if i == j => side * side,
            _ => 0.0,
        }))?;
        let mut e1 = vec![0; d];
        e1[0] = 1;
        Self::new(n, m, &g0, &FillingCurve::new(e1)?)
    }

    pub fn glue(&self, cutoff: CutoffSpec) -> Result<ProfileMetric> {
        glue(
            &self.cusp,
            &self.black_hole,
            &GlueSpec {
                r_match: self.r_match,
                cutoff,
            },
        )
    }

    /// Diameter of the core torus at the horizon.
    pub fn core_diameter(&self, res: usize) -> f64 {
        match self.black_hole.cross_section() {
            CrossSection::Filled { core, .. } => core.scaled(self.params.r_plus).diameter(res),
            CrossSection::Torus(_) => unreachable!("black hole has a filled cross-section"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn v_profile_values() {
        assert_eq!(v_profile(4, 0.5, 1.0).unwrap(), 0.0);
        assert_eq!(v_profile(3, 0.5, 2.0).unwrap(), 3.0);
        assert_eq!(v_profile(6, 0.5, 1.0).unwrap(), 0.0);
        assert!(v_profile(4, 0.5, 0.0).is_err());
        assert!(v_profile(4, 0.5, -1.0).is_err());
    }

    #[test]
    fn black_hole_parameters() {
        let p = bh_params(4, 0.5, None).unwrap();
        assert_eq!(p.r_plus, 1.0);
        assert!((p.beta - 4.0 * PI / 3.0).abs() < 1e-15);
        let p3 = bh_params(3, 0.5, None).unwrap();
        assert!((p3.beta - 2.0 * PI).abs() < 1e-15);
        let p2 = bh_params(4, 1.0, None).unwrap();
        assert!((p2.beta / p.beta - 2f64.powf(-1.0 / 3.0)).abs() < 1e-14);
        assert!(bh_params(4, 0.0, None).is_err());
        assert!(bh_params(4, -1.0, None).is_err());
    }

    #[test]
    fn horizon_identities() {
        for n in 3..=8 {
            for &m in &[0.1, 0.5, 1.0, 3.7] {
                let rp = horizon_radius(n, m);
                let [v, dv, _] = v_and_derivs(n, m, rp);
                assert!(v.abs() < 1e-13 * rp * rp);
                assert!((dv - (n as f64 - 1.0) * rp).abs() < 1e-12 * rp);
                // smooth closure of the theta circle
                assert!((beta_of_mass(n, m) * dv / 2.0 - 2.0 * PI).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn matching_radius() {
        let r = match_radius(3, 0.5, 2.0 * PI).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-14);

        let r = match_radius(4, 0.5, 1e-9).unwrap();
        assert!(r > 1.0 && r - 1.0 < 1e-12);

        // bisection oracle on sqrt(R^2 - 1/R) = 10
        let (mut lo, mut hi) = (1.0f64, 20.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (mid * mid - 1.0 / mid).sqrt() < 10.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let l = 4.0 * PI / 3.0 * 10.0;
        let r = match_radius(4, 0.5, l).unwrap();
        assert!((r - lo).abs() < 1e-12);
        assert!((r - 10.004996).abs() < 1e-6);
        let res = (v_profile(4, 0.5, r).unwrap().sqrt() * beta_of_mass(4, 0.5) - l).abs();
        assert!(res < 1e-10 * l);
    }

    #[test]
    fn cutoff_shape() {
        for shape in [CutoffShape::Smooth, CutoffShape::Quintic] {
            let c = CutoffSpec { shape };
            let r_match = 16.0;
            assert_eq!(c.chi(r_match, 8.0)[0], 1.0);
            assert_eq!(c.chi(r_match, 32.0)[0], 0.0);
            let mut prev = 1.0;
            for k in 0..=200 {
                let r = 8.0 * 4f64.powf(k as f64 / 200.0);
                let v = c.chi(r_match, r)[0];
                assert!(v <= prev + 1e-15);
                prev = v;
            }
            // derivatives against central differences
            for &r in &[9.0, 14.0, 20.0, 27.0] {
                let h = 1e-4;
                let [_, d1, d2] = c.chi(r_match, r);
                let fd1 = (c.chi(r_match, r + h)[0] - c.chi(r_match, r - h)[0]) / (2.0 * h);
                let fd2 = (c.chi(r_match, r + h)[0] - 2.0 * c.chi(r_match, r)[0]
                    + c.chi(r_match, r - h)[0])
                    / (h * h);
                assert!((d1 - fd1).abs() < 1e-7, "{shape:?} {r}: {d1} vs {fd1}");
                assert!((d2 - fd2).abs() < 1e-5, "{shape:?} {r}: {d2} vs {fd2}");
            }
        }
    }

    #[test]
    fn cusp_reparameterization() {
        // r = e^t gives dt^2 + e^{2t} g0: g_rr (dr/dt)^2 = 1 and warp = e^{2t}
        let cusp = cusp_metric(4, &Lattice::identity(3)).unwrap();
        for &t in &[-2.0f64, -0.3, 0.0, 1.1, 3.0] {
            let r = t.exp();
            assert!((cusp.g_rr(r) * r * r - 1.0).abs() < 1e-12);
            assert!((cusp.warp(r) - (2.0 * t).exp()).abs() < 1e-12 * r * r);
            assert!((r.ln() - t).abs() < 1e-12);
        }
        assert!(cusp_metric(4, &Lattice::identity(2)).is_err());
    }

    #[test]
    fn filled_end_boundary_matches() {
        let g0 = Lattice::from_rows(&[
            vec![30.0, 2.0, 1.0],
            vec![2.0, 3.0, 0.5],
            vec![1.0, 0.5, 2.0],
        ])
        .unwrap();
        let sigma = FillingCurve::new(vec![3, 1, -2]).unwrap();
        let end = FilledEnd::new(4, 0.5, &g0, &sigma).unwrap();
        let at_r = end.black_hole.torus_gram_at(end.r_match);
        assert!((&at_r - g0.gram()).amax() < 1e-10 * g0.gram().amax());
        assert!(seam_discrepancy(&end.cusp, &end.black_hole, end.r_match) < 1e-12);
        // sigma circle collapses at the horizon
        let near = end.black_hole.torus_gram_at(1.0 + 1e-12);
        let s = [3.0, 1.0, -2.0];
        let len2: f64 = (0..3)
            .flat_map(|i| (0..3).map(move |j| (i, j)))
            .map(|(i, j)| s[i] * near[(i, j)] * s[j])
            .sum();
        assert!(len2.abs() < 1e-9);
        assert_eq!(end.lambda_at_horizon(), 0.0);
    }

    impl FilledEnd {
        fn lambda_at_horizon(&self) -> f64 {
            self.black_hole.lambda_at(self.params.r_plus, self.r_match)
        }
    }

    #[test]
    fn glue_is_exact_outside_annulus() {
        let end = FilledEnd::rectangular(4, 0.5, 16.0, 1.0).unwrap();
        let g = end.glue(CutoffSpec::default()).unwrap();
        for &r in &[1.0, 2.0, 5.0, 7.99, 8.0] {
            assert_eq!(g.f(r), end.black_hole.f(r));
        }
        for &r in &[32.0, 40.0, 1e3] {
            assert_eq!(g.f(r), end.cusp.f(r));
        }
        // geodesic width of [R/2, 2R] stays O(1)
        for r_match in [8.0, 64.0, 512.0] {
            let e = FilledEnd::rectangular(4, 0.5, r_match, 1.0).unwrap();
            let w = e.glue(CutoffSpec::default()).unwrap().radial_distance(0.5 * r_match, 2.0 * r_match);
            assert!((w - 4f64.ln()).abs() < 0.05, "width {w}");
        }
    }

    #[test]
    fn seam_profile_discrepancy_decays() {
        for n in 3..=6 {
            let rs = [8.0f64, 16.0, 32.0, 64.0];
            let ys: Vec<f64> = rs.iter().map(|&r| seam_profile_discrepancy(n, 0.5, r).ln()).collect();
            let slope = (ys[3] - ys[0]) / (rs[3].ln() - rs[0].ln());
            assert!((slope + (n as f64 - 1.0)).abs() < 0.3, "n={n} slope {slope}");
        }
    }

    #[test]
    fn glue_rejects_mismatched_seam() {
        let end = FilledEnd::rectangular(4, 0.5, 16.0, 1.0).unwrap();
        let other = FilledEnd::rectangular(4, 0.5, 16.0, 2.0).unwrap();
        let err = glue(
            &other.cusp,
            &end.black_hole,
            &GlueSpec {
                r_match: 16.0,
                cutoff: CutoffSpec::default(),
            },
        )
        .unwrap_err();
        assert!(matches!(err, Error::SeamMismatch { discrepancy, .. } if discrepancy > 1e-3));
    }

    #[test]
    fn mass_rescaling_is_an_isometry() {
        // V_m(c s) = c^2 V_{1/2}(s) with c = (2m)^{1/(n-1)}
        for n in 4..=7 {
            for &m in &[0.2f64, 1.3, 4.0] {
                let c = (2.0 * m).powf(1.0 / (n as f64 - 1.0));
                for &s in &[1.0, 1.5, 3.0, 10.0] {
                    let lhs = v_profile(n, m, c * s).unwrap();
                    let rhs = c * c * v_profile(n, 0.5, s).unwrap();
                    assert!((lhs - rhs).abs() < 1e-10 * rhs.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn horizon_quotient_matches_direct_evaluation() {
        let p = bh_params(5, 0.5, None).unwrap();
        let bh = black_hole_metric(&p, &Lattice::identity(3)).unwrap();
        for &eps in &[1e-1, 1e-2, 0.5] {
            let direct = bh.f(1.0 + eps)[0] / eps;
            assert!((bh.horizon_quotient(eps).unwrap() - direct).abs() < 1e-12 * direct);
        }
        assert!((bh.horizon_quotient(0.0).unwrap() - 4.0).abs() < 1e-14);
    }
}
