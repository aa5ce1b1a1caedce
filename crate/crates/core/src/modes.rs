//! Torus-invariant solutions of the linearized Einstein operator on the
//! hyperbolic cusp, and the mass/period relation of the filled end.
//!
//! In the orthonormal coframe `theta_1 = dr/r`, `theta_i = r dx_i` each
//! block of an invariant symmetric form `h` satisfies an Euler equation
//! `r^2 h'' + B r h' + C h = 0`:
//!
//! | class | `(B, C)`        | exponents                     |
//! |-------|-----------------|-------------------------------|
//! | ab    | `(n, 0)`        | `0, -(n-1)`                   |
//! | 1b    | `(n, -n)`       | `1, -n`                       |
//! | 11    | `(n, -2(n-1))`  | roots of `a^2 + (n-1)a - 2(n-1)` |

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{self, MetricKind, ProfileMetric};
use crate::ode::{dopri5, Tolerance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModeClass {
    /// Torus-torus entries `h_ab`, `a, b >= 2`.
    #[serde(rename = "ab")]
    TorusTorus,
    /// Radial-torus entries `h_1b`.
    #[serde(rename = "1b")]
    RadialTorus,
    /// The radial-radial entry `h_11`.
    #[serde(rename = "11")]
    RadialRadial,
}

impl ModeClass {
    pub const ALL: [ModeClass; 3] = [ModeClass::TorusTorus, ModeClass::RadialTorus, ModeClass::RadialRadial];

    pub fn label(self) -> &'static str {
        match self {
            ModeClass::TorusTorus => "ab",
            ModeClass::RadialTorus => "1b",
            ModeClass::RadialRadial => "11",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.label() == s)
    }

    /// A representative coframe entry of the class.
    pub fn entry(self) -> (usize, usize) {
        match self {
            ModeClass::TorusTorus => (1, 2),
            ModeClass::RadialTorus => (0, 1),
            ModeClass::RadialRadial => (0, 0),
        }
    }
}

/// `r^2 h'' + b r h' + c h = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EulerOde {
    pub b: f64,
    pub c: f64,
}

impl EulerOde {
    pub fn apply(&self, r: f64, h: [f64; 3]) -> f64 {
        r * r * h[2] + self.b * r * h[1] + self.c * h[0]
    }

    /// Value of the ODE on `r^alpha`, divided by `r^alpha`.
    pub fn indicial(&self, alpha: f64) -> f64 {
        alpha * (alpha - 1.0) + self.b * alpha + self.c
    }

    /// Roots of the indicial quadratic, larger first.
    pub fn roots(&self) -> [f64; 2] {
        let p = self.b - 1.0;
        let disc = (p * p - 4.0 * self.c).sqrt();
        // avoid cancellation in the smaller-magnitude root
        let q = -0.5 * (p + p.signum() * disc);
        let (x, y) = if q == 0.0 { (0.0, -p) } else { (q, self.c / q) };
        if x >= y {
            [x, y]
        } else {
            [y, x]
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::Domain(format!("dimension n = {n} must be at least 3")));
    }
    Ok(())
}

pub fn euler_coeffs(n: usize, class: ModeClass) -> Result<EulerOde> {
    check_n(n)?;
    let nf = n as f64;
    let c = match class {
        ModeClass::TorusTorus => 0.0,
        ModeClass::RadialTorus => -nf,
        ModeClass::RadialRadial => -2.0 * (nf - 1.0),
    };
    Ok(EulerOde { b: nf, c })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeClassification {
    pub class: ModeClass,
    pub ode: EulerOde,
    /// Larger exponent first.
    pub exponents: [f64; 2],
    /// Dimension of the solutions bounded on `(0, inf)`.
    pub bounded_dim: usize,
    pub bounded_basis: String,
}

pub fn closed_form_modes(n: usize, class: ModeClass) -> Result<ModeClassification> {
    let ode = euler_coeffs(n, class)?;
    let nf = n as f64;
    let exponents = match class {
        ModeClass::TorusTorus => [0.0, -(nf - 1.0)],
        ModeClass::RadialTorus => [1.0, -nf],
        ModeClass::RadialRadial => {
            let s = ((nf - 1.0).powi(2) + 8.0 * (nf - 1.0)).sqrt();
            [0.5 * (-(nf - 1.0) + s), 0.5 * (-(nf - 1.0) - s)]
        }
    };
    // r^alpha is bounded on (0, inf) only for alpha = 0
    let bounded: Vec<f64> = exponents.iter().copied().filter(|a| *a == 0.0).collect();
    Ok(ModeClassification {
        class,
        ode,
        exponents,
        bounded_dim: bounded.len(),
        bounded_basis: if bounded.is_empty() {
            "none".into()
        } else {
            "constants".into()
        },
    })
}

/// Initial data `h(r0) = h0`, `h'(r0) = dh0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeInit {
    pub r0: f64,
    pub h0: f64,
    pub dh0: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeSample {
    pub r: f64,
    pub h: f64,
    pub dh: f64,
}

/// Closed-form solution `c1 r^a1 + c2 r^a2` for the given initial data.
pub fn closed_form_solution(n: usize, class: ModeClass, init: ModeInit, r: f64) -> Result<f64> {
    let m = closed_form_modes(n, class)?;
    let [a1, a2] = m.exponents;
    let r0 = init.r0;
    // [r0^a1, r0^a2; a1 r0^(a1-1), a2 r0^(a2-1)] c = [h0, dh0]
    let (p1, p2) = (r0.powf(a1), r0.powf(a2));
    let (q1, q2) = (a1 * p1 / r0, a2 * p2 / r0);
    let det = p1 * q2 - p2 * q1;
    let c1 = (init.h0 * q2 - p2 * init.dh0) / det;
    let c2 = (p1 * init.dh0 - q1 * init.h0) / det;
    Ok(c1 * r.powf(a1) + c2 * r.powf(a2))
}

fn integrate_between(ode: EulerOde, r0: f64, y0: [f64; 2], r1: f64, tol: Tolerance) -> Result<[f64; 2]> {
    let y = dopri5(
        |r, y, d| {
            d[0] = y[1];
            d[1] = -(ode.b * r * y[1] + ode.c * y[0]) / (r * r);
        },
        r0,
        &y0,
        r1,
        tol,
    )?;
    Ok([y[0], y[1]])
}

/// Numerical solution sampled at `steps + 1` log-spaced radii of `r_range`,
/// integrating outward from `init.r0` in both directions.
pub fn integrate_mode(
    n: usize,
    class: ModeClass,
    init: ModeInit,
    r_range: (f64, f64),
    steps: usize,
) -> Result<Vec<ModeSample>> {
    let ode = euler_coeffs(n, class)?;
    let (a, b) = r_range;
    if !(a > 0.0 && b > a && b.is_finite() && init.r0 > 0.0) {
        return Err(Error::OutOfRange {
            what: "radial range start",
            value: a,
            range: "0 < a < b < inf, r0 > 0".into(),
        });
    }
    let grid = crate::curvature::log_grid(a, b, steps.max(1) + 1);
    let tol = Tolerance::default();
    let mut out = vec![
        ModeSample {
            r: 0.0,
            h: 0.0,
            dh: 0.0
        };
        grid.len()
    ];
    // march outward from r0 so each leg starts from the previous sample
    let split = grid.partition_point(|&r| r < init.r0);
    let mut state = (init.r0, [init.h0, init.dh0]);
    for i in split..grid.len() {
        let y = integrate_between(ode, state.0, state.1, grid[i], tol)?;
        out[i] = ModeSample {
            r: grid[i],
            h: y[0],
            dh: y[1],
        };
        state = (grid[i], y);
    }
    let mut state = (init.r0, [init.h0, init.dh0]);
    for i in (0..split).rev() {
        let y = integrate_between(ode, state.0, state.1, grid[i], tol)?;
        out[i] = ModeSample {
            r: grid[i],
            h: y[0],
            dh: y[1],
        };
        state = (grid[i], y);
    }
    Ok(out)
}

/// Dimension of the solutions that stay below `bound` on
/// `[1/r_escape, r_escape]`, found numerically from unit initial data at
/// `r = 1`.
///
/// At each end the solutions kept below `bound` are either all of them or,
/// when the end-value row is large, the line it annihilates. A line found at
/// one end is then integrated to the other end and tested there. Working one
/// end at a time avoids mixing values of very different size, which for
/// large `n` would leave the small singular value of the joint map at the
/// rounding level.
pub fn bounded_dimension_numeric(n: usize, class: ModeClass, r_escape: f64, bound: f64) -> Result<usize> {
    let ode = euler_coeffs(n, class)?;
    let tol = Tolerance::default();
    let ends = [1.0 / r_escape, r_escape];
    let mut rows = [[0.0; 2]; 2];
    for (e, &r) in ends.iter().enumerate() {
        for (col, y0) in [[1.0, 0.0], [0.0, 1.0]].into_iter().enumerate() {
            rows[e][col] = integrate_between(ode, 1.0, y0, r, tol)?[0];
        }
    }
    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    let lines: Vec<Option<[f64; 2]>> = rows
        .iter()
        .map(|&v| {
            let l = norm(v);
            (l > bound).then(|| [v[1] / l, -v[0] / l])
        })
        .collect();
    let sup_within = |y0: [f64; 2]| -> Result<bool> {
        for &r in &ends {
            if integrate_between(ode, 1.0, y0, r, tol)?[0].abs() > bound {
                return Ok(false);
            }
        }
        Ok(true)
    };
    Ok(match (lines[0], lines[1]) {
        (None, None) => 2,
        (Some(y), None) | (None, Some(y)) => usize::from(sup_within(y)?),
        (Some(a), Some(b)) => {
            // one line from each end: bounded only if the line bounded at
            // one end stays small at the other
            let mut k = 0;
            for (y, other) in [(a, 1), (b, 0)] {
                let h = integrate_between(ode, 1.0, y, ends[other], tol)?[0];
                if h.abs() <= bound {
                    k = 1;
                }
            }
            k
        }
    })
}

/// `sup |h|` on `[1/r_escape, r_escape]` of the solution with initial data at `r = 1`.
pub fn escape_sup(n: usize, class: ModeClass, h0: f64, dh0: f64, r_escape: f64) -> Result<f64> {
    let init = ModeInit { r0: 1.0, h0, dh0 };
    let s = integrate_mode(n, class, init, (1.0 / r_escape, r_escape), 64)?;
    Ok(s.iter().map(|x| x.h.abs()).fold(0.0, f64::max))
}

/// Value, first and second derivative of a torus-invariant form in the
/// orthonormal coframe, as functions of `r`.
pub type FormJet = dyn Fn(f64) -> [DMatrix<f64>; 3] + Send + Sync;

/// A torus-invariant symmetric 2-tensor `h = sum h_ab(r) theta_a theta_b`.
#[derive(Clone)]
pub struct InvariantForm {
    n: usize,
    jet: Arc<FormJet>,
}

impl std::fmt::Debug for InvariantForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("InvariantForm").field("n", &self.n).finish_non_exhaustive()
    }
}

impl InvariantForm {
    pub fn from_jet(n: usize, jet: impl Fn(f64) -> [DMatrix<f64>; 3] + Send + Sync + 'static) -> Self {
        Self { n, jet: Arc::new(jet) }
    }

    /// `coef r^alpha` in entries `(a, b)` and `(b, a)`.
    pub fn power(n: usize, entry: (usize, usize), coef: f64, alpha: f64) -> Self {
        let (a, b) = entry;
        Self::from_jet(n, move |r| {
            let v = [
                coef * r.powf(alpha),
                coef * alpha * r.powf(alpha - 1.0),
                coef * alpha * (alpha - 1.0) * r.powf(alpha - 2.0),
            ];
            v.map(|x| {
                let mut m = DMatrix::zeros(n, n);
                m[(a, b)] = x;
                m[(b, a)] = x;
                m
            })
        })
    }

    /// The background metric itself.
    pub fn metric(n: usize) -> Self {
        Self::from_jet(n, move |_| [DMatrix::identity(n, n), DMatrix::zeros(n, n), DMatrix::zeros(n, n)])
    }

    pub fn sum(&self, other: &InvariantForm) -> Self {
        let (p, q) = (self.jet.clone(), other.jet.clone());
        Self::from_jet(self.n, move |r| {
            let (a, b) = (p(r), q(r));
            [&a[0] + &b[0], &a[1] + &b[1], &a[2] + &b[2]]
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn jet(&self, r: f64) -> [DMatrix<f64>; 3] {
        (self.jet)(r)
    }

    pub fn is_trace_free(&self, r: f64) -> bool {
        let h = self.jet(r)[0].clone();
        h.trace().abs() <= 1e-12 * h.amax().max(1.0)
    }

    /// Chart components in `(r, x_1, ..., x_{n-1})` of the cusp
    /// `dr^2/r^2 + r^2 sum dx_i^2`.
    pub fn chart_components(&self, r: f64) -> DMatrix<f64> {
        let h = self.jet(r)[0].clone();
        let mut c = h.clone();
        for i in 0..self.n {
            let si = if i == 0 { 1.0 / r } else { r };
            for j in 0..self.n {
                let sj = if j == 0 { 1.0 / r } else { r };
                c[(i, j)] = h[(i, j)] * si * sj;
            }
        }
        c
    }
}

/// Connection matrices of the cusp coframe: `nabla_{e_i} theta = Gamma_i theta`.
fn coframe_connection(n: usize, i: usize) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(n, n);
    g[(i, 0)] = 1.0;
    g[(0, i)] = -1.0;
    g
}

/// `L(h) = D*D h - 2 R(h) + Ric o h + h o Ric + 2(n-1) h` on the cusp, in
/// the orthonormal coframe.
pub fn linearized_invariant(g: &ProfileMetric, h: &InvariantForm, r: f64) -> Result<DMatrix<f64>> {
    if g.kind() != MetricKind::Cusp {
        return Err(Error::Domain("linearized operator is implemented on the cusp background".into()));
    }
    let n = g.n();
    if h.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: h.dim(),
        });
    }
    let [h0, h1, h2] = h.jet(r);
    if (&h0 - h0.transpose()).amax() > 1e-12 * h0.amax().max(1.0) {
        return Err(Error::Domain("h is not symmetric".into()));
    }
    let nf = n as f64;
    let mut rough = -(&h2 * (r * r) + &h1 * (nf * r));
    for i in 1..n {
        let gi = coframe_connection(n, i);
        let a = -(gi.transpose() * &h0 + &h0 * &gi);
        rough += gi.transpose() * &a + &a * &gi;
    }
    let id = DMatrix::<f64>::identity(n, n);
    // constant curvature -1: R(h) = h - (tr h) g
    let curv = &h0 - &id * h0.trace();
    let ric = &id * -(nf - 1.0);
    Ok(rough - curv * 2.0 + &ric * &h0 + &h0 * &ric + &h0 * (2.0 * (nf - 1.0)))
}

/// `theta`-period at which the cone angle at the horizon is `2 pi`.
pub fn cone_angle(n: usize, m: f64, beta_candidate: f64) -> Result<f64> {
    check_n(n)?;
    if !(m > 0.0) || !(beta_candidate > 0.0) {
        return Err(Error::Domain("mass and period must be positive".into()));
    }
    Ok(beta_candidate * (n as f64 - 1.0) * metrics::horizon_radius(n, m) / 2.0)
}

/// `m = (1/2) (4 pi / ((n-1) beta))^{n-1}`.
pub fn mass_from_beta(n: usize, beta_target: f64) -> Result<f64> {
    check_n(n)?;
    if !(beta_target > 0.0) || !beta_target.is_finite() {
        return Err(Error::Domain(format!("period {beta_target} must be positive")));
    }
    Ok(0.5 * (4.0 * PI / ((n as f64 - 1.0) * beta_target)).powi(n as i32 - 1))
}

/// The same mass by bisection on `cone_angle(n, m, beta) = 2 pi`.
pub fn mass_from_beta_shooting(n: usize, beta_target: f64) -> Result<f64> {
    check_n(n)?;
    let miss = |m: f64| cone_angle(n, m, beta_target).map(|a| a - 2.0 * PI);
    let (mut lo, mut hi) = (1.0, 1.0);
    while miss(lo)? > 0.0 {
        lo *= 0.5;
    }
    while miss(hi)? < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if miss(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Central difference of `beta(m)`.
pub fn dbeta_dm(n: usize, m: f64) -> f64 {
    let h = 1e-5 * m;
    (metrics::beta_of_mass(n, m + h) - metrics::beta_of_mass(n, m - h)) / (2.0 * h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Lattice;
    use crate::metrics::cusp_metric;

    #[test]
    fn coefficients_and_exponents() {
        assert_eq!(euler_coeffs(4, ModeClass::TorusTorus).unwrap(), EulerOde { b: 4.0, c: 0.0 });
        assert_eq!(euler_coeffs(4, ModeClass::RadialTorus).unwrap(), EulerOde { b: 4.0, c: -4.0 });
        assert_eq!(euler_coeffs(4, ModeClass::RadialRadial).unwrap(), EulerOde { b: 4.0, c: -6.0 });
        let m = closed_form_modes(4, ModeClass::RadialRadial).unwrap();
        let s33 = 33f64.sqrt();
        assert!((m.exponents[0] - (-3.0 + s33) / 2.0).abs() < 1e-12);
        assert!((m.exponents[1] - (-3.0 - s33) / 2.0).abs() < 1e-12);
        assert_eq!(closed_form_modes(4, ModeClass::TorusTorus).unwrap().exponents, [0.0, -3.0]);
        for n in 3..=9 {
            for c in ModeClass::ALL {
                let m = closed_form_modes(n, c).unwrap();
                for a in m.exponents {
                    assert!(m.ode.indicial(a).abs() < 1e-12);
                }
                let r = m.ode.roots();
                assert!((r[0] - m.exponents[0]).abs() < 1e-12 && (r[1] - m.exponents[1]).abs() < 1e-12);
            }
            let d: Vec<usize> = ModeClass::ALL
                .iter()
                .map(|&c| closed_form_modes(n, c).unwrap().bounded_dim)
                .collect();
            assert_eq!(d, vec![1, 0, 0]);
        }
    }

    #[test]
    fn integration_examples() {
        let s = integrate_mode(4, ModeClass::TorusTorus, ModeInit { r0: 1.0, h0: 1.0, dh0: -3.0 }, (0.1, 10.0), 50).unwrap();
        assert!(s.iter().all(|p| (p.h / p.r.powi(-3) - 1.0).abs() < 1e-6));
        let s = integrate_mode(4, ModeClass::TorusTorus, ModeInit { r0: 1.0, h0: 1.0, dh0: 0.0 }, (0.1, 10.0), 50).unwrap();
        assert!(s.iter().all(|p| (p.h - 1.0).abs() < 1e-6));
        let s = integrate_mode(5, ModeClass::RadialTorus, ModeInit { r0: 1.0, h0: 1.0, dh0: 1.0 }, (0.1, 10.0), 50).unwrap();
        assert!(s.iter().all(|p| (p.h / p.r - 1.0).abs() < 1e-6));
        assert!(integrate_mode(4, ModeClass::TorusTorus, ModeInit { r0: 1.0, h0: 1.0, dh0: 0.0 }, (0.0, 1.0), 5).is_err());
    }

    #[test]
    fn operator_on_metric_and_constants() {
        let cusp = cusp_metric(4, &Lattice::identity(3)).unwrap();
        let l = linearized_invariant(&cusp, &InvariantForm::metric(4), 1.7).unwrap();
        assert!((l.clone() - DMatrix::identity(4, 4) * 6.0).amax() < 1e-12);
        assert!((l.trace() - 24.0).abs() < 1e-12);
        let c = InvariantForm::power(4, (1, 2), 0.3, 0.0);
        assert!(linearized_invariant(&cusp, &c, 2.0).unwrap().amax() < 1e-12);
    }

    #[test]
    fn cone_angle_and_mass() {
        assert!((cone_angle(4, 0.5, 4.0 * PI / 3.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((cone_angle(4, 0.5, 2.0 * PI / 3.0).unwrap() - PI).abs() < 1e-12);
        assert!((cone_angle(3, 0.5, 2.0 * PI).unwrap() - 2.0 * PI).abs() < 1e-12);
        assert!((mass_from_beta(4, 4.0 * PI / 3.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((mass_from_beta(3, 2.0 * PI).unwrap() - 0.5).abs() < 1e-14);
        let d = dbeta_dm(4, 0.5);
        let expect = -(4.0 * PI / 3.0) / 1.5;
        assert!(d < 0.0 && (d - expect).abs() < 1e-6);
    }
}
