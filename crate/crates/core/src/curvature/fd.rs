//! Finite-difference curvature of a metric given in an explicit chart.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::tensor::Riemann;
use crate::error::{Error, Result};
use crate::metrics::ProfileMetric;
use crate::quad;

/// A metric in coordinates: point -> symmetric positive-definite matrix.
pub trait ChartMetric: Sync {
    fn dim(&self) -> usize;
    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Stencil {
    /// Central 3-point stencils, second order.
    Three,
    /// Central 5-point stencils, fourth order.
    #[default]
    Five,
}

impl Stencil {
    pub(crate) fn first(self) -> &'static [(i32, f64)] {
        match self {
            Stencil::Three => &[(-1, -0.5), (1, 0.5)],
            Stencil::Five => &[(-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0)],
        }
    }

    fn second(self) -> &'static [(i32, f64)] {
        match self {
            Stencil::Three => &[(-1, 1.0), (0, -2.0), (1, 1.0)],
            Stencil::Five => &[
                (-2, -1.0 / 12.0),
                (-1, 16.0 / 12.0),
                (0, -30.0 / 12.0),
                (1, 16.0 / 12.0),
                (2, -1.0 / 12.0),
            ],
        }
    }

    pub fn order(self) -> i32 {
        match self {
            Stencil::Three => 2,
            Stencil::Five => 4,
        }
    }

    /// Largest offset in units of `h`.
    pub fn reach(self) -> f64 {
        match self {
            Stencil::Three => 1.0,
            Stencil::Five => 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    pub h: f64,
    pub stencil: Stencil,
    /// Combine steps `h` and `h/2` to cancel the leading error term.
    pub richardson: bool,
}

impl FdOptions {
    /// Defaults at scale `r`: 5-point stencils, `h = 5e-3 r`, one Richardson step.
    pub fn at_scale(r: f64) -> Self {
        Self {
            h: 5e-3 * r,
            stencil: Stencil::Five,
            richardson: true,
        }
    }

    /// Defaults for the gauged operator, which differentiates the metric
    /// three times: `h = 1e-2 r` keeps rounding below the truncation error.
    pub fn for_phi(r: f64) -> Self {
        Self {
            h: 1e-2 * r,
            ..Self::at_scale(r)
        }
    }
}

/// Metric and its first and second coordinate derivatives at a point.
pub(crate) struct Jet {
    pub g: DMatrix<f64>,
    pub dg: Vec<DMatrix<f64>>,
    pub ddg: Vec<Vec<DMatrix<f64>>>,
}

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(k, s) in moves {
        y[k] += s;
    }
    y
}

pub(crate) fn first_jet(
    chart: &dyn ChartMetric,
    x: &[f64],
    h: f64,
    stencil: Stencil,
) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
    let n = chart.dim();
    let g = chart.metric(x)?;
    let mut dg = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = DMatrix::zeros(n, n);
        for &(o, w) in stencil.first() {
            acc += chart.metric(&shifted(x, &[(k, o as f64 * h)]))? * w;
        }
        dg.push(acc / h);
    }
    Ok((g, dg))
}

pub(crate) fn jet(chart: &dyn ChartMetric, x: &[f64], h: f64, stencil: Stencil) -> Result<Jet> {
    let n = chart.dim();
    let (g, dg) = first_jet(chart, x, h, stencil)?;
    let mut ddg = vec![vec![DMatrix::zeros(n, n); n]; n];
    for k in 0..n {
        let mut acc = DMatrix::zeros(n, n);
        for &(o, w) in stencil.second() {
            let gk = if o == 0 {
                g.clone()
            } else {
                chart.metric(&shifted(x, &[(k, o as f64 * h)]))?
            };
            acc += gk * w;
        }
        ddg[k][k] = acc / (h * h);
        for l in k + 1..n {
            let mut acc = DMatrix::zeros(n, n);
            for &(ok, wk) in stencil.first() {
                for &(ol, wl) in stencil.first() {
                    acc += chart.metric(&shifted(x, &[(k, ok as f64 * h), (l, ol as f64 * h)]))? * (wk * wl);
                }
            }
            let m = acc / (h * h);
            ddg[l][k] = m.clone();
            ddg[k][l] = m;
        }
    }
    Ok(Jet { g, dg, ddg })
}

/// Christoffel symbols `gamma[a][(b, c)] = Gamma^a_bc`.
pub(crate) fn christoffel(ginv: &DMatrix<f64>, dg: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let n = ginv.nrows();
    // first kind: Gamma_dbc
    let first: Vec<DMatrix<f64>> = (0..n)
        .map(|d| DMatrix::from_fn(n, n, |b, c| 0.5 * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)])))
        .collect();
    (0..n)
        .map(|a| DMatrix::from_fn(n, n, |b, c| (0..n).map(|d| ginv[(a, d)] * first[d][(b, c)]).sum()))
        .collect()
}

/// Coordinate `R^a_bcd`, stored as `r[a][b][c][d]` flattened.
fn riemann_up(j: &Jet) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = j.g.nrows();
    let ginv = j
        .g
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular metric in chart".into()))?;
    let gamma = christoffel(&ginv, &j.dg);
    let first: Vec<DMatrix<f64>> = (0..n)
        .map(|d| DMatrix::from_fn(n, n, |b, c| 0.5 * (j.dg[b][(d, c)] + j.dg[c][(d, b)] - j.dg[d][(b, c)])))
        .collect();
    // dgamma[e][a][(b, c)] = d_e Gamma^a_bc
    let mut dgamma = vec![vec![DMatrix::zeros(n, n); n]; n];
    for e in 0..n {
        let dginv = -(&ginv * &j.dg[e] * &ginv);
        for d in 0..n {
            let dfirst = DMatrix::from_fn(n, n, |b, c| {
                0.5 * (j.ddg[e][b][(d, c)] + j.ddg[e][c][(d, b)] - j.ddg[e][d][(b, c)])
            });
            for a in 0..n {
                let (u, v) = (dginv[(a, d)], ginv[(a, d)]);
                dgamma[e][a] += &first[d] * u + &dfirst * v;
            }
        }
    }
    let mut r = vec![0.0; n * n * n * n];
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                for d in 0..n {
                    let mut v = dgamma[c][a][(d, b)] - dgamma[d][a][(c, b)];
                    for e in 0..n {
                        v += gamma[a][(c, e)] * gamma[e][(d, b)] - gamma[a][(d, e)] * gamma[e][(c, b)];
                    }
                    r[((a * n + b) * n + c) * n + d] = v;
                }
            }
        }
    }
    Ok((ginv, r))
}

/// Upper-triangular `E` with `E^T g E = I`: Gram–Schmidt on the coordinate basis.
pub(crate) fn orthonormal_frame(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let chol = g
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Domain("metric is not positive definite".into()))?;
    let linv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular metric".into()))?;
    Ok(linv.transpose())
}

fn contract_index(t: &[f64], n: usize, e: &DMatrix<f64>, slot: usize) -> Vec<f64> {
    let mut out = vec![0.0; t.len()];
    let stride = n.pow(3 - slot as u32);
    for (idx, o) in out.iter_mut().enumerate() {
        let a = (idx / stride) % n;
        let base = idx - a * stride;
        let mut s = 0.0;
        for i in 0..n {
            s += t[base + i * stride] * e[(i, a)];
        }
        *o = s;
    }
    out
}

fn orthonormal_riemann(j: &Jet) -> Result<Riemann> {
    let n = j.g.nrows();
    let (_, up) = riemann_up(j)?;
    // lower the first index
    let mut low = vec![0.0; up.len()];
    let n3 = n * n * n;
    for a in 0..n {
        for rest in 0..n3 {
            low[a * n3 + rest] = (0..n).map(|f| j.g[(a, f)] * up[f * n3 + rest]).sum();
        }
    }
    let e = orthonormal_frame(&j.g)?;
    let mut t = low;
    for slot in 0..4 {
        t = contract_index(&t, n, &e, slot);
    }
    Ok(Riemann::from_vec(n, t))
}

/// Riemann tensor in the Gram–Schmidt frame of the coordinate basis.
pub fn riemann_fd(chart: &dyn ChartMetric, x: &[f64], opts: &FdOptions) -> Result<Riemann> {
    if x.len() != chart.dim() {
        return Err(Error::DimensionMismatch {
            expected: chart.dim(),
            got: x.len(),
        });
    }
    let coarse = orthonormal_riemann(&jet(chart, x, opts.h, opts.stencil)?)?;
    if !opts.richardson {
        return Ok(coarse);
    }
    let fine = orthonormal_riemann(&jet(chart, x, 0.5 * opts.h, opts.stencil)?)?;
    let w = 2f64.powi(opts.stencil.order());
    Ok(fine.combine(&coarse, w / (w - 1.0), -1.0 / (w - 1.0)))
}

/// Coordinate Ricci tensor `R_bd = R^a_bad`.
pub(crate) fn coordinate_ricci(chart: &dyn ChartMetric, x: &[f64], opts: &FdOptions) -> Result<DMatrix<f64>> {
    let n = chart.dim();
    let one = |h: f64| -> Result<DMatrix<f64>> {
        let (_, up) = riemann_up(&jet(chart, x, h, opts.stencil)?)?;
        Ok(DMatrix::from_fn(n, n, |b, d| {
            (0..n).map(|a| up[((a * n + b) * n + a) * n + d]).sum()
        }))
    };
    let coarse = one(opts.h)?;
    if !opts.richardson {
        return Ok(coarse);
    }
    let fine = one(0.5 * opts.h)?;
    let w = 2f64.powi(opts.stencil.order());
    Ok((fine * w - coarse) / (w - 1.0))
}

/// Chart `(r, theta, x_1, ..., x_{n-2})` with the flat factor orthonormal
/// at unit radius: `diag(1/F, F, r^2, ..., r^2)`.
pub struct RadialChart<'a> {
    pub metric: &'a ProfileMetric,
}

impl ChartMetric for RadialChart<'_> {
    fn dim(&self) -> usize {
        self.metric.n()
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let r = x[0];
        let f = self.metric.f(r)[0];
        if !(r > 0.0) || !(f > 0.0) {
            return Err(Error::StencilOutsideDomain {
                reach: r,
                r_lo: self.metric.radial_domain().0,
            });
        }
        Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(self.metric.chart_diagonal(r))))
    }
}

/// Regular chart around the horizon. The `(r, theta)` half-plane becomes a
/// disc with polar coordinates `(rho, phi)`, `rho` the geodesic distance to
/// the horizon and `phi = 2 pi theta / beta`:
///
/// ```text
/// g = drho^2 + f(rho)^2 dphi^2 + r(rho)^2 g_flat,   f = beta sqrt(F) / (2 pi)
/// ```
///
/// written in `x = rho cos phi`, `y = rho sin phi`.
pub struct PolarChart<'a> {
    metric: &'a ProfileMetric,
    r_plus: f64,
    beta: f64,
}

impl<'a> PolarChart<'a> {
    pub fn new(metric: &'a ProfileMetric) -> Result<Self> {
        let (Some(r_plus), Some(beta)) = (metric.horizon(), metric.beta()) else {
            return Err(Error::ChartMismatch("polar chart needs a metric with a horizon".into()));
        };
        Ok(Self { metric, r_plus, beta })
    }

    /// `F(r_+ + t^2) / t^2`.
    fn w(&self, t: f64) -> f64 {
        let eps = t * t;
        match self.metric.horizon_quotient(eps) {
            Some(v) if eps < 0.25 * self.r_plus => v,
            _ => self.metric.f(self.r_plus + eps)[0] / eps,
        }
    }

    /// Geodesic distance to the horizon as a function of `u = sqrt(r - r_+)`.
    fn rho_of_u(&self, u: f64) -> f64 {
        quad::integrate(|t| 2.0 / self.w(t).sqrt(), 0.0, u, 1e-14)
    }

    pub fn rho_of_r(&self, r: f64) -> f64 {
        self.rho_of_u((r - self.r_plus).max(0.0).sqrt())
    }

    fn u_of_rho(&self, rho: f64) -> f64 {
        let mut u = 0.5 * rho * self.w(0.0).sqrt();
        for _ in 0..50 {
            let step = (self.rho_of_u(u) - rho) * self.w(u).sqrt() / 2.0;
            u -= step;
            if step.abs() <= 1e-15 * u.max(1e-300) {
                break;
            }
        }
        u
    }

    pub fn r_of_rho(&self, rho: f64) -> f64 {
        let u = self.u_of_rho(rho);
        self.r_plus + u * u
    }
}

impl ChartMetric for PolarChart<'_> {
    fn dim(&self) -> usize {
        self.metric.n()
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.metric.n();
        let rho = x[0].hypot(x[1]);
        let (r, q) = if rho == 0.0 {
            (self.r_plus, 1.0)
        } else {
            let u = self.u_of_rho(rho);
            let f = self.beta * u * self.w(u).sqrt() / (2.0 * std::f64::consts::PI);
            (self.r_plus + u * u, (f / rho).powi(2))
        };
        let mut g = DMatrix::zeros(n, n);
        if rho == 0.0 {
            g[(0, 0)] = 1.0;
            g[(1, 1)] = 1.0;
        } else {
            let (cx, cy) = (x[0] / rho, x[1] / rho);
            g[(0, 0)] = cx * cx + q * cy * cy;
            g[(1, 1)] = cy * cy + q * cx * cx;
            g[(0, 1)] = (1.0 - q) * cx * cy;
            g[(1, 0)] = g[(0, 1)];
        }
        for i in 2..n {
            g[(i, i)] = r * r;
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Round unit sphere in stereographic-free spherical coordinates.
    struct Sphere(usize);

    impl ChartMetric for Sphere {
        fn dim(&self) -> usize {
            self.0
        }

        fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
            // g = dx_0^2 + sin^2 x_0 (dx_1^2 + sin^2 x_1 (dx_2^2 + ...))
            let n = self.0;
            let mut g = DMatrix::zeros(n, n);
            let mut w = 1.0;
            for i in 0..n {
                g[(i, i)] = w;
                w *= x[i].sin().powi(2);
            }
            Ok(g)
        }
    }

    #[test]
    fn unit_sphere_has_curvature_one() {
        for n in 2..=5 {
            let x: Vec<f64> = (0..n).map(|i| 0.9 + 0.1 * i as f64).collect();
            let rm = riemann_fd(&Sphere(n), &x, &FdOptions::at_scale(1.0)).unwrap();
            assert!(rm.max_abs_diff(&Riemann::constant(n, 1.0)) < 1e-8);
        }
    }

    #[test]
    fn polar_chart_inverts_distance() {
        let p = crate::metrics::bh_params(4, 0.5, None).unwrap();
        let bh = crate::metrics::black_hole_metric(&p, &crate::lattice::Lattice::identity(2)).unwrap();
        let chart = PolarChart::new(&bh).unwrap();
        for &r in &[1.0 + 1e-8, 1.001, 1.1, 1.5] {
            let rho = chart.rho_of_r(r);
            assert!((chart.r_of_rho(rho) - r).abs() < 1e-12);
            // leading order 2 sqrt(eps / V'(r_+)) next to the horizon,
            // direct quadrature of dr / sqrt(V) further out
            let eps = r - 1.0;
            if eps < 1e-6 {
                assert!((rho - 2.0 * (eps / 3.0).sqrt()).abs() < 1e-6 * rho);
            } else {
                let direct = bh.radial_distance(1.0, r);
                assert!((rho - direct).abs() < 1e-6 * rho, "{rho} {direct}");
            }
        }
        let g0 = chart.metric(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        let g1 = chart.metric(&[1e-6, 0.0, 0.0, 0.0]).unwrap();
        assert!((&g0 - &g1).amax() < 1e-10);
    }
}
