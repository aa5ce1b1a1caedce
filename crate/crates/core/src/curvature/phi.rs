//! The Bianchi-gauged Einstein operator
//!
//! ```text
//! Phi(g) = Ric_g + (n-1) g + delta*_g (delta_gbar g + 1/2 d tr_gbar g)
//! ```
//!
//! with `delta h = -div h` and `delta* w = sym(nabla w)`, by finite differences.

use nalgebra::DMatrix;
use serde::Serialize;

use super::fd::{christoffel, coordinate_ricci, first_jet, orthonormal_frame, ChartMetric, FdOptions};
use super::fd::RadialChart;
use crate::error::{Error, Result};
use crate::metrics::ProfileMetric;

#[derive(Debug, Clone, Serialize)]
pub struct PhiReport {
    /// `|Phi(g)|` in a `g`-orthonormal frame.
    pub phi_norm: f64,
    /// `|delta*_g (delta_gbar g + 1/2 d tr_gbar g)|`.
    pub gauge_norm: f64,
    /// `|Ric_g + (n-1) g|`.
    pub einstein_residual: f64,
    /// `Phi(g)` in the Gram–Schmidt frame of `g`.
    #[serde(skip)]
    pub phi: DMatrix<f64>,
}

/// The Bianchi one-form `delta_gbar g + 1/2 d tr_gbar g` at `x`.
fn bianchi_form(g: &dyn ChartMetric, gbar: &dyn ChartMetric, x: &[f64], opts: &FdOptions) -> Result<Vec<f64>> {
    let n = g.dim();
    let (gm, dg) = first_jet(g, x, opts.h, opts.stencil)?;
    let (bm, db) = first_jet(gbar, x, opts.h, opts.stencil)?;
    let binv = bm
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular background metric".into()))?;
    let gam = christoffel(&binv, &db);
    // nabla-bar_a g_cb
    let cov = |a: usize, c: usize, b: usize| -> f64 {
        let mut v = dg[a][(c, b)];
        for e in 0..n {
            v -= gam[e][(a, c)] * gm[(e, b)] + gam[e][(a, b)] * gm[(c, e)];
        }
        v
    };
    let mut w = vec![0.0; n];
    for (b, wb) in w.iter_mut().enumerate() {
        let mut div = 0.0;
        for a in 0..n {
            for c in 0..n {
                div += binv[(a, c)] * cov(a, c, b);
            }
        }
        // d_b (gbar^{ac} g_ac)
        let dbinv = -(&binv * &db[b] * &binv);
        let dtr = dbinv.component_mul(&gm).sum() + binv.component_mul(&dg[b]).sum();
        *wb = -div + 0.5 * dtr;
    }
    Ok(w)
}

/// `Phi(g)` at `x` against the background `gbar`; both in the same chart.
pub fn phi_operator(g: &dyn ChartMetric, gbar: &dyn ChartMetric, x: &[f64], opts: &FdOptions) -> Result<PhiReport> {
    let n = g.dim();
    if gbar.dim() != n || x.len() != n {
        return Err(Error::ChartMismatch(format!(
            "metric dimensions {} and {} at a point of dimension {}",
            n,
            gbar.dim(),
            x.len()
        )));
    }
    let ric = coordinate_ricci(g, x, opts)?;
    let (gm, dg) = first_jet(g, x, opts.h, opts.stencil)?;
    let ginv = gm
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Domain("singular metric".into()))?;
    let gam = christoffel(&ginv, &dg);

    // derivatives of the one-form, one Richardson step on the outer stencil
    let d_omega = |h: f64| -> Result<Vec<Vec<f64>>> {
        let mut out = vec![vec![0.0; n]; n];
        for (k, row) in out.iter_mut().enumerate() {
            for &(o, wgt) in opts.stencil.first() {
                let mut y = x.to_vec();
                y[k] += o as f64 * h;
                let w = bianchi_form(g, gbar, &y, opts)?;
                for b in 0..n {
                    row[b] += wgt * w[b] / h;
                }
            }
        }
        Ok(out)
    };
    let coarse = d_omega(opts.h)?;
    let dw = if opts.richardson {
        let fine = d_omega(0.5 * opts.h)?;
        let p = 2f64.powi(opts.stencil.order());
        (0..n)
            .map(|k| (0..n).map(|b| (p * fine[k][b] - coarse[k][b]) / (p - 1.0)).collect())
            .collect()
    } else {
        coarse
    };
    let w = bianchi_form(g, gbar, x, opts)?;
    let gauge = DMatrix::from_fn(n, n, |a, b| {
        let mut v = 0.5 * (dw[a][b] + dw[b][a]);
        for c in 0..n {
            v -= gam[c][(a, b)] * w[c];
        }
        v
    });
    let einstein = &ric + &gm * (n as f64 - 1.0);
    let e = orthonormal_frame(&gm)?;
    let to_frame = |t: &DMatrix<f64>| e.transpose() * t * &e;
    let phi = to_frame(&(&einstein + &gauge));
    Ok(PhiReport {
        phi_norm: phi.norm(),
        gauge_norm: to_frame(&gauge).norm(),
        einstein_residual: to_frame(&einstein).norm(),
        phi,
    })
}

/// `Phi(g)` against `gbar` at radius `r` in the shared radial chart, with
/// the default step [`FdOptions::for_phi`].
pub fn phi_profile(g: &ProfileMetric, gbar: &ProfileMetric, r: f64) -> Result<PhiReport> {
    if g.n() != gbar.n() {
        return Err(Error::ChartMismatch(format!("dimensions {} and {}", g.n(), gbar.n())));
    }
    let (a, b) = (g.radial_domain().0, gbar.radial_domain().0);
    let opts = FdOptions::for_phi(r);
    // outer derivative of the Bianchi form, itself a first derivative
    let reach = 2.0 * opts.stencil.reach() * opts.h;
    if r - reach <= a.max(b) {
        return Err(Error::StencilOutsideDomain {
            reach: r - reach,
            r_lo: a.max(b),
        });
    }
    let x = radial_point(g.n(), r);
    phi_operator(&RadialChart { metric: g }, &RadialChart { metric: gbar }, &x, &opts)
}

fn radial_point(n: usize, r: f64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[0] = r;
    x
}

/// `gbar + eps h` for a symmetric tensor field `h` in the same chart.
pub struct Perturbed<'a, H: Fn(&[f64]) -> DMatrix<f64> + Sync> {
    pub base: &'a dyn ChartMetric,
    pub h: H,
    pub eps: f64,
}

impl<H: Fn(&[f64]) -> DMatrix<f64> + Sync> ChartMetric for Perturbed<'_, H> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        Ok(self.base.metric(x)? + (self.h)(x) * self.eps)
    }
}
