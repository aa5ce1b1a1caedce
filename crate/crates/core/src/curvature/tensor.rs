//! Orthonormal-frame curvature tensors and their algebraic contractions.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

/// Riemann tensor `Rm_abcd` in an orthonormal frame, normalized so that
/// `Rm_abab` is the sectional curvature of the `(e_a, e_b)` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    n: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![0.0; n * n * n * n],
        }
    }

    pub fn from_vec(n: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), n * n * n * n);
        Self { n, data }
    }

    /// Curvature operator diagonal in `e_a ^ e_b` with eigenvalues `k[(a, b)]`.
    pub fn from_sectionals(k: &DMatrix<f64>) -> Self {
        let n = k.nrows();
        let mut rm = Self::zeros(n);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    rm.set(a, b, a, b, k[(a, b)]);
                    rm.set(a, b, b, a, -k[(a, b)]);
                }
            }
        }
        rm
    }

    /// Constant curvature `kappa`.
    pub fn constant(n: usize, kappa: f64) -> Self {
        Self::from_sectionals(&DMatrix::from_element(n, n, kappa))
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.n + b) * self.n + c) * self.n + d
    }

    #[inline]
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    #[inline]
    pub fn set(&mut self, a: usize, b: usize, c: usize, d: usize, v: f64) {
        let i = self.idx(a, b, c, d);
        self.data[i] = v;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn combine(&self, other: &Riemann, wa: f64, wb: f64) -> Riemann {
        Riemann {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| wa * a + wb * b)
                .collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Riemann) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// `Ric_bd = sum_a Rm_abad`.
    pub fn ricci(&self) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |b, d| (0..n).map(|a| self.get(a, b, a, d)).sum())
    }

    /// Weyl tensor: `Rm` minus its Ricci and scalar parts.
    pub fn weyl(&self) -> Riemann {
        let n = self.n;
        let ric = self.ricci();
        let s = ric.trace();
        let del = |i: usize, j: usize| if i == j { 1.0 } else { 0.0 };
        let mut w = Riemann::zeros(n);
        if n < 3 {
            return w;
        }
        let nf = n as f64;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let ricci_part = (ric[(a, c)] * del(b, d) + ric[(b, d)] * del(a, c)
                            - ric[(a, d)] * del(b, c)
                            - ric[(b, c)] * del(a, d))
                            / (nf - 2.0);
                        let scalar_part = s * (del(a, c) * del(b, d) - del(a, d) * del(b, c))
                            / ((nf - 1.0) * (nf - 2.0));
                        w.set(a, b, c, d, self.get(a, b, c, d) - ricci_part + scalar_part);
                    }
                }
            }
        }
        w
    }

    /// `sum_{a<b, c<d} T_abcd^2`: the squared norm as a form on 2-vectors.
    pub fn norm_sq_bivector(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>() / 4.0
    }
}

/// One sectional curvature of a frame 2-plane (1-based frame indices:
/// 1 radial, 2 the filled circle, 3.. torus directions).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlaneCurvature {
    pub plane: [usize; 2],
    pub k: f64,
}

/// Curvature data at one radius.
#[derive(Debug, Clone, Serialize)]
pub struct CurvaturePoint {
    pub r: f64,
    pub n: usize,
    pub sectional: Vec<PlaneCurvature>,
    pub ricci_eigs: Vec<f64>,
    pub scalar: f64,
    /// `|Ric + (n-1) g|`.
    pub einstein_residual: f64,
    /// `|W|`, bivector norm.
    pub weyl_norm: f64,
    /// `|z|^2` for the trace-free Ricci tensor `z`, full sum.
    pub traceless_ricci_sq: f64,
    #[serde(skip)]
    pub riemann: Riemann,
    #[serde(skip)]
    pub ricci: DMatrix<f64>,
}

impl CurvaturePoint {
    pub fn from_riemann(r: f64, riemann: Riemann) -> Self {
        let n = riemann.dim();
        let ricci = riemann.ricci();
        let ricci = (&ricci + ricci.transpose()) * 0.5;
        let scalar = ricci.trace();
        let mut eigs: Vec<f64> = SymmetricEigen::new(ricci.clone()).eigenvalues.iter().copied().collect();
        eigs.sort_by(f64::total_cmp);
        let residual = (&ricci + DMatrix::identity(n, n) * (n as f64 - 1.0)).norm();
        let z = &ricci - DMatrix::identity(n, n) * (scalar / n as f64);
        let weyl_sq = riemann.weyl().norm_sq_bivector();
        let mut sectional = Vec::with_capacity(n * (n - 1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                sectional.push(PlaneCurvature {
                    plane: [a + 1, b + 1],
                    k: riemann.get(a, b, a, b),
                });
            }
        }
        Self {
            r,
            n,
            sectional,
            ricci_eigs: eigs,
            scalar,
            einstein_residual: residual,
            weyl_norm: weyl_sq.sqrt(),
            traceless_ricci_sq: z.norm_squared(),
            riemann,
            ricci,
        }
    }

    /// Sectional curvature of the plane spanned by frame vectors `a`, `b`
    /// (0-based).
    pub fn k(&self, a: usize, b: usize) -> f64 {
        self.riemann.get(a, b, a, b)
    }

    pub fn weyl_sq(&self) -> f64 {
        self.weyl_norm * self.weyl_norm
    }

    pub fn k_min(&self) -> f64 {
        self.sectional.iter().map(|p| p.k).fold(f64::INFINITY, f64::min)
    }

    pub fn k_max(&self) -> f64 {
        self.sectional.iter().map(|p| p.k).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest sectional-curvature difference against another point.
    pub fn sectional_diff(&self, other: &CurvaturePoint) -> f64 {
        self.sectional
            .iter()
            .zip(&other.sectional)
            .map(|(a, b)| (a.k - b.k).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_curvature_contractions() {
        for n in 3..=7 {
            let p = CurvaturePoint::from_riemann(1.0, Riemann::constant(n, -1.0));
            let nf = n as f64;
            assert!((p.scalar + nf * (nf - 1.0)).abs() < 1e-12);
            assert!(p.einstein_residual < 1e-12);
            assert!(p.weyl_norm < 1e-12);
            assert!(p.ricci_eigs.iter().all(|e| (e + nf - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn weyl_vanishes_in_dimension_three() {
        let k = DMatrix::from_row_slice(3, 3, &[0.0, 2.0, -0.5, 2.0, 0.0, 0.7, -0.5, 0.7, 0.0]);
        let p = CurvaturePoint::from_riemann(1.0, Riemann::from_sectionals(&k));
        assert!(p.weyl_norm < 1e-12);
    }

    #[test]
    fn product_of_spheres_has_weyl() {
        // S^2 x S^2: K = 1 on the factors, 0 on mixed planes
        let mut k = DMatrix::zeros(4, 4);
        k[(0, 1)] = 1.0;
        k[(1, 0)] = 1.0;
        k[(2, 3)] = 1.0;
        k[(3, 2)] = 1.0;
        let p = CurvaturePoint::from_riemann(1.0, Riemann::from_sectionals(&k));
        assert!((p.scalar - 4.0).abs() < 1e-12);
        // W_1212 = 1 - (1 + 1)/2 + 4/6 = 2/3, and the same on 3434;
        // W_1313 = 0 - 1 + 2/3 = -1/3 on the four mixed planes.
        let expected = 2.0 * (4.0 / 9.0) + 4.0 * (1.0 / 9.0);
        assert!((p.weyl_sq() - expected).abs() < 1e-12);
    }
}
