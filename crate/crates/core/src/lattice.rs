//! Flat tori, filling curves, unimodular basis completion and the
//! sigma-directed deformation of flat structures.
//!
//! A torus `R^d / Z^d` carries the flat metric given by a Gram matrix in
//! the integer basis `v_1, ..., v_d`. A filling curve is a primitive
//! integer vector `sigma`, taken up to sign.

use nalgebra::{DMatrix, DVector};
use num_traits::Num;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{gcd_all, q, QMat, Q};

/// Relative slack applied at the edges of a length window.
const WINDOW_SLACK: f64 = 1e-12;

/// A flat torus `R^d / Z^d` presented by its Gram matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    gram: DMatrix<f64>,
    /// Exact Gram when the input was rational.
    exact: Option<QMat>,
}

impl Lattice {
    pub fn new(gram: DMatrix<f64>) -> Result<Self> {
        Self::validate(&gram)?;
        Ok(Self { gram, exact: None })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::InvalidLattice("empty Gram matrix".into()));
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::InvalidLattice(format!(
                "Gram row has {} entries, expected {d}",
                bad.len()
            )));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn from_rational(gram: QMat) -> Result<Self> {
        if gram.rows != gram.cols {
            return Err(Error::InvalidLattice("Gram matrix is not square".into()));
        }
        if gram != gram.transpose() {
            return Err(Error::InvalidLattice("Gram matrix is not symmetric".into()));
        }
        let f = gram.to_f64();
        Self::validate(&f)?;
        Ok(Self {
            gram: f,
            exact: Some(gram),
        })
    }

    pub fn identity(d: usize) -> Self {
        Self::from_rational(QMat::identity(d)).expect("identity is a valid Gram")
    }

    fn validate(gram: &DMatrix<f64>) -> Result<()> {
        let d = gram.nrows();
        if d == 0 || gram.ncols() != d {
            return Err(Error::InvalidLattice("Gram matrix must be square and non-empty".into()));
        }
        if gram.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidLattice("Gram matrix has non-finite entries".into()));
        }
        let scale = gram.amax().max(1.0);
        for i in 0..d {
            for j in 0..i {
                if (gram[(i, j)] - gram[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidLattice(format!(
                        "Gram matrix is not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        for k in 1..=d {
            let minor = gram.view((0, 0), (k, k)).determinant();
            if minor <= 0.0 {
                return Err(Error::InvalidLattice(format!(
                    "leading principal minor of order {k} is {minor}, not positive"
                )));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn exact_gram(&self) -> Option<&QMat> {
        self.exact.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    /// `x^T G y` for integer coordinate vectors.
    pub fn inner(&self, x: &[i64], y: &[i64]) -> f64 {
        let xv = DVector::from_iterator(x.len(), x.iter().map(|&v| v as f64));
        let yv = DVector::from_iterator(y.len(), y.iter().map(|&v| v as f64));
        (xv.transpose() * &self.gram * yv)[(0, 0)]
    }

    pub fn inner_f64(&self, x: &[f64], y: &[f64]) -> f64 {
        let d = self.dim();
        let mut acc = 0.0;
        for i in 0..d {
            for j in 0..d {
                acc += x[i] * self.gram[(i, j)] * y[j];
            }
        }
        acc
    }

    /// Covolume `sqrt(det G)`.
    pub fn area(&self) -> f64 {
        self.gram.determinant().sqrt()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.gram
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// The same torus with every length multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            gram: &self.gram * (c * c),
            exact: None,
        }
    }

    /// Diameter of the flat torus (its covering radius), estimated on a
    /// grid of `res^d` points of the fundamental cell. Exact for
    /// rectangular lattices when `res` is even.
    pub fn diameter(&self, res: usize) -> f64 {
        let d = self.dim();
        let res = res.max(2);
        let total = res.pow(d as u32);
        let offsets: Vec<Vec<f64>> = (0..4usize.pow(d as u32))
            .map(|mut k| {
                (0..d)
                    .map(|_| {
                        let o = (k % 4) as f64 - 1.0;
                        k /= 4;
                        o
                    })
                    .collect()
            })
            .collect();
        (0..total)
            .into_par_iter()
            .map(|mut idx| {
                let x: Vec<f64> = (0..d)
                    .map(|_| {
                        let c = (idx % res) as f64 / res as f64;
                        idx /= res;
                        c
                    })
                    .collect();
                offsets
                    .iter()
                    .map(|w| {
                        let diff: Vec<f64> = x.iter().zip(w).map(|(a, b)| a - b).collect();
                        self.inner_f64(&diff, &diff)
                    })
                    .fold(f64::INFINITY, f64::min)
                    .sqrt()
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// A primitive integer vector, the class of a simple closed geodesic.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct FillingCurve {
    coeffs: Vec<i64>,
}

impl FillingCurve {
    pub fn new(coeffs: Vec<i64>) -> Result<Self> {
        let g = gcd_all(&coeffs);
        if g != 1 {
            return Err(Error::NotPrimitive { coeffs, gcd: g });
        }
        Ok(Self { coeffs })
    }

    pub fn coeffs(&self) -> &[i64] {
        &self.coeffs
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn negated(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }

    /// Representative of the class mod `+-1` whose first nonzero entry is positive.
    pub fn canonical(&self) -> Self {
        match self.coeffs.iter().find(|&&c| c != 0) {
            Some(&c) if c < 0 => self.negated(),
            _ => self.clone(),
        }
    }

    pub fn is_canonical(&self) -> bool {
        self.coeffs.iter().find(|&&c| c != 0).is_some_and(|&c| c > 0)
    }
}

fn check_dim(l: &Lattice, sigma: &FillingCurve) -> Result<()> {
    if l.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: sigma.dim(),
        });
    }
    Ok(())
}

/// Length of the closed geodesic `sigma` in the flat torus.
pub fn curve_length(l: &Lattice, sigma: &FillingCurve) -> Result<f64> {
    check_dim(l, sigma)?;
    Ok(l.inner(sigma.coeffs(), sigma.coeffs()).sqrt())
}

/// An integral basis `(sigma, b_2, ..., b_d)` stored column-wise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompletedBasis {
    columns: Vec<Vec<i64>>,
}

impl CompletedBasis {
    pub fn dim(&self) -> usize {
        self.columns.len()
    }

    pub fn sigma(&self) -> &[i64] {
        &self.columns[0]
    }

    pub fn column(&self, i: usize) -> &[i64] {
        &self.columns[i]
    }

    pub fn columns(&self) -> &[Vec<i64>] {
        &self.columns
    }

    /// Integer matrix with the basis vectors as columns.
    pub fn matrix(&self) -> DMatrix<i64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| self.columns[j][i])
    }

    pub fn qmat(&self) -> QMat {
        let d = self.dim();
        QMat::from_i64(d, d, |i, j| self.columns[j][i])
    }

    pub fn det(&self) -> i64 {
        let d = self.qmat().det();
        d.to_integer().try_into().expect("determinant fits in i64")
    }

    /// Projection coefficients `<b_i, sigma> / |sigma|^2` for `i >= 2`.
    pub fn twist_fractions(&self, l: &Lattice) -> Vec<f64> {
        let s = self.sigma();
        let s2 = l.inner(s, s);
        self.columns[1..].iter().map(|b| l.inner(b, s) / s2).collect()
    }
}

/// Completes a primitive `sigma` to a unimodular integral basis with
/// `sigma` first, then reduces each `b_i` so `0 <= <b_i, sigma> < |sigma|^2`.
pub fn complete_basis(l: &Lattice, sigma: &FillingCurve) -> Result<CompletedBasis> {
    check_dim(l, sigma)?;
    let d = sigma.dim();
    // `inv` tracks U^{-1} where U reduces sigma to e_1 by unimodular row moves.
    let mut v: Vec<i64> = sigma.coeffs().to_vec();
    let mut inv = DMatrix::<i64>::identity(d, d);
    for j in 1..d {
        if v[j] == 0 {
            continue;
        }
        let (a, b) = (v[0], v[j]);
        let (g, x, y) = crate::exact::egcd(a, b);
        // rows (0, j) <- [[x, y], [-b/g, a/g]] (rows 0, j); det = 1
        let (ag, bg) = (a / g, b / g);
        v[0] = g;
        v[j] = 0;
        // inverse op [[a/g, -y], [b/g, x]] multiplied on the right of inv (columns 0, j)
        for r in 0..d {
            let c0 = inv[(r, 0)];
            let cj = inv[(r, j)];
            inv[(r, 0)] = c0 * ag + cj * bg;
            inv[(r, j)] = -c0 * y + cj * x;
        }
    }
    if v[0] == 0 {
        return Err(Error::NotPrimitive {
            coeffs: sigma.coeffs().to_vec(),
            gcd: 0,
        });
    }
    debug_assert_eq!(v[0].abs(), 1);
    if v[0] < 0 {
        // negate row 0 of U: negate column 0 of U^{-1}
        for r in 0..d {
            inv[(r, 0)] = -inv[(r, 0)];
        }
    }
    let mut columns: Vec<Vec<i64>> = (0..d)
        .map(|j| (0..d).map(|i| inv[(i, j)]).collect())
        .collect();
    debug_assert_eq!(columns[0], sigma.coeffs());

    let mut basis = CompletedBasis { columns };
    if d >= 2 && basis.det() < 0 {
        for x in basis.columns[d - 1].iter_mut() {
            *x = -*x;
        }
    }
    columns = basis.columns;
    let s = sigma.coeffs();
    let s2 = l.inner(s, s);
    for b in columns.iter_mut().skip(1) {
        let k = (l.inner(b, s) / s2).floor() as i64;
        if k != 0 {
            for (bi, si) in b.iter_mut().zip(s) {
                *bi -= k * si;
            }
        }
    }
    Ok(CompletedBasis { columns })
}

/// `v + (lambda - 1) (<v, sigma> / |sigma|^2) sigma`: shrinks the component of
/// `v` along `sigma` by `lambda` and leaves the orthogonal part alone.
///
/// The single implementation point for every sigma-directed deformation:
/// lattice generators and affine translation parts both go through here.
pub fn scale_along<T, F>(v: &[T], sigma: &[T], inner: F, lambda: &T) -> Vec<T>
where
    T: Num + Clone,
    F: Fn(&[T], &[T]) -> T,
{
    let coef = (lambda.clone() - T::one()) * inner(v, sigma) / inner(sigma, sigma);
    v.iter()
        .zip(sigma)
        .map(|(a, s)| a.clone() + coef.clone() * s.clone())
        .collect()
}

/// The Gram of the deformed generators `(sigma(lambda), b_2(lambda), ...)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DeformedGram {
    pub lambda: f64,
    /// Gram in the completed basis.
    pub gram: DMatrix<f64>,
    pub exact: Option<QMat>,
}

impl DeformedGram {
    /// Exact rank when rational data is available, numerical otherwise.
    pub fn rank(&self) -> usize {
        match &self.exact {
            Some(e) => e.rank(),
            None => {
                let eig = self.gram.clone().symmetric_eigen().eigenvalues;
                let scale = eig.amax().max(f64::MIN_POSITIVE);
                eig.iter().filter(|&&x| x > 1e-12 * scale).count()
            }
        }
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.gram
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    /// The same quadratic form in the original basis `v_1, ..., v_d`.
    pub fn in_original_basis(&self, basis: &CompletedBasis) -> DMatrix<f64> {
        let b = basis.matrix().map(|x| x as f64);
        let binv = b.try_inverse().expect("unimodular basis is invertible");
        binv.transpose() * &self.gram * binv
    }

    pub fn into_lattice(self) -> Result<Lattice> {
        match self.exact {
            Some(e) => Lattice::from_rational(e),
            None => Lattice::new(self.gram),
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::OutOfRange {
            what: "lambda",
            value: lambda,
            range: "[0, 1]".into(),
        });
    }
    Ok(())
}

fn check_basis(l: &Lattice, b: &CompletedBasis) -> Result<()> {
    if b.dim() != l.dim() {
        return Err(Error::DimensionMismatch {
            expected: l.dim(),
            got: b.dim(),
        });
    }
    Ok(())
}

/// Deformed flat structure: `sigma -> lambda sigma`,
/// `b_i -> b_i + (lambda - 1) (<b_i, sigma>/|sigma|^2) sigma`.
pub fn deform_flat_structure(l: &Lattice, b: &CompletedBasis, lambda: f64) -> Result<DeformedGram> {
    check_lambda(lambda)?;
    check_basis(l, b)?;
    let d = l.dim();
    let sigma: Vec<f64> = b.sigma().iter().map(|&x| x as f64).collect();
    let inner = |x: &[f64], y: &[f64]| l.inner_f64(x, y);
    let gens: Vec<Vec<f64>> = b
        .columns()
        .iter()
        .map(|c| {
            let c: Vec<f64> = c.iter().map(|&x| x as f64).collect();
            scale_along(&c, &sigma, inner, &lambda)
        })
        .collect();
    let gram = DMatrix::from_fn(d, d, |i, j| l.inner_f64(&gens[i], &gens[j]));
    Ok(DeformedGram {
        lambda,
        gram,
        exact: None,
    })
}

/// Exact-arithmetic variant for rational Gram matrices and rational `lambda`.
pub fn deform_flat_structure_exact(l: &Lattice, b: &CompletedBasis, lambda: &Q) -> Result<DeformedGram> {
    let lf = crate::exact::q_to_f64(lambda);
    check_lambda(lf)?;
    check_basis(l, b)?;
    let g = l
        .exact_gram()
        .ok_or_else(|| Error::InvalidLattice("exact deformation needs a rational Gram".into()))?;
    let d = l.dim();
    let sigma: Vec<Q> = b.sigma().iter().map(|&x| q(x)).collect();
    let inner = |x: &[Q], y: &[Q]| crate::exact::q_form(g, x, y);
    let gens: Vec<Vec<Q>> = b
        .columns()
        .iter()
        .map(|c| {
            let c: Vec<Q> = c.iter().map(|&x| q(x)).collect();
            scale_along(&c, &sigma, inner, lambda)
        })
        .collect();
    let mut exact = QMat::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            exact[(i, j)] = inner(&gens[i], &gens[j]);
        }
    }
    Ok(DeformedGram {
        lambda: lf,
        gram: exact.to_f64(),
        exact: Some(exact),
    })
}

/// All primitive classes (mod sign) with length in `[lmin, lmax]`, in
/// lexicographic order of their canonical representatives.
pub fn enumerate_fillings(l: &Lattice, lmin: f64, lmax: f64) -> Result<Vec<FillingCurve>> {
    if !lmax.is_finite() || !lmin.is_finite() {
        return Err(Error::OutOfRange {
            what: "length window",
            value: if lmax.is_finite() { lmin } else { lmax },
            range: "finite bounds".into(),
        });
    }
    if lmin < 0.0 || lmin > lmax {
        return Err(Error::OutOfRange {
            what: "lmin",
            value: lmin,
            range: format!("[0, {lmax}]"),
        });
    }
    let d = l.dim();
    // ||x||_G^2 >= lambda_min |x|^2 bounds every coordinate.
    let bound = (lmax * lmax * (1.0 + WINDOW_SLACK) / l.min_eigenvalue()).sqrt().floor() as i64;
    let lo2 = lmin * lmin * (1.0 - WINDOW_SLACK);
    let hi2 = lmax * lmax * (1.0 + WINDOW_SLACK);
    let width = (2 * bound + 1) as usize;
    let mut out: Vec<FillingCurve> = (-bound..=bound)
        .into_par_iter()
        .flat_map_iter(|first| {
            let count = width.pow((d - 1) as u32);
            (0..count).filter_map(move |mut idx| {
                let mut v = Vec::with_capacity(d);
                v.push(first);
                for _ in 1..d {
                    v.push((idx % width) as i64 - bound);
                    idx /= width;
                }
                let curve = FillingCurve { coeffs: v };
                if !curve.is_canonical() || gcd_all(&curve.coeffs) != 1 {
                    return None;
                }
                let len2 = l.inner(&curve.coeffs, &curve.coeffs);
                (lo2..=hi2).contains(&len2).then_some(curve)
            })
        })
        .collect();
    out.sort();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::q_frac;

    fn fc(v: &[i64]) -> FillingCurve {
        FillingCurve::new(v.to_vec()).unwrap()
    }

    #[test]
    fn curve_lengths() {
        let id = Lattice::identity(2);
        assert_eq!(curve_length(&id, &fc(&[1, 0])).unwrap(), 1.0);
        assert!((curve_length(&id, &fc(&[2, 1])).unwrap() - 5f64.sqrt()).abs() < 1e-15);
        let two = Lattice::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap();
        assert!((curve_length(&two, &fc(&[1, 1])).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            FillingCurve::new(vec![2, 4]),
            Err(Error::NotPrimitive { gcd: 2, .. })
        ));
        assert!(matches!(
            FillingCurve::new(vec![0, 0]),
            Err(Error::NotPrimitive { gcd: 0, .. })
        ));
        let id = Lattice::identity(3);
        assert!(matches!(
            curve_length(&id, &fc(&[1, 0])),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(Lattice::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).is_err());
        assert!(Lattice::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).is_err());
    }

    #[test]
    fn completion_examples() {
        let id = Lattice::identity(2);
        let b = complete_basis(&id, &fc(&[2, 1])).unwrap();
        assert_eq!(b.columns(), &[vec![2, 1], vec![1, 1]]);
        assert_eq!(b.det(), 1);
        assert_eq!(id.inner(b.column(1), b.sigma()), 3.0);

        let b = complete_basis(&id, &fc(&[1, 0])).unwrap();
        assert_eq!(b.columns(), &[vec![1, 0], vec![0, 1]]);

        let id3 = Lattice::identity(3);
        let s = fc(&[1, 2, 2]);
        let b = complete_basis(&id3, &s).unwrap();
        assert_eq!(b.det().abs(), 1);
        let s2 = id3.inner(s.coeffs(), s.coeffs());
        for i in 1..3 {
            assert!(id3.inner(b.column(i), s.coeffs()).abs() < s2);
        }
    }

    #[test]
    fn completion_with_negative_entries() {
        let id = Lattice::identity(3);
        for v in [[-3, 5, 7], [0, -1, 0], [0, 0, -1], [-1, 0, 0], [6, -10, 15]] {
            let s = fc(&v);
            let b = complete_basis(&id, &s).unwrap();
            assert_eq!(b.sigma(), s.coeffs());
            assert_eq!(b.det(), 1);
        }
    }

    #[test]
    fn deformation_endpoints() {
        let id = Lattice::identity(2);
        let s = fc(&[2, 1]);
        let b = complete_basis(&id, &s).unwrap();
        let one = deform_flat_structure(&id, &b, 1.0).unwrap();
        assert_eq!(one.in_original_basis(&b), *id.gram());

        let zero = deform_flat_structure_exact(&id, &b, &q(0)).unwrap();
        let e = zero.exact.as_ref().unwrap();
        for j in 0..2 {
            assert_eq!(e[(0, j)], q(0));
            assert_eq!(e[(j, 0)], q(0));
        }
        assert_eq!(zero.rank(), 1);

        assert!(deform_flat_structure(&id, &b, 1.5).is_err());
        assert!(deform_flat_structure(&id, &b, -0.1).is_err());
    }

    #[test]
    fn deformation_matches_explicit_vectors() {
        // oracle: deform explicit vectors in R^2 by hand
        let id = Lattice::identity(2);
        let b = complete_basis(&id, &fc(&[2, 1])).unwrap();
        let lam = 0.5;
        let sigma = [2.0, 1.0];
        let bvec = [1.0, 1.0];
        let proj = (bvec[0] * sigma[0] + bvec[1] * sigma[1]) / 5.0;
        let s_l = [lam * sigma[0], lam * sigma[1]];
        let b_l = [
            bvec[0] + (lam - 1.0) * proj * sigma[0],
            bvec[1] + (lam - 1.0) * proj * sigma[1],
        ];
        let dot = |x: [f64; 2], y: [f64; 2]| x[0] * y[0] + x[1] * y[1];
        let oracle = [
            [dot(s_l, s_l), dot(s_l, b_l)],
            [dot(b_l, s_l), dot(b_l, b_l)],
        ];
        let got = deform_flat_structure(&id, &b, lam).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((got.gram[(i, j)] - oracle[i][j]).abs() < 1e-12);
            }
        }
        let exact = deform_flat_structure_exact(&id, &b, &q_frac(1, 2)).unwrap();
        assert_eq!(exact.rank(), 2);
    }

    #[test]
    fn enumeration_examples() {
        let id = Lattice::identity(2);
        let got = enumerate_fillings(&id, 2.0, 3.0).unwrap();
        let want: Vec<FillingCurve> = [[1, -2], [1, 2], [2, -1], [2, 1]].iter().map(|v| fc(v)).collect();
        assert_eq!(got, want);

        let got = enumerate_fillings(&id, 1.0, 1.0).unwrap();
        assert_eq!(got, vec![fc(&[0, 1]), fc(&[1, 0])]);

        let big = Lattice::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        assert!(enumerate_fillings(&big, 0.0, 0.5).unwrap().is_empty());

        assert!(enumerate_fillings(&id, 0.0, f64::INFINITY).is_err());
        assert!(enumerate_fillings(&id, 3.0, 2.0).is_err());
    }

    #[test]
    fn diameter_of_rectangular_torus() {
        let l = Lattice::from_rows(&[vec![4.0, 0.0], vec![0.0, 1.0]]).unwrap();
        // half the diagonal of a 2 x 1 rectangle
        assert!((l.diameter(8) - (5f64).sqrt() / 2.0).abs() < 1e-12);
    }
}
