//! Exact integer and rational linear algebra on small dense matrices.
//!
//! Group relations and lattice-preservation checks must distinguish zero
//! from "small", so everything here works over `i64`/`i128` and
//! arbitrary-precision rationals.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn q_frac(num: i64, den: i64) -> Q {
    Q::new(BigInt::from(num), BigInt::from(den))
}

pub fn q_to_f64(x: &Q) -> f64 {
    // numerator/denominator may overflow f64 individually for deep products
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => x.to_f64().unwrap_or(f64::NAN),
    }
}

/// Parses `a`, `-a`, or `a/b` into an exact rational.
pub fn parse_q(s: &str) -> Option<Q> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let a: BigInt = a.trim().parse().ok()?;
        let b: BigInt = b.trim().parse().ok()?;
        if b.is_zero() {
            return None;
        }
        Some(Q::new(a, b))
    } else {
        let a: BigInt = s.parse().ok()?;
        Some(Q::from_integer(a))
    }
}

pub fn format_q(x: &Q) -> String {
    if x.is_integer() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

/// Extended Euclid: returns `(g, x, y)` with `a x + b y = g >= 0`.
pub fn egcd(a: i64, b: i64) -> (i64, i64, i64) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i64, 0i64);
    let (mut old_t, mut t) = (0i64, 1i64);
    while r != 0 {
        let quot = old_r.div_euclid(r);
        (old_r, r) = (r, old_r - quot * r);
        (old_s, s) = (s, old_s - quot * s);
        (old_t, t) = (t, old_t - quot * t);
    }
    if old_r < 0 {
        (-old_r, -old_s, -old_t)
    } else {
        (old_r, old_s, old_t)
    }
}

pub fn gcd_all(v: &[i64]) -> i64 {
    v.iter().fold(0i64, |g, &x| g.gcd(&x))
}

/// Dense rational matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct QMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Q>,
}

impl QMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Q::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Q>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rational matrix");
            for (j, x) in row.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        m
    }

    pub fn from_i64(rows: usize, cols: usize, f: impl Fn(usize, usize) -> i64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = q(f(i, j));
            }
        }
        m
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &QMat) -> QMat {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let p = a * &other[(k, j)];
                    out[(i, j)] += p;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = Q::zero();
                for (j, x) in v.iter().enumerate() {
                    acc += &self[(i, j)] * x;
                }
                acc
            })
            .collect()
    }

    pub fn is_identity(&self) -> bool {
        self.rows == self.cols
            && (0..self.rows).all(|i| {
                (0..self.cols).all(|j| {
                    let x = &self[(i, j)];
                    if i == j {
                        x.is_one()
                    } else {
                        x.is_zero()
                    }
                })
            })
    }

    pub fn is_integral(&self) -> bool {
        self.data.iter().all(|x| x.is_integer())
    }

    /// Row echelon form by Gaussian elimination; returns (echelon, pivot columns).
    fn echelon(&self) -> (QMat, Vec<usize>) {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut row = 0;
        for col in 0..m.cols {
            if row == m.rows {
                break;
            }
            let Some(p) = (row..m.rows).find(|&r| !m[(r, col)].is_zero()) else {
                continue;
            };
            if p != row {
                for j in 0..m.cols {
                    m.data.swap(p * m.cols + j, row * m.cols + j);
                }
            }
            let inv = m[(row, col)].recip();
            for j in 0..m.cols {
                m[(row, j)] = &m[(row, j)] * &inv;
            }
            for r in 0..m.rows {
                if r != row && !m[(r, col)].is_zero() {
                    let f = m[(r, col)].clone();
                    for j in 0..m.cols {
                        let sub = &f * &m[(row, j)];
                        m[(r, j)] -= sub;
                    }
                }
            }
            pivots.push(col);
            row += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.echelon().1.len()
    }

    pub fn det(&self) -> Q {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = Q::one();
        for col in 0..n {
            let Some(p) = (col..n).find(|&r| !m[(r, col)].is_zero()) else {
                return Q::zero();
            };
            if p != col {
                for j in 0..n {
                    m.data.swap(p * n + j, col * n + j);
                }
                det = -det;
            }
            let piv = m[(col, col)].clone();
            det *= &piv;
            for r in col + 1..n {
                if !m[(r, col)].is_zero() {
                    let f = &m[(r, col)] / &piv;
                    for j in col..n {
                        let sub = &f * &m[(col, j)];
                        m[(r, j)] -= sub;
                    }
                }
            }
        }
        det
    }

    /// Basis of the right null space `{x : M x = 0}` as column vectors.
    pub fn null_space(&self) -> Vec<Vec<Q>> {
        let (e, pivots) = self.echelon();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut x = vec![Q::zero(); self.cols];
                x[f] = Q::one();
                for (r, &pc) in pivots.iter().enumerate() {
                    x[pc] = -e[(r, f)].clone();
                }
                x
            })
            .collect()
    }

    pub fn inverse(&self) -> Option<QMat> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = QMat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = Q::one();
        }
        let (e, pivots) = aug.echelon();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        let mut inv = QMat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                inv[(i, j)] = e[(i, n + j)].clone();
            }
        }
        Some(inv)
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| q_to_f64(&self[(i, j)]))
    }
}

impl std::ops::Index<(usize, usize)> for QMat {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }
}

/// Bilinear form `x^T G y`.
pub fn q_form(gram: &QMat, x: &[Q], y: &[Q]) -> Q {
    let gy = gram.mul_vec(y);
    x.iter().zip(&gy).fold(Q::zero(), |acc, (a, b)| acc + a * b)
}

/// Decides whether the rational vector `target` lies in the lattice spanned
/// by the columns of the integer matrix `gens` (`k x d`).
///
/// Column-style Hermite reduction brings `gens` to lower-triangular form;
/// membership is then a forward substitution with integrality checks.
pub fn in_integer_span(gens: &[Vec<i128>], target: &[Q]) -> bool {
    let k = gens.len();
    if k == 0 {
        return true;
    }
    let d = gens[0].len();
    let mut m: Vec<Vec<i128>> = gens.to_vec();
    let mut pivots: Vec<(usize, usize)> = Vec::new(); // (row, col)
    let mut col = 0;
    for row in 0..k {
        if col == d {
            break;
        }
        // gcd-combine columns col..d on this row so that only column `col` is nonzero
        loop {
            let nz: Vec<usize> = (col..d).filter(|&c| m[row][c] != 0).collect();
            if nz.len() <= 1 {
                if let Some(&c) = nz.first() {
                    if c != col {
                        for r in m.iter_mut() {
                            r.swap(c, col);
                        }
                    }
                }
                break;
            }
            // pick the smallest |entry| and reduce the others by it
            let &piv = nz
                .iter()
                .min_by_key(|&&c| m[row][c].abs())
                .expect("non-empty");
            for &c in &nz {
                if c == piv {
                    continue;
                }
                let f = m[row][c].div_euclid(m[row][piv]);
                for r in m.iter_mut() {
                    r[c] -= f * r[piv];
                }
            }
        }
        if m[row][col] != 0 {
            pivots.push((row, col));
            col += 1;
        }
    }
    // Solve H u = target for the pivot columns, u integral.
    let mut residual: Vec<Q> = target.to_vec();
    for &(row, c) in &pivots {
        let h = Q::from_integer(BigInt::from(m[row][c]));
        let u = &residual[row] / &h;
        if !u.is_integer() {
            return false;
        }
        for (r, res) in residual.iter_mut().enumerate() {
            let v = m[r][c];
            if v != 0 {
                *res -= &u * Q::from_integer(BigInt::from(v));
            }
        }
    }
    residual.iter().all(Zero::is_zero)
}

/// Fractional part in `[0, 1)`.
pub fn frac(x: &Q) -> Q {
    x - x.floor()
}

pub fn abs_q(x: &Q) -> Q {
    x.abs()
}

/// Scales a rational vector to a primitive integer vector with the same direction.
pub fn primitive_integer_direction(v: &[Q]) -> Vec<i128> {
    let lcm = v
        .iter()
        .fold(BigInt::one(), |l, x| l.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Q::from_integer(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |g, x| g.gcd(x));
    ints.iter()
        .map(|x| {
            let y = if g.is_zero() { x.clone() } else { x / &g };
            y.to_i128().expect("direction entries fit in i128")
        })
        .collect()
}
