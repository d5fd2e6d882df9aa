//! Fixed-capacity linear algebra for chart dimensions up to 3 horizontal
//! coordinates plus one time direction.
//!
//! Everything is stack-allocated; the runtime dimension `n` is carried
//! alongside a `[f64; 4]`-shaped buffer.

use crate::fx;

/// Largest supported dimension (3 horizontal + 1 vertical).
pub const MAX_DIM: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Vector {
    n: usize,
    a: [f64; MAX_DIM],
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Matrix {
    n: usize,
    a: [[f64; MAX_DIM]; MAX_DIM],
}

/// Rank-3 array, used for Christoffel symbols `Γ^k_{ij}` indexed `[k][i][j]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Tensor3 {
    n: usize,
    a: [[[f64; MAX_DIM]; MAX_DIM]; MAX_DIM],
}

impl Vector {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_DIM);
        Vector { n, a: [0.0; MAX_DIM] }
    }

    pub fn from_slice(s: &[f64]) -> Self {
        let mut v = Vector::zeros(s.len());
        v.a[..s.len()].copy_from_slice(s);
        v
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize) -> f64) -> Self {
        let mut v = Vector::zeros(n);
        for i in 0..n {
            v.a[i] = f(i);
        }
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.a[..self.n]
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector::from_fn(self.n, |i| self.a[i] * s)
    }

    pub fn add(&self, o: &Vector) -> Vector {
        Vector::from_fn(self.n, |i| self.a[i] + o.a[i])
    }

    pub fn sub(&self, o: &Vector) -> Vector {
        Vector::from_fn(self.n, |i| self.a[i] - o.a[i])
    }

    pub fn axpy(&self, s: f64, o: &Vector) -> Vector {
        Vector::from_fn(self.n, |i| self.a[i] + s * o.a[i])
    }

    /// Euclidean norm of the components (not metric-aware).
    pub fn norm2(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            s += self.a[i] * self.a[i];
        }
        fx::sqrt(s)
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0;
        for i in 0..self.n {
            m = fx::max(m, fx::abs(self.a[i]));
        }
        m
    }
}

impl core::ops::Index<usize> for Vector {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        debug_assert!(i < self.n);
        &self.a[i]
    }
}

impl core::ops::IndexMut<usize> for Vector {
    #[inline]
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        debug_assert!(i < self.n);
        &mut self.a[i]
    }
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_DIM);
        Matrix { n, a: [[0.0; MAX_DIM]; MAX_DIM] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m.a[i][i] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m.a[i][j] = f(i, j);
            }
        }
        m
    }

    pub fn diag(entries: &[f64]) -> Self {
        let mut m = Matrix::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.a[i][i] = e;
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self.a[i][j] * s)
    }

    pub fn add(&self, o: &Matrix) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self.a[i][j] + o.a[i][j])
    }

    pub fn sub(&self, o: &Matrix) -> Matrix {
        Matrix::from_fn(self.n, |i, j| self.a[i][j] - o.a[i][j])
    }

    pub fn matvec(&self, v: &Vector) -> Vector {
        Vector::from_fn(self.n, |i| {
            let mut s = 0.0;
            for j in 0..self.n {
                s += self.a[i][j] * v[j];
            }
            s
        })
    }

    /// Bilinear form value `u^T A v`.
    pub fn bilinear(&self, u: &Vector, v: &Vector) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                s += u[i] * self.a[i][j] * v[j];
            }
        }
        s
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                m = fx::max(m, fx::abs(self.a[i][j]));
            }
        }
        m
    }

    /// Gaussian elimination with partial pivoting. `None` when singular.
    pub fn solve(&self, rhs: &Vector) -> Option<Vector> {
        let n = self.n;
        let mut a = self.a;
        let mut b = rhs.a;
        for col in 0..n {
            let mut piv = col;
            for r in col + 1..n {
                if fx::abs(a[r][col]) > fx::abs(a[piv][col]) {
                    piv = r;
                }
            }
            if fx::abs(a[piv][col]) < 1e-300 {
                return None;
            }
            a.swap(col, piv);
            b.swap(col, piv);
            for r in col + 1..n {
                let f = a[r][col] / a[col][col];
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
        let mut x = [0.0; MAX_DIM];
        for i in (0..n).rev() {
            let mut s = b[i];
            for j in i + 1..n {
                s -= a[i][j] * x[j];
            }
            x[i] = s / a[i][i];
        }
        Some(Vector { n, a: x })
    }

    pub fn inverse(&self) -> Option<Matrix> {
        let n = self.n;
        let mut inv = Matrix::zeros(n);
        for col in 0..n {
            let e = Vector::from_fn(n, |i| if i == col { 1.0 } else { 0.0 });
            let x = self.solve(&e)?;
            for i in 0..n {
                inv.a[i][col] = x[i];
            }
        }
        Some(inv)
    }

    /// Lower-triangular Cholesky factor; `None` when not positive definite.
    pub fn cholesky(&self) -> Option<Matrix> {
        let n = self.n;
        let mut l = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..=i {
                let mut s = self.a[i][j];
                for k in 0..j {
                    s -= l.a[i][k] * l.a[j][k];
                }
                if i == j {
                    if s <= 0.0 {
                        return None;
                    }
                    l.a[i][j] = fx::sqrt(s);
                } else {
                    l.a[i][j] = s / l.a[j][j];
                }
            }
        }
        Some(l)
    }

    pub fn is_positive_definite(&self) -> bool {
        self.cholesky().is_some()
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
    pub fn sym_eigenvalues(&self) -> Vector {
        let n = self.n;
        let mut a = self.a;
        for _sweep in 0..64 {
            let mut off = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    off += a[i][j] * a[i][j];
                }
            }
            if off < 1e-30 {
                break;
            }
            for p in 0..n {
                for q in p + 1..n {
                    if fx::abs(a[p][q]) < 1e-300 {
                        continue;
                    }
                    let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                    let t = if theta >= 0.0 {
                        1.0 / (theta + fx::sqrt(1.0 + theta * theta))
                    } else {
                        -1.0 / (-theta + fx::sqrt(1.0 + theta * theta))
                    };
                    let c = 1.0 / fx::sqrt(1.0 + t * t);
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[k][p];
                        let akq = a[k][q];
                        a[k][p] = c * akp - s * akq;
                        a[k][q] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[p][k];
                        let aqk = a[q][k];
                        a[p][k] = c * apk - s * aqk;
                        a[q][k] = s * apk + c * aqk;
                    }
                }
            }
        }
        Vector::from_fn(n, |i| a[i][i])
    }

    /// Operator norm of the symmetric bilinear form `self` relative to the
    /// positive-definite metric `g`: the largest `|λ|` of `g^{-1} self`,
    /// computed as the spectrum of `L^{-1} self L^{-T}` with `g = L L^T`.
    pub fn operator_norm_rel(&self, g: &Matrix) -> Option<f64> {
        let n = self.n;
        let l = g.cholesky()?;
        // Solve L Y = self, then L Z^T = Y^T, giving Z = L^{-1} self L^{-T}.
        let mut y = Matrix::zeros(n);
        for col in 0..n {
            // forward substitution on column
            for i in 0..n {
                let mut s = self.a[i][col];
                for k in 0..i {
                    s -= l.a[i][k] * y.a[k][col];
                }
                y.a[i][col] = s / l.a[i][i];
            }
        }
        let mut z = Matrix::zeros(n);
        for row in 0..n {
            for i in 0..n {
                let mut s = y.a[row][i];
                for k in 0..i {
                    s -= l.a[i][k] * z.a[row][k];
                }
                z.a[row][i] = s / l.a[i][i];
            }
        }
        let ev = z.sym_eigenvalues();
        let mut m = 0.0;
        for i in 0..n {
            m = fx::max(m, fx::abs(ev[i]));
        }
        Some(m)
    }

    pub fn symmetrize(&self) -> Matrix {
        Matrix::from_fn(self.n, |i, j| 0.5 * (self.a[i][j] + self.a[j][i]))
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.n && j < self.n);
        &self.a[i][j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.n && j < self.n);
        &mut self.a[i][j]
    }
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        assert!(n <= MAX_DIM);
        Tensor3 { n, a: [[[0.0; MAX_DIM]; MAX_DIM]; MAX_DIM] }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn max_abs(&self) -> f64 {
        let mut m = 0.0;
        for k in 0..self.n {
            for i in 0..self.n {
                for j in 0..self.n {
                    m = fx::max(m, fx::abs(self.a[k][i][j]));
                }
            }
        }
        m
    }

    pub fn scale(&self, s: f64) -> Tensor3 {
        let mut t = *self;
        for k in 0..self.n {
            for i in 0..self.n {
                for j in 0..self.n {
                    t.a[k][i][j] *= s;
                }
            }
        }
        t
    }

    pub fn sub(&self, o: &Tensor3) -> Tensor3 {
        let mut t = *self;
        for k in 0..self.n {
            for i in 0..self.n {
                for j in 0..self.n {
                    t.a[k][i][j] -= o.a[k][i][j];
                }
            }
        }
        t
    }
}

impl core::ops::Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;
    #[inline]
    fn index(&self, (k, i, j): (usize, usize, usize)) -> &f64 {
        &self.a[k][i][j]
    }
}

impl core::ops::IndexMut<(usize, usize, usize)> for Tensor3 {
    #[inline]
    fn index_mut(&mut self, (k, i, j): (usize, usize, usize)) -> &mut f64 {
        &mut self.a[k][i][j]
    }
}
