//! Chart-based tensor calculus for a time-dependent horizontal metric
//! `g(t)` and the product-space metric on `M x I`.
//!
//! The connection of the product metric mixes horizontal and vertical
//! directions through the Ricci tensor of `g(t)`: the horizontal
//! Christoffel symbols are those of `g(t)`, the mixed symbols are
//! `-g^{kl} Ric_{il}`, the vertical ones are `Ric_{ij}`, and all symbols
//! with two or more time indices vanish.

use crate::chart::ChartDomain;
use crate::fx;
use crate::linalg::{Matrix, Tensor3, Vector};
use rand_core::{RngCore, SeedableRng};

/// A time-dependent Riemannian metric on a chart, with analytic time
/// derivative and optional analytic curvature closures.
pub trait MetricFamily: Sync {
    fn chart(&self) -> &ChartDomain;

    /// End of the time interval `[0, T]`.
    fn horizon(&self) -> f64;

    /// `g(t, x)`, symmetric positive definite at admissible points.
    fn metric(&self, t: f64, x: &Vector) -> Matrix;

    /// Analytic `dg/dt`.
    fn metric_dt(&self, t: f64, x: &Vector) -> Matrix;

    /// Analytic spatial derivative `d g / d x_dir`, when available.
    fn metric_dx(&self, _t: f64, _x: &Vector, _dir: usize) -> Option<Matrix> {
        None
    }

    /// Analytic Ricci tensor, when available.
    fn ricci(&self, _t: f64, _x: &Vector) -> Option<Matrix> {
        None
    }
}

/// A tangent vector on `M x I`: chart components along `M` plus a
/// coefficient on the time direction.
#[derive(Clone, Copy, Debug)]
pub struct SpacetimeVector {
    pub horizontal: Vector,
    pub vertical: f64,
}

impl SpacetimeVector {
    pub fn horizontal(v: Vector) -> Self {
        SpacetimeVector { horizontal: v, vertical: 0.0 }
    }

    pub fn time_direction(n: usize) -> Self {
        SpacetimeVector { horizontal: Vector::zeros(n), vertical: 1.0 }
    }

    /// Component in the extended index range `0..=n`, with index `n`
    /// standing for the time direction.
    #[inline]
    pub fn component(&self, a: usize) -> f64 {
        if a < self.horizontal.dim() {
            self.horizontal[a]
        } else {
            self.vertical
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        SpacetimeVector { horizontal: self.horizontal.scale(s), vertical: self.vertical * s }
    }

    pub fn sub(&self, o: &Self) -> Self {
        SpacetimeVector {
            horizontal: self.horizontal.sub(&o.horizontal),
            vertical: self.vertical - o.vertical,
        }
    }
}

/// Christoffel table of the product metric at one `(t, x)`.
#[derive(Clone, Copy, Debug)]
pub struct ChristoffelTable {
    /// `Γ^k_{ij}` of `g(t)`, indexed `[k][i][j]`.
    pub horizontal: Tensor3,
    /// Mixed symbols `-g^{kl} Ric_{il}`, indexed `[k][i]` (row `k`, column `i`).
    pub mixed: Matrix,
    /// Vertical symbols, equal to `Ric_{ij}`.
    pub vertical: Matrix,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GeomError {
    /// Point outside the admissible chart region (margin included).
    Inadmissible,
    /// Metric not positive definite at the evaluation point.
    NotPositiveDefinite,
    /// A direction that must be `g`-unit was not.
    NonUnitDirection,
    /// Too close to a time-interval endpoint for time differencing.
    TimeBoundary,
    /// Curve speed `|X|` collapsed below the degeneracy threshold.
    DegenerateCurve,
    /// Not enough trajectory frames for the requested time stencil.
    InsufficientFrames,
}

impl core::fmt::Display for GeomError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            GeomError::Inadmissible => write!(f, "point outside the admissible chart region"),
            GeomError::NotPositiveDefinite => write!(f, "metric is not positive definite"),
            GeomError::NonUnitDirection => write!(f, "direction is not g-unit"),
            GeomError::TimeBoundary => write!(f, "too close to the time-interval boundary"),
            GeomError::DegenerateCurve => write!(f, "curve speed |X| degenerated"),
            GeomError::InsufficientFrames => write!(f, "not enough trajectory frames"),
        }
    }
}

impl core::error::Error for GeomError {}

pub type GeomResult<T> = Result<T, GeomError>;

/// Relative finite-difference step: `h = FD_STEP_REL * coordinate extent`.
pub const FD_STEP_REL: f64 = 1e-4;

/// Differential-geometry operator bundle over one metric family.
#[derive(Clone, Copy)]
pub struct Geometry<'a> {
    family: &'a dyn MetricFamily,
    h_rel: f64,
    /// Ignore analytic spatial-derivative and Ricci closures; used by
    /// cross-check tests that pit finite differences against closed forms.
    force_fd: bool,
}

impl<'a> Geometry<'a> {
    pub fn new(family: &'a dyn MetricFamily) -> Self {
        Geometry { family, h_rel: FD_STEP_REL, force_fd: false }
    }

    pub fn with_step(family: &'a dyn MetricFamily, h_rel: f64) -> Self {
        Geometry { family, h_rel, force_fd: false }
    }

    pub fn finite_difference_only(mut self) -> Self {
        self.force_fd = true;
        self
    }

    #[inline]
    pub fn family(&self) -> &'a dyn MetricFamily {
        self.family
    }

    #[inline]
    pub fn chart(&self) -> &ChartDomain {
        self.family.chart()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.family.chart().dim()
    }

    #[inline]
    pub fn horizon(&self) -> f64 {
        self.family.horizon()
    }

    fn step(&self, dir: usize) -> f64 {
        self.h_rel * self.chart().extent(dir)
    }

    fn time_step(&self) -> f64 {
        self.h_rel * self.family.horizon()
    }

    fn check_admissible(&self, x: &Vector) -> GeomResult<()> {
        if self.chart().is_admissible(x) {
            Ok(())
        } else {
            Err(GeomError::Inadmissible)
        }
    }

    /// Metric with admissibility and positivity checks.
    pub fn metric_checked(&self, t: f64, x: &Vector) -> GeomResult<Matrix> {
        self.check_admissible(x)?;
        let g = self.family.metric(t, x);
        if !g.is_positive_definite() {
            return Err(GeomError::NotPositiveDefinite);
        }
        Ok(g)
    }

    fn shifted(&self, x: &Vector, dir: usize, delta: f64) -> Vector {
        let mut y = *x;
        y[dir] += delta;
        self.chart().reduce(&y)
    }

    /// `d g / d x_dir`: analytic closure when present, else 2nd-order
    /// central differences of the metric closure.
    fn metric_dx(&self, t: f64, x: &Vector, dir: usize) -> Matrix {
        if !self.force_fd {
            if let Some(d) = self.family.metric_dx(t, x, dir) {
                return d;
            }
        }
        let h = self.step(dir);
        let gp = self.family.metric(t, &self.shifted(x, dir, h));
        let gm = self.family.metric(t, &self.shifted(x, dir, -h));
        gp.sub(&gm).scale(0.5 / h)
    }

    /// Horizontal Christoffel symbols `Γ^k_{ij}` of `g(t)` at `(t, x)`.
    pub fn christoffel(&self, t: f64, x: &Vector) -> GeomResult<Tensor3> {
        let n = self.dim();
        let g = self.metric_checked(t, x)?;
        let ginv = g.inverse().ok_or(GeomError::NotPositiveDefinite)?;
        let mut dg = [Matrix::zeros(n); 4];
        for (l, slot) in dg.iter_mut().enumerate().take(n) {
            *slot = self.metric_dx(t, x, l);
        }
        let mut gamma = Tensor3::zeros(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut s = 0.0;
                    for l in 0..n {
                        s += ginv[(k, l)] * (dg[i][(j, l)] + dg[j][(i, l)] - dg[l][(i, j)]);
                    }
                    gamma[(k, i, j)] = 0.5 * s;
                }
            }
        }
        Ok(gamma)
    }

    /// Ricci tensor of `g(t)`; analytic closure when present, otherwise
    /// finite differences of the Christoffel field.
    pub fn ricci(&self, t: f64, x: &Vector) -> GeomResult<Matrix> {
        self.check_admissible(x)?;
        if !self.force_fd {
            if let Some(r) = self.family.ricci(t, x) {
                return Ok(r);
            }
        }
        self.ricci_fd(t, x)
    }

    /// Ricci by contraction of finite differences of the Christoffel field,
    /// regardless of analytic closures.
    pub fn ricci_fd(&self, t: f64, x: &Vector) -> GeomResult<Matrix> {
        let n = self.dim();
        let gamma = self.christoffel(t, x)?;
        // dgamma[a] = d Γ / d x_a
        let mut dgamma = [Tensor3::zeros(n); 4];
        for a in 0..n {
            let h = self.step(a);
            let gp = self.christoffel(t, &self.shifted(x, a, h))?;
            let gm = self.christoffel(t, &self.shifted(x, a, -h))?;
            dgamma[a] = gp.sub(&gm).scale(0.5 / h);
        }
        let mut ric = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    s += dgamma[k][(k, i, j)] - dgamma[i][(k, k, j)];
                    for l in 0..n {
                        s += gamma[(k, k, l)] * gamma[(l, i, j)]
                            - gamma[(k, i, l)] * gamma[(l, k, j)];
                    }
                }
                ric[(i, j)] = s;
            }
        }
        Ok(ric.symmetrize())
    }

    /// Covariant derivative of the Ricci tensor along a `g`-unit direction:
    /// `(∇_S Ric)_{ij} = S^k (∂_k Ric_{ij} - Γ^l_{ki} Ric_{lj} - Γ^l_{kj} Ric_{il})`.
    pub fn cov_deriv_ricci(&self, t: f64, x: &Vector, s_dir: &Vector) -> GeomResult<Matrix> {
        let n = self.dim();
        let g = self.metric_checked(t, x)?;
        if fx::abs(g.bilinear(s_dir, s_dir) - 1.0) > 1e-9 {
            return Err(GeomError::NonUnitDirection);
        }
        let gamma = self.christoffel(t, x)?;
        let ric = self.ricci(t, x)?;
        let mut dric = [Matrix::zeros(n); 4];
        for (k, slot) in dric.iter_mut().enumerate().take(n) {
            let h = self.step(k);
            let rp = self.ricci(t, &self.shifted(x, k, h))?;
            let rm = self.ricci(t, &self.shifted(x, k, -h))?;
            *slot = rp.sub(&rm).scale(0.5 / h);
        }
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let mut s = 0.0;
                for k in 0..n {
                    let mut term = dric[k][(i, j)];
                    for l in 0..n {
                        term -= gamma[(l, k, i)] * ric[(l, j)] + gamma[(l, k, j)] * ric[(i, l)];
                    }
                    s += s_dir[k] * term;
                }
                out[(i, j)] = s;
            }
        }
        Ok(out)
    }

    /// Full Christoffel table of the product metric at `(t, x)`.
    pub fn spacetime_christoffel(&self, t: f64, x: &Vector) -> GeomResult<ChristoffelTable> {
        let n = self.dim();
        let g = self.metric_checked(t, x)?;
        let ginv = g.inverse().ok_or(GeomError::NotPositiveDefinite)?;
        let horizontal = self.christoffel(t, x)?;
        let ric = self.ricci(t, x)?;
        let mut mixed = Matrix::zeros(n);
        for k in 0..n {
            for i in 0..n {
                let mut s = 0.0;
                for l in 0..n {
                    s -= ginv[(k, l)] * ric[(i, l)];
                }
                mixed[(k, i)] = s;
            }
        }
        Ok(ChristoffelTable { horizontal, mixed, vertical: ric })
    }

    /// Covariant derivative `∇_A V` on `M x I` at `(t, x)`.
    ///
    /// `dv` carries the plain directional derivatives `A(V^a)` of the
    /// components; the caller supplies them (for fields along a discrete
    /// curve they come from the periodic stencil).
    pub fn spacetime_cov_deriv(
        &self,
        t: f64,
        x: &Vector,
        a: &SpacetimeVector,
        v: &SpacetimeVector,
        dv: &SpacetimeVector,
    ) -> GeomResult<SpacetimeVector> {
        let n = self.dim();
        let table = self.spacetime_christoffel(t, x)?;
        let mut horiz = Vector::zeros(n);
        for k in 0..n {
            let mut s = dv.horizontal[k];
            for i in 0..n {
                for j in 0..n {
                    s += a.horizontal[i] * v.horizontal[j] * table.horizontal[(k, i, j)];
                }
                s += (a.horizontal[i] * v.vertical + a.vertical * v.horizontal[i])
                    * table.mixed[(k, i)];
            }
            horiz[k] = s;
        }
        let vert = dv.vertical + table.vertical.bilinear(&a.horizontal, &v.horizontal);
        Ok(SpacetimeVector { horizontal: horiz, vertical: vert })
    }

    /// Christoffel symbols of the product metric as one `(n+1)`-dimensional
    /// table; index `n` is the time direction.
    fn gamma_hat_full(&self, t: f64, x: &Vector) -> GeomResult<Tensor3> {
        let n = self.dim();
        let table = self.spacetime_christoffel(t, x)?;
        let mut full = Tensor3::zeros(n + 1);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    full[(k, i, j)] = table.horizontal[(k, i, j)];
                }
                full[(k, i, n)] = table.mixed[(k, i)];
                full[(k, n, i)] = table.mixed[(k, i)];
            }
        }
        for i in 0..n {
            for j in 0..n {
                full[(n, i, j)] = table.vertical[(i, j)];
            }
        }
        Ok(full)
    }

    /// One Richardson level over 2nd-order central differences.
    fn richardson_gamma<F>(&self, f: F, h: f64) -> GeomResult<Tensor3>
    where
        F: Fn(f64) -> GeomResult<Tensor3>,
    {
        let coarse = f(h)?.sub(&f(-h)?).scale(0.5 / h);
        let half = 0.5 * h;
        let fine = f(half)?.sub(&f(-half)?).scale(0.5 / half);
        Ok(fine.scale(4.0 / 3.0).sub(&coarse.scale(1.0 / 3.0)))
    }

    /// Riemann curvature of the product metric contracted with four
    /// spacetime vectors.
    ///
    /// Convention: `Rm(A, B, C, D) = <R(A, B) D, C>` with
    /// `R(X, Y) = ∇_X ∇_Y - ∇_Y ∇_X - ∇_{[X,Y]}`, so that
    /// `Rm(A, B, A, B)` is a positive multiple of sectional curvature on
    /// the round sphere.
    pub fn spacetime_riemann(
        &self,
        t: f64,
        x: &Vector,
        a: &SpacetimeVector,
        b: &SpacetimeVector,
        c: &SpacetimeVector,
        d: &SpacetimeVector,
    ) -> GeomResult<f64> {
        let n = self.dim();
        let ht = self.time_step();
        if t - 2.0 * ht < 0.0 || t + 2.0 * ht > self.family.horizon() {
            return Err(GeomError::TimeBoundary);
        }
        let gamma = self.gamma_hat_full(t, x)?;
        let mut dgamma = [Tensor3::zeros(n + 1); 5];
        for dir in 0..n {
            let h = self.step(dir);
            dgamma[dir] =
                self.richardson_gamma(|delta| self.gamma_hat_full(t, &self.shifted(x, dir, delta)), h)?;
        }
        dgamma[n] = self.richardson_gamma(|delta| self.gamma_hat_full(t + delta, x), ht)?;

        let g = self.metric_checked(t, x)?;
        // Product-metric components: block g on M, unit on the I factor.
        let mut ghat = Matrix::zeros(n + 1);
        for i in 0..n {
            for j in 0..n {
                ghat[(i, j)] = g[(i, j)];
            }
        }
        ghat[(n, n)] = 1.0;

        let m = n + 1;
        let mut value = 0.0;
        for ia in 0..m {
            let ca = a.component(ia);
            if ca == 0.0 {
                continue;
            }
            for ib in 0..m {
                let cb = b.component(ib);
                if cb == 0.0 {
                    continue;
                }
                for ic in 0..m {
                    let cd = d.component(ic);
                    if cd == 0.0 {
                        continue;
                    }
                    // (R(e_a, e_b) e_c)^l
                    for l in 0..m {
                        let mut r = dgamma[ia][(l, ib, ic)] - dgamma[ib][(l, ia, ic)];
                        for mu in 0..m {
                            r += gamma[(l, ia, mu)] * gamma[(mu, ib, ic)]
                                - gamma[(l, ib, mu)] * gamma[(mu, ia, ic)];
                        }
                        let mut lowered = 0.0;
                        for e in 0..m {
                            lowered += ghat[(l, e)] * c.component(e);
                        }
                        value += ca * cb * cd * r * lowered;
                    }
                }
            }
        }
        Ok(value)
    }

    /// Riemann curvature of the horizontal metric `g(t)` alone, same
    /// convention and argument order as [`Self::spacetime_riemann`].
    pub fn riemann_horizontal(
        &self,
        t: f64,
        x: &Vector,
        a: &Vector,
        b: &Vector,
        c: &Vector,
        d: &Vector,
    ) -> GeomResult<f64> {
        let n = self.dim();
        let gamma = self.christoffel(t, x)?;
        let mut dgamma = [Tensor3::zeros(n); 4];
        for (dir, slot) in dgamma.iter_mut().enumerate().take(n) {
            let h = self.step(dir);
            *slot =
                self.richardson_gamma(|delta| self.christoffel(t, &self.shifted(x, dir, delta)), h)?;
        }
        let g = self.metric_checked(t, x)?;
        let mut value = 0.0;
        for ia in 0..n {
            if a[ia] == 0.0 {
                continue;
            }
            for ib in 0..n {
                if b[ib] == 0.0 {
                    continue;
                }
                for ic in 0..n {
                    if d[ic] == 0.0 {
                        continue;
                    }
                    for l in 0..n {
                        let mut r = dgamma[ia][(l, ib, ic)] - dgamma[ib][(l, ia, ic)];
                        for mu in 0..n {
                            r += gamma[(l, ia, mu)] * gamma[(mu, ib, ic)]
                                - gamma[(l, ib, mu)] * gamma[(mu, ia, ic)];
                        }
                        let mut lowered = 0.0;
                        for e in 0..n {
                            lowered += g[(l, e)] * c[e];
                        }
                        value += a[ia] * b[ib] * d[ic] * r * lowered;
                    }
                }
            }
        }
        Ok(value)
    }

    /// Max-norm residual of `dg/dt + 2 Ric` over seeded pseudo-random
    /// admissible samples. Deterministic for a fixed seed.
    pub fn validate_ricci_flow(&self, sample_count: usize, seed: u64) -> f64 {
        assert!(sample_count >= 1);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut unit = move || (rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        let chart = *self.chart();
        let n = chart.dim();
        let mut worst = 0.0;
        for _ in 0..sample_count {
            let t = unit() * self.family.horizon();
            let x = Vector::from_fn(n, |i| {
                let (lo, hi) = if chart.is_periodic(i) {
                    (chart.lower(i), chart.upper(i))
                } else {
                    (chart.lower(i) + chart.margin(), chart.upper(i) - chart.margin())
                };
                lo + unit() * (hi - lo)
            });
            let dgdt = self.family.metric_dt(t, &x);
            let ric = match self.ricci(t, &x) {
                Ok(r) => r,
                Err(_) => continue,
            };
            worst = fx::max(worst, dgdt.add(&ric.scale(2.0)).max_abs());
        }
        worst
    }

    /// `g`-inner product of horizontal vectors at `(t, x)`.
    pub fn inner(&self, t: f64, x: &Vector, u: &Vector, v: &Vector) -> GeomResult<f64> {
        Ok(self.metric_checked(t, x)?.bilinear(u, v))
    }

    /// Product-metric inner product of spacetime vectors.
    pub fn inner_spacetime(
        &self,
        t: f64,
        x: &Vector,
        u: &SpacetimeVector,
        v: &SpacetimeVector,
    ) -> GeomResult<f64> {
        let g = self.metric_checked(t, x)?;
        Ok(g.bilinear(&u.horizontal, &v.horizontal) + u.vertical * v.vertical)
    }
}
