//! The unscented transform: sigma-point generation, weights, moment
//! reconstruction and the generic unscented measurement update.
//!
//! Slots listed as angular are treated as periodic: their mean is the
//! circular mean `atan2(sum w sin, sum w cos)` and every residual in those
//! slots is wrapped into (-pi, pi].

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::error::{Error, Result};
use crate::geometry::wrap_angle;

/// Mean and covariance of a Gaussian.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianState {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl GaussianState {
    pub fn new(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let n = mean.len();
        if cov.nrows() != n || cov.ncols() != n {
            return Err(Error::InvalidConfig(format!(
                "covariance is {}x{} but mean has {} entries",
                cov.nrows(),
                cov.ncols(),
                n
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gaussian state"));
        }
        Ok(Self { mean, cov })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

/// Weighted sigma points; column `i` of `points` is sigma point `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaSet {
    pub points: DMatrix<f64>,
    pub weights: DVector<f64>,
    pub lambda: f64,
}

impl SigmaSet {
    pub fn dim(&self) -> usize {
        self.points.nrows()
    }

    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    /// Pushes every sigma point through `f`, keeping the weights.
    pub fn map<F>(&self, mut f: F) -> SigmaSet
    where
        F: FnMut(DVectorView<'_, f64>) -> DVector<f64>,
    {
        let cols: Vec<DVector<f64>> = self.points.column_iter().map(|c| f(c.as_view())).collect();
        let rows = cols.first().map_or(0, |c| c.len());
        let points = DMatrix::from_fn(rows, cols.len(), |r, c| cols[c][r]);
        SigmaSet {
            points,
            weights: self.weights.clone(),
            lambda: self.lambda,
        }
    }
}

/// `3 - N`, clipped so that `N + lambda >= 1`.
pub fn default_lambda(n: usize) -> f64 {
    let n = n as f64;
    (3.0 - n).max(1.0 - n)
}

/// How the scaling parameter is chosen for a given state dimension.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Scaling {
    #[default]
    Classic,
    Fixed(f64),
}

impl Scaling {
    pub fn lambda_for(&self, n: usize) -> f64 {
        match *self {
            Scaling::Classic => default_lambda(n),
            Scaling::Fixed(l) => l,
        }
    }
}

pub fn ut_weights(n: usize, lambda: f64) -> Result<DVector<f64>> {
    let spread = n as f64 + lambda;
    if !(spread > 0.0) || !spread.is_finite() {
        return Err(Error::DegenerateScaling(spread));
    }
    let side = 1.0 / (2.0 * spread);
    let mut w = DVector::from_element(2 * n + 1, side);
    w[0] = lambda / spread;
    Ok(w)
}

/// Lower-triangular factor of a positive semi-definite matrix.
///
/// Pivots that vanish to within round-off produce zero columns, so singular
/// but valid covariances (including the zero matrix) factor cleanly. The
/// input is symmetrized first; when factorization fails a diagonal jitter of
/// `1e-12 * trace / N` is added and escalated tenfold up to `1e-6 * trace`.
pub fn psd_cholesky(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = cov.nrows();
    if cov.ncols() != n {
        return Err(Error::CholeskyFailure);
    }
    if cov.iter().any(|v| !v.is_finite()) {
        return Err(Error::CholeskyFailure);
    }
    let sym = symmetrized(cov);
    if let Some(l) = semidefinite_factor(&sym) {
        return Ok(l);
    }
    let trace = sym.trace();
    if !(trace > 0.0) {
        return Err(Error::CholeskyFailure);
    }
    let mut jitter = 1e-12 * trace / n as f64;
    while jitter <= 1e-6 * trace {
        let mut a = sym.clone();
        for i in 0..n {
            a[(i, i)] += jitter;
        }
        if let Some(l) = semidefinite_factor(&a) {
            return Ok(l);
        }
        jitter *= 10.0;
    }
    Err(Error::CholeskyFailure)
}

fn semidefinite_factor(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let n = a.nrows();
    let max_diag = (0..n).map(|i| a[(i, i)]).fold(0.0f64, f64::max);
    let tol = 1e-13 * max_diag;
    let off_tol = 10.0 * (tol * max_diag).sqrt();
    // row-major lower triangle so the inner products run over contiguous memory
    let mut l = vec![0.0f64; n * n];
    for j in 0..n {
        let d = a[(j, j)] - dot(&l[j * n..j * n + j], &l[j * n..j * n + j]);
        if d > tol {
            let pivot = d.sqrt();
            l[j * n + j] = pivot;
            for i in (j + 1)..n {
                let r = a[(i, j)] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                l[i * n + j] = r / pivot;
            }
        } else if d >= -tol {
            for i in (j + 1)..n {
                let r = a[(i, j)] - dot(&l[i * n..i * n + j], &l[j * n..j * n + j]);
                if r.abs() > off_tol {
                    return None;
                }
            }
        } else {
            return None;
        }
    }
    Some(DMatrix::from_row_slice(n, n, &l))
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Generates the `2N + 1` sigma points of `state`: the mean, then the mean
/// plus and minus each column of the factor of `(N + lambda) * cov`.
pub fn sigma_points(state: &GaussianState, lambda: f64) -> Result<SigmaSet> {
    let n = state.dim();
    let weights = ut_weights(n, lambda)?;
    let factor = psd_cholesky(&state.cov)? * (n as f64 + lambda).sqrt();
    let mut points = DMatrix::zeros(n, 2 * n + 1);
    points.column_mut(0).copy_from(&state.mean);
    for i in 0..n {
        let col = factor.column(i);
        points.column_mut(1 + i).copy_from(&(&state.mean + col));
        points.column_mut(1 + n + i).copy_from(&(&state.mean - col));
    }
    Ok(SigmaSet {
        points,
        weights,
        lambda,
    })
}

pub fn reconstruct(sigma: &SigmaSet) -> GaussianState {
    reconstruct_with_angles(sigma, &[])
}

/// Weighted mean and covariance of a sigma set; `angular` lists periodic slots.
///
/// See [`covariance_center`] for the point the covariance is taken about.
pub fn reconstruct_with_angles(sigma: &SigmaSet, angular: &[usize]) -> GaussianState {
    let mean = weighted_mean(&sigma.points, &sigma.weights, angular);
    let dev = residuals(&sigma.points, &covariance_center(&sigma.points, &sigma.weights, &mean), angular);
    let cov = weighted_outer(&dev, &sigma.weights, &dev);
    GaussianState {
        mean,
        cov: symmetrized(&cov),
    }
}

pub fn weighted_mean(points: &DMatrix<f64>, weights: &DVector<f64>, angular: &[usize]) -> DVector<f64> {
    let mut mean = points * weights;
    for &a in angular {
        let row = points.row(a);
        let (mut s, mut c) = (0.0, 0.0);
        for (v, w) in row.iter().zip(weights.iter()) {
            s += w * v.sin();
            c += w * v.cos();
        }
        mean[a] = s.atan2(c);
    }
    mean
}

/// Point the sample covariance is taken about: the weighted mean, or the
/// central sigma point when the centre weight is negative.
///
/// With a negative centre weight the weighted-mean form can turn indefinite
/// under a nonlinear map. About the central point the estimate becomes the
/// weighted-mean form plus `d d^T`, where `d` is the shift between the two
/// centres, so it stays positive semi-definite. Both forms coincide for
/// affine maps.
pub fn covariance_center(points: &DMatrix<f64>, weights: &DVector<f64>, mean: &DVector<f64>) -> DVector<f64> {
    if weights[0] < 0.0 {
        points.column(0).clone_owned()
    } else {
        mean.clone()
    }
}

/// Columns of `points` minus `center`, with angular slots wrapped.
pub fn residuals(points: &DMatrix<f64>, center: &DVector<f64>, angular: &[usize]) -> DMatrix<f64> {
    let mut dev = points.clone();
    for mut col in dev.column_iter_mut() {
        col -= center;
        for &a in angular {
            col[a] = wrap_angle(col[a]);
        }
    }
    dev
}

/// `sum_i w_i a_i b_i^T` for residual matrices `a` and `b`.
pub fn weighted_outer(a: &DMatrix<f64>, weights: &DVector<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut aw = a.clone();
    for (mut col, w) in aw.column_iter_mut().zip(weights.iter()) {
        col *= *w;
    }
    aw * b.transpose()
}

/// Intermediate quantities of an unscented measurement update.
#[derive(Debug, Clone, PartialEq)]
pub struct UpdateTrace {
    /// Predicted measurement.
    pub z_hat: DVector<f64>,
    /// Innovation covariance, including measurement noise.
    pub innovation_cov: DMatrix<f64>,
    /// State-measurement cross-covariance.
    pub cross_cov: DMatrix<f64>,
    pub gain: DMatrix<f64>,
    pub innovation: DVector<f64>,
}

/// Periodic slots of the state and measurement vectors.
#[derive(Debug, Clone, Copy, Default)]
pub struct AngularSlots<'a> {
    pub state: &'a [usize],
    pub measurement: &'a [usize],
}

/// Standard-form unscented correction: `K = C S^-1`, `x += K (z - z_hat)`,
/// `P -= K S K^T`. The innovation covariance uses [`covariance_center`].
pub fn unscented_update<G>(
    prior: &GaussianState,
    lambda: f64,
    observe: G,
    z: &DVector<f64>,
    noise: &DMatrix<f64>,
    angular: AngularSlots<'_>,
) -> Result<(GaussianState, UpdateTrace)>
where
    G: FnMut(DVectorView<'_, f64>) -> DVector<f64>,
{
    let sigma = sigma_points(prior, lambda)?;
    let images = sigma.map(observe);
    let z_hat = weighted_mean(&images.points, &images.weights, angular.measurement);
    let dz = residuals(
        &images.points,
        &covariance_center(&images.points, &images.weights, &z_hat),
        angular.measurement,
    );
    let dx = residuals(&sigma.points, &prior.mean, angular.state);
    let s = symmetrized(&(weighted_outer(&dz, &sigma.weights, &dz) + noise));
    let c = weighted_outer(&dx, &sigma.weights, &dz);
    let gain = solve_gain(&s, &c)?;

    let mut innovation = z - &z_hat;
    for &a in angular.measurement {
        innovation[a] = wrap_angle(innovation[a]);
    }
    let mut mean = &prior.mean + &gain * &innovation;
    for &a in angular.state {
        mean[a] = wrap_angle(mean[a]);
    }
    let cov = symmetrized(&(&prior.cov - &gain * &s * gain.transpose()));
    if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
        return Err(Error::SingularInnovation);
    }
    Ok((
        GaussianState { mean, cov },
        UpdateTrace {
            z_hat,
            innovation_cov: s,
            cross_cov: c,
            gain,
            innovation,
        },
    ))
}

/// `C S^-1`, preferring a Cholesky solve and falling back to LU.
fn solve_gain(s: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let ct = c.transpose();
    if let Some(chol) = s.clone().cholesky() {
        return Ok(chol.solve(&ct).transpose());
    }
    s.clone()
        .lu()
        .solve(&ct)
        .map(|kt| kt.transpose())
        .ok_or(Error::SingularInnovation)
}
