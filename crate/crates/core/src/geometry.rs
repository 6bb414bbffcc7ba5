//! Closed-form distances between Gaussian word representations.
//!
//! Only the `p = 2` Gaussian specialisation of the Wasserstein distance is
//! provided. For spherical Gaussians `N(m_a, s_a^2 I)` and `N(m_b, s_b^2 I)`
//! in `D` dimensions
//!
//! ```text
//! W2(a, b)^2 = |m_a - m_b|^2 + D (s_a - s_b)^2
//! KL(a || b) = D ln(s_b / s_a) - D/2 + D s_a^2 / (2 s_b^2) + |m_b - m_a|^2 / (2 s_b^2)
//! ```
//!
//! Energies are `-W2 + b` (or `-W2^2 + b`) and `-KL + b`.

use thiserror::Error;

use crate::Scalar;

/// Below this value W2 is replaced by the floor in the `1 / W2` gradient factor.
pub const GRAD_FLOOR: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("dimension mismatch: {0} vs {1}")]
    Shape(usize, usize),
    #[error("non-positive scale parameter {0}")]
    Domain(f64),
}

/// A spherical Gaussian: mean vector and one standard deviation shared by all axes.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWord<F> {
    pub mean: Vec<F>,
    pub sigma: F,
}

/// Borrowed spherical Gaussian, e.g. a row of an embedding table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianView<'a, F> {
    pub mean: &'a [F],
    pub sigma: F,
}

impl<F: Scalar> GaussianWord<F> {
    pub fn new(mean: Vec<F>, sigma: F) -> Self {
        GaussianWord { mean, sigma }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn view(&self) -> GaussianView<'_, F> {
        GaussianView {
            mean: &self.mean,
            sigma: self.sigma,
        }
    }

    /// The same distribution written with an explicit diagonal covariance.
    pub fn to_diagonal(&self) -> DiagonalGaussian<F> {
        DiagonalGaussian {
            mean: self.mean.clone(),
            variances: vec![self.sigma * self.sigma; self.mean.len()],
        }
    }
}

impl<'a, F: Scalar> GaussianView<'a, F> {
    pub fn new(mean: &'a [F], sigma: F) -> Self {
        GaussianView { mean, sigma }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

impl<'a, F: Scalar> From<&'a GaussianWord<F>> for GaussianView<'a, F> {
    fn from(g: &'a GaussianWord<F>) -> Self {
        g.view()
    }
}

/// A Gaussian with diagonal covariance. Used for validation, not trained.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalGaussian<F> {
    pub mean: Vec<F>,
    pub variances: Vec<F>,
}

/// Partial derivatives of an energy `E(w, c)` with respect to the parameters
/// of both arguments and the bias.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGradient<F> {
    pub d_mean_w: Vec<F>,
    pub d_mean_c: Vec<F>,
    pub d_sigma_w: F,
    pub d_sigma_c: F,
    pub d_bias: F,
}

/// Which closed form an energy is built on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EnergyKind {
    /// `-W2 + b`
    W2,
    /// `-W2^2 + b`, smooth at coincident Gaussians.
    W2Squared,
    /// `-KL(w || c) + b`
    Kl,
}

fn check_dims(a: usize, b: usize) -> Result<(), GeometryError> {
    if a != b {
        return Err(GeometryError::Shape(a, b));
    }
    Ok(())
}

fn check_scale<F: Scalar>(s: F) -> Result<(), GeometryError> {
    if !(s > F::zero()) {
        return Err(GeometryError::Domain(s.as_f64()));
    }
    Ok(())
}

fn sq_dist<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = x - y;
            d * d
        })
        .sum()
}

/// Squared Wasserstein-2 distance between spherical Gaussians.
pub fn w2_squared_spherical<F: Scalar>(
    a: GaussianView<'_, F>,
    b: GaussianView<'_, F>,
) -> Result<F, GeometryError> {
    check_dims(a.dim(), b.dim())?;
    let ds = a.sigma - b.sigma;
    Ok(sq_dist(a.mean, b.mean) + F::of(a.dim() as f64) * ds * ds)
}

/// Wasserstein-2 distance between spherical Gaussians.
pub fn w2_spherical<F: Scalar>(
    a: GaussianView<'_, F>,
    b: GaussianView<'_, F>,
) -> Result<F, GeometryError> {
    w2_squared_spherical(a, b).map(|d| d.sqrt())
}

/// Wasserstein-2 distance between diagonal Gaussians. Diagonal covariances
/// commute, so the trace term is `sum_i (sqrt(v_a,i) - sqrt(v_b,i))^2`.
pub fn w2_diagonal<F: Scalar>(
    a: &DiagonalGaussian<F>,
    b: &DiagonalGaussian<F>,
) -> Result<F, GeometryError> {
    check_dims(a.mean.len(), b.mean.len())?;
    check_dims(a.variances.len(), a.mean.len())?;
    check_dims(b.variances.len(), b.mean.len())?;
    for &v in a.variances.iter().chain(&b.variances) {
        check_scale(v)?;
    }
    let trace: F = a
        .variances
        .iter()
        .zip(&b.variances)
        .map(|(&va, &vb)| {
            let d = va.sqrt() - vb.sqrt();
            d * d
        })
        .sum();
    Ok((sq_dist(&a.mean, &b.mean) + trace).sqrt())
}

/// `KL(a || b)` between spherical Gaussians.
pub fn kl_spherical<F: Scalar>(
    a: GaussianView<'_, F>,
    b: GaussianView<'_, F>,
) -> Result<F, GeometryError> {
    check_dims(a.dim(), b.dim())?;
    check_scale(a.sigma)?;
    check_scale(b.sigma)?;
    let d = F::of(a.dim() as f64);
    let two = F::of(2.0);
    let vb = b.sigma * b.sigma;
    let ratio = a.sigma * a.sigma / vb;
    Ok(d * (b.sigma / a.sigma).ln() - d / two
        + d * ratio / two
        + sq_dist(a.mean, b.mean) / (two * vb))
}

pub fn energy_w2<F: Scalar>(
    a: GaussianView<'_, F>,
    b: GaussianView<'_, F>,
    bias: F,
) -> Result<F, GeometryError> {
    Ok(bias - w2_spherical(a, b)?)
}

/// `-KL(child || parent) + bias`; not symmetric in its arguments.
pub fn energy_kl<F: Scalar>(
    child: GaussianView<'_, F>,
    parent: GaussianView<'_, F>,
    bias: F,
) -> Result<F, GeometryError> {
    Ok(bias - kl_spherical(child, parent)?)
}

pub fn energy<F: Scalar>(
    kind: EnergyKind,
    w: GaussianView<'_, F>,
    c: GaussianView<'_, F>,
    bias: F,
) -> Result<F, GeometryError> {
    match kind {
        EnergyKind::W2 => energy_w2(w, c, bias),
        EnergyKind::W2Squared => Ok(bias - w2_squared_spherical(w, c)?),
        EnergyKind::Kl => energy_kl(w, c, bias),
    }
}

/// Energy value without argument validation.
pub(crate) fn energy_value<F: Scalar>(
    kind: EnergyKind,
    w: GaussianView<'_, F>,
    c: GaussianView<'_, F>,
    bias: F,
) -> F {
    let dim = F::of(w.dim() as f64);
    let two = F::of(2.0);
    let diff_sq = sq_dist(w.mean, c.mean);
    let ds = w.sigma - c.sigma;
    match kind {
        EnergyKind::W2 => bias - (diff_sq + dim * ds * ds).sqrt(),
        EnergyKind::W2Squared => bias - (diff_sq + dim * ds * ds),
        EnergyKind::Kl => {
            let vc = c.sigma * c.sigma;
            bias - (dim * (c.sigma / w.sigma).ln() - dim / two
                + dim * w.sigma * w.sigma / (two * vc)
                + diff_sq / (two * vc))
        }
    }
}

/// Evaluates the energy and adds `scale * dE/dtheta` into the supplied
/// buffers. Returns `(E, scale * dE/dsigma_w, scale * dE/dsigma_c)`; the bias
/// derivative is always `scale`.
///
/// Both Gaussians must already have matching dimensions and, for
/// [`EnergyKind::Kl`], positive sigmas.
pub(crate) fn energy_grad_into<F: Scalar>(
    kind: EnergyKind,
    w: GaussianView<'_, F>,
    c: GaussianView<'_, F>,
    bias: F,
    scale: F,
    d_mean_w: &mut [F],
    d_mean_c: &mut [F],
) -> (F, F, F) {
    let dim = F::of(w.dim() as f64);
    let two = F::of(2.0);
    let diff_sq = sq_dist(w.mean, c.mean);
    let ds = w.sigma - c.sigma;
    match kind {
        EnergyKind::W2 => {
            let dist = (diff_sq + dim * ds * ds).sqrt();
            let denom = dist.max(F::of(GRAD_FLOOR));
            // dE/dm_w = -(m_w - m_c) / W2
            let k = scale / denom;
            for ((gw, gc), (&mw, &mc)) in d_mean_w
                .iter_mut()
                .zip(d_mean_c.iter_mut())
                .zip(w.mean.iter().zip(c.mean))
            {
                let g = k * (mw - mc);
                *gw = *gw - g;
                *gc = *gc + g;
            }
            let gs = k * dim * ds;
            (bias - dist, -gs, gs)
        }
        EnergyKind::W2Squared => {
            let k = two * scale;
            for ((gw, gc), (&mw, &mc)) in d_mean_w
                .iter_mut()
                .zip(d_mean_c.iter_mut())
                .zip(w.mean.iter().zip(c.mean))
            {
                let g = k * (mw - mc);
                *gw = *gw - g;
                *gc = *gc + g;
            }
            let gs = k * dim * ds;
            (bias - (diff_sq + dim * ds * ds), -gs, gs)
        }
        EnergyKind::Kl => {
            let vc = c.sigma * c.sigma;
            let vw = w.sigma * w.sigma;
            let kl = dim * (c.sigma / w.sigma).ln() - dim / two
                + dim * vw / (two * vc)
                + diff_sq / (two * vc);
            // dKL/dm_w = (m_w - m_c) / s_c^2, dKL/dm_c = -(m_w - m_c) / s_c^2
            let k = scale / vc;
            for ((gw, gc), (&mw, &mc)) in d_mean_w
                .iter_mut()
                .zip(d_mean_c.iter_mut())
                .zip(w.mean.iter().zip(c.mean))
            {
                let g = k * (mw - mc);
                *gw = *gw - g;
                *gc = *gc + g;
            }
            let dkl_dsw = -dim / w.sigma + dim * w.sigma / vc;
            let dkl_dsc = dim / c.sigma - (dim * vw + diff_sq) / (vc * c.sigma);
            (bias - kl, -scale * dkl_dsw, -scale * dkl_dsc)
        }
    }
}

fn grad<F: Scalar>(
    kind: EnergyKind,
    w: GaussianView<'_, F>,
    c: GaussianView<'_, F>,
) -> Result<EnergyGradient<F>, GeometryError> {
    check_dims(w.dim(), c.dim())?;
    if kind == EnergyKind::Kl {
        check_scale(w.sigma)?;
        check_scale(c.sigma)?;
    }
    let mut d_mean_w = vec![F::zero(); w.dim()];
    let mut d_mean_c = vec![F::zero(); w.dim()];
    let (_, d_sigma_w, d_sigma_c) = energy_grad_into(
        kind,
        w,
        c,
        F::zero(),
        F::one(),
        &mut d_mean_w,
        &mut d_mean_c,
    );
    Ok(EnergyGradient {
        d_mean_w,
        d_mean_c,
        d_sigma_w,
        d_sigma_c,
        d_bias: F::one(),
    })
}

/// Gradient of `-W2(a, b) + bias`. When `W2 < GRAD_FLOOR` the floor replaces
/// `W2` in the denominator.
pub fn grad_energy_w2<F: Scalar>(
    a: GaussianView<'_, F>,
    b: GaussianView<'_, F>,
) -> Result<EnergyGradient<F>, GeometryError> {
    grad(EnergyKind::W2, a, b)
}

/// Gradient of `-W2(a, b)^2 + bias`.
pub fn grad_energy_w2_squared<F: Scalar>(
    a: GaussianView<'_, F>,
    b: GaussianView<'_, F>,
) -> Result<EnergyGradient<F>, GeometryError> {
    grad(EnergyKind::W2Squared, a, b)
}

/// Gradient of `-KL(child || parent) + bias`.
pub fn grad_energy_kl<F: Scalar>(
    child: GaussianView<'_, F>,
    parent: GaussianView<'_, F>,
) -> Result<EnergyGradient<F>, GeometryError> {
    grad(EnergyKind::Kl, child, parent)
}
