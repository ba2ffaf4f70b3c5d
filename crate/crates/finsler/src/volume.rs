//! Busemann-Hausdorff volume density and its base gradient.
//!
//! The indicatrix volume is computed as the spherical integral of
//! `F(x, u)^{-n}`. The integration runs in the frame that whitens `a_ij`
//! (Cholesky change of variables, Jacobian `1/sqrt(det a)`) with the pole
//! along the 1-form; there `F(u) = phi(b t)` with `t` the polar cosine, so
//! the azimuthal factors integrate exactly and one-sided profiles
//! (Kropina-like) have their admissible cone bounded by the equator, which
//! keeps the quadrature spectrally convergent. Node counts follow the
//! per-dimension product rules; the polar resolution is halved for the
//! convergence check.

use std::f64::consts::PI;

use crate::error::FinslerError;
use crate::phi::PhiFamily;
use crate::riemann::RiemannState;
use crate::tensors::PointState;

/// Volume density data at one base point.
#[derive(Clone, Debug)]
pub struct VolumeDensity {
    pub sigma: f64,
    pub grad_ln_sigma: Vec<f64>,
    pub indicatrix_volume: f64,
    /// Two-resolution relative discrepancy of the spherical integral.
    pub discrepancy: f64,
}

fn vol_unit_ball(n: usize) -> f64 {
    match n {
        2 => PI,
        3 => 4.0 * PI / 3.0,
        4 => PI * PI / 2.0,
        _ => unreachable!("dimension validated at spec construction"),
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration.
pub fn gauss_legendre(m: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre P_m and derivative at x by the three-term recurrence.
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=m {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// `1/phi(s)` and `phi'(s)`; `None` below the one-sided validity boundary
/// (outside the metric's admissible cone, where the indicatrix contributes
/// nothing).
fn inverse_profile(
    phi: &PhiFamily,
    s: f64,
    lo: f64,
    hi: f64,
) -> Result<Option<(f64, f64)>, FinslerError> {
    if s <= lo {
        return Ok(None);
    }
    if s >= hi {
        return Err(FinslerError::Domain {
            guard: format!("phi positivity on the indicatrix sphere: s = {s} >= {hi}"),
        });
    }
    let t = phi.taylor(s, 1)?;
    if t[0] <= 0.0 {
        return Err(FinslerError::Domain {
            guard: format!("phi positivity on the indicatrix sphere: phi({s}) = {}", t[0]),
        });
    }
    Ok(Some((1.0 / t[0], t[1])))
}

/// Spherical integrals `I = int F^{-n} du` and `dI/db` at polar resolution
/// `polar` (node count before the one-sided split).
fn sphere_integrals(
    phi: &PhiFamily,
    b: f64,
    n: usize,
    polar: usize,
) -> Result<(f64, f64), FinslerError> {
    let (lo, hi) = phi.validity();
    let one_sided = phi.one_sided();
    if !one_sided && (lo >= -b || hi <= b) {
        return Err(FinslerError::Domain {
            guard: format!(
                "phi validity ({lo}, {hi}) does not cover the indicatrix range |s| <= {b}"
            ),
        });
    }
    if one_sided && hi <= b {
        return Err(FinslerError::Domain {
            guard: format!("one-sided phi validity upper bound {hi} inside indicatrix range {b}"),
        });
    }

    let mut integral = 0.0;
    let mut d_integral = 0.0;
    let mut add = |t: f64, w: f64| -> Result<(), FinslerError> {
        let s = b * t;
        if let Some((q, dphi)) = inverse_profile(phi, s, if one_sided { lo } else { -f64::INFINITY }, hi)? {
            let qn = q.powi(n as i32);
            integral += w * qn;
            d_integral += w * (-(n as f64) * qn * q * dphi * t);
        }
        Ok(())
    };

    match n {
        2 => {
            // Trapezoid on the circle; the validity boundary of one-sided
            // profiles lands on nodes because the count is divisible by 4.
            let m = polar;
            let h = 2.0 * PI / m as f64;
            for i in 0..m {
                let theta = i as f64 * h;
                add(theta.cos(), h)?;
            }
        }
        3 => {
            // Gauss-Legendre in the polar cosine, split at the equator so a
            // one-sided cone boundary is a panel endpoint; the azimuthal
            // trapezoid integrates the constant factor exactly to 2 pi.
            let half = polar / 2;
            for (a0, b0) in [(-1.0, 0.0), (0.0, 1.0)] {
                for (x, w) in gauss_legendre(half) {
                    let t = 0.5 * (a0 + b0) + 0.5 * (b0 - a0) * x;
                    add(t, 2.0 * PI * 0.5 * (b0 - a0) * w)?;
                }
            }
        }
        4 => {
            // Trapezoid in the first hyperspherical angle with its sin^2
            // weight; the remaining two angles contribute exactly 4 pi.
            let m = polar;
            let h = PI / m as f64;
            for i in 0..=m {
                let psi = i as f64 * h;
                let w_end = if i == 0 || i == m { 0.5 } else { 1.0 };
                let w = 4.0 * PI * h * w_end * psi.sin().powi(2);
                add(psi.cos(), w)?;
            }
        }
        _ => unreachable!(),
    }
    Ok((integral, d_integral))
}

fn polar_resolution(n: usize) -> usize {
    match n {
        2 => 4096,
        3 => 64,
        4 => 48,
        _ => unreachable!(),
    }
}

impl VolumeDensity {
    pub fn compute(rm: &RiemannState, phi: &PhiFamily) -> Result<VolumeDensity, FinslerError> {
        let n = rm.n;
        let b = rm.b_norm_sq.max(0.0).sqrt();
        if phi.one_sided() && b < 1e-12 {
            return Err(FinslerError::Domain {
                guard: "degenerate 1-form: one-sided phi requires |beta| > 0".into(),
            });
        }
        let polar = polar_resolution(n);
        let (i_full, di_full) = sphere_integrals(phi, b, n, polar)?;
        let (i_half, _) = sphere_integrals(phi, b, n, polar / 2)?;
        let discrepancy = (i_full - i_half).abs() / i_full.abs().max(f64::MIN_POSITIVE);
        if !(discrepancy <= 1e-8) || !i_full.is_finite() || i_full <= 0.0 {
            return Err(FinslerError::QuadratureDiverged(discrepancy));
        }

        let indicatrix_volume = i_full / (n as f64 * rm.sqrt_det_a);
        let sigma = vol_unit_ball(n) / indicatrix_volume;

        let mut grad = vec![0.0; n];
        for l in 0..n {
            // d/dx^l ln sqrt(det a) = tr(a^{-1} d_l a) / 2
            let mut tr = 0.0;
            for i in 0..n {
                for j in 0..n {
                    tr += rm.a_inv[i][j] * rm.da[l][i][j];
                }
            }
            let mut g = 0.5 * tr;
            if b >= 1e-12 {
                let db_dl = rm.db_norm_sq[l] / (2.0 * b);
                g -= di_full / i_full * db_dl;
            }
            grad[l] = g;
        }

        Ok(VolumeDensity {
            sigma,
            grad_ln_sigma: grad,
            indicatrix_volume,
            discrepancy,
        })
    }
}

/// S-curvature at the state's (x, y) given the volume density at x.
pub fn s_curvature(state: &PointState, vol: &VolumeDensity) -> f64 {
    let mut s = state.spray_div;
    for i in 0..state.y.len() {
        s -= state.y[i] * vol.grad_ln_sigma[i];
    }
    s
}
