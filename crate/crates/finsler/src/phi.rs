//! The deformation profiles `phi(s)` that turn a Riemannian norm and a
//! 1-form into a Finsler norm `F = alpha * phi(beta/alpha)`.
//!
//! Every family exposes Taylor coefficients of arbitrary order at admissible
//! `s`, a validity interval, and the regularity guards (`phi > 0`,
//! `phi - s phi' > 0`) needed before any tensor evaluation.

use crate::error::FinslerError;
use crate::jet::{Jet, JetShape};

const FACT: [f64; 9] = [1., 1., 2., 6., 24., 120., 720., 5040., 40320.];

/// Supported deformation profiles.
#[derive(Clone, Debug, PartialEq)]
pub enum PhiFamily {
    /// `phi = 1 + s`.
    Randers,
    /// `phi = 1/s`; valid for `s > 0` only.
    Kropina,
    /// `phi = 1/(1 - s)`; slope-type profile, regular for `s < 1/2`.
    Matsumoto,
    /// `phi = c1 sqrt(1 + c2 s^2) + c3 s` with `c1 > 0`.
    RandersType { c1: f64, c2: f64, c3: f64 },
    /// `phi = -1/(2 c1 s) + c2 s /(2 c1)`; a Randers deformation of the
    /// inverse profile, one-sided like Kropina.
    RkChange { c1: f64, c2: f64 },
}

impl PhiFamily {
    pub fn name(&self) -> String {
        match self {
            PhiFamily::Randers => "randers".into(),
            PhiFamily::Kropina => "kropina".into(),
            PhiFamily::Matsumoto => "matsumoto".into(),
            PhiFamily::RandersType { c1, c2, c3 } => {
                format!("randers-type(c1={c1}, c2={c2}, c3={c3})")
            }
            PhiFamily::RkChange { c1, c2 } => format!("rk-change(c1={c1}, c2={c2})"),
        }
    }

    pub fn validate(&self) -> Result<(), FinslerError> {
        match self {
            PhiFamily::RandersType { c1, .. } if *c1 <= 0.0 => Err(
                FinslerError::InvalidParameter(format!("randers-type requires c1 > 0, got {c1}")),
            ),
            PhiFamily::RkChange { c1, .. } if *c1 == 0.0 => Err(FinslerError::InvalidParameter(
                "rk-change requires c1 != 0".into(),
            )),
            _ => Ok(()),
        }
    }

    /// Open interval of `s` on which the profile is smooth and the
    /// regularity guards can hold. One-sided families have `lo >= 0`.
    pub fn validity(&self) -> (f64, f64) {
        match self {
            PhiFamily::Randers => (-1.0, 1.0),
            PhiFamily::Kropina => (0.0, f64::INFINITY),
            PhiFamily::Matsumoto => (-0.5, 0.5),
            PhiFamily::RandersType { c1, c2, c3 } => {
                let dom = if *c2 < 0.0 {
                    1.0 / (-c2).sqrt()
                } else {
                    f64::INFINITY
                };
                // phi > 0 fails where c1^2 (1 + c2 s^2) = c3^2 s^2.
                let disc = c3 * c3 - c1 * c1 * c2;
                let pos = if disc > 0.0 && c3.abs() > 0.0 {
                    c1 / disc.sqrt()
                } else {
                    f64::INFINITY
                };
                let m = dom.min(pos);
                (-m, m)
            }
            PhiFamily::RkChange { c1, c2 } => {
                let hi = if c2 / c1 < 0.0 {
                    // numerator -1 + c2 s^2 changes sign at 1/sqrt(c2) when
                    // c2 > 0; with c1 < 0 positivity needs s below that root.
                    if *c2 > 0.0 {
                        1.0 / c2.sqrt()
                    } else {
                        f64::INFINITY
                    }
                } else {
                    f64::INFINITY
                };
                if *c1 < 0.0 {
                    (0.0, hi)
                } else {
                    (-hi, 0.0)
                }
            }
        }
    }

    /// True when the validity interval does not cover a symmetric
    /// neighbourhood of `s = 0` (Kropina-like profiles).
    pub fn one_sided(&self) -> bool {
        let (lo, hi) = self.validity();
        lo >= 0.0 || hi <= 0.0
    }

    pub fn contains(&self, s: f64) -> bool {
        let (lo, hi) = self.validity();
        s > lo && s < hi
    }

    /// Taylor coefficients `phi^{(k)}(s)/k!` for `k = 0..=k_max`.
    pub fn taylor(&self, s: f64, k_max: usize) -> Result<Vec<f64>, FinslerError> {
        if !self.contains(s) {
            return Err(FinslerError::Domain {
                guard: format!(
                    "phi validity: s = {s} outside {:?} for {}",
                    self.validity(),
                    self.name()
                ),
            });
        }
        let out = match self {
            PhiFamily::Randers => {
                let mut v = vec![0.0; k_max + 1];
                v[0] = 1.0 + s;
                if k_max >= 1 {
                    v[1] = 1.0;
                }
                v
            }
            PhiFamily::Kropina => {
                let mut v = Vec::with_capacity(k_max + 1);
                let mut t = 1.0 / s;
                for _ in 0..=k_max {
                    v.push(t);
                    t *= -1.0 / s;
                }
                v
            }
            PhiFamily::Matsumoto => {
                let mut v = Vec::with_capacity(k_max + 1);
                let u = 1.0 - s;
                let mut t = 1.0 / u;
                for _ in 0..=k_max {
                    v.push(t);
                    t /= u;
                }
                v
            }
            PhiFamily::RandersType { c1, c2, c3 } => {
                let shape = JetShape::univariate(k_max.max(1))?;
                let t = Jet::base_linear(shape, s, 1.0)?;
                let inner = (&t * &t).scale(*c2).add_scalar(1.0);
                let j = &inner.try_sqrt()?.scale(*c1) + &t.scale(*c3);
                (0..=k_max).map(|k| j.extract(&[], k).unwrap() / FACT[k]).collect()
            }
            PhiFamily::RkChange { c1, c2 } => {
                let shape = JetShape::univariate(k_max.max(1))?;
                let t = Jet::base_linear(shape, s, 1.0)?;
                let j = &t.recip()?.scale(-1.0 / (2.0 * c1)) + &t.scale(c2 / (2.0 * c1));
                (0..=k_max).map(|k| j.extract(&[], k).unwrap() / FACT[k]).collect()
            }
        };
        Ok(out)
    }

    /// k-th derivative value.
    pub fn deriv(&self, s: f64, k: usize) -> Result<f64, FinslerError> {
        Ok(self.taylor(s, k)?[k] * FACT[k])
    }

    pub fn value(&self, s: f64) -> Result<f64, FinslerError> {
        self.deriv(s, 0)
    }

    /// Regularity guards at a point: `phi > 0` and `phi - s phi' > 0`.
    /// Returns the violated guard by name.
    pub fn check_regularity(&self, s: f64) -> Result<(), FinslerError> {
        let t = self.taylor(s, 1)?;
        let phi = t[0];
        let dphi = t[1];
        if phi <= 0.0 {
            return Err(FinslerError::Domain {
                guard: format!("phi positivity: phi({s}) = {phi} <= 0"),
            });
        }
        let reg = phi - s * dphi;
        if reg <= 0.0 {
            return Err(FinslerError::Domain {
                guard: format!("phi regularity: phi - s*phi' = {reg} <= 0 at s = {s}"),
            });
        }
        Ok(())
    }
}

/// Jet of `phi(s)` for a jet-valued `s`, by truncated Taylor composition
/// using the family's analytic derivatives at the constant term.
pub fn compose_phi(phi: &PhiFamily, s: &Jet) -> Result<Jet, FinslerError> {
    let order = s.shape().deg_y + s.shape().deg_x;
    let series = phi.taylor(s.value(), order)?;
    Ok(s.apply_series(&series))
}
