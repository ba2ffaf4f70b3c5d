//! Truncated multivariate Taylor (jet) arithmetic.
//!
//! A [`Jet`] carries the Taylor coefficients of a scalar quantity in up to
//! four fiber variables (total degree bounded by `deg_y`) and one
//! distinguished base direction (degree bounded by `deg_x`). Coefficients are
//! Taylor-normalized: the stored number for multi-index `(m, p)` is the
//! partial derivative divided by `m! * p!`. Arithmetic is exact truncation,
//! so for polynomial inputs within the truncation bounds every extracted
//! partial derivative matches the symbolic value to rounding error.
//!
//! Elementary functions are applied by composing the univariate Taylor
//! expansion of the function at the jet's constant term with the jet's
//! nilpotent part (Horner evaluation on the truncated series).

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

/// Largest supported number of fiber variables.
pub const MAX_FIBER_VARS: usize = 4;
/// Largest supported fiber truncation degree.
pub const MAX_FIBER_DEG: usize = 6;
/// Largest supported base truncation degree.
pub const MAX_BASE_DEG: usize = 8;

#[derive(Debug, Error, PartialEq)]
pub enum JetError {
    #[error("jet shapes differ: {0} vs {1}")]
    ShapeMismatch(JetShape, JetShape),
    #[error("fiber axis {axis} out of range for {n} fiber variables")]
    AxisOutOfRange { axis: usize, n: usize },
    #[error("division by jet with zero constant term")]
    DivisionByZero,
    #[error("sqrt of jet with nonpositive constant term {0}")]
    SqrtNonpositive(f64),
    #[error("real power of jet with nonpositive constant term {0}")]
    PowNonpositive(f64),
    #[error("multi-index {0:?} with base power {1} outside truncation bounds")]
    IndexOutOfBounds(Vec<usize>, usize),
    #[error("cannot differentiate below degree zero")]
    DegreeExhausted,
    #[error("unsupported jet shape: {0}")]
    UnsupportedShape(String),
}

/// Truncation bounds of a jet: fiber variable count, max total fiber degree,
/// max base degree in the single active base direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct JetShape {
    pub n: usize,
    pub deg_y: usize,
    pub deg_x: usize,
}

impl std::fmt::Display for JetShape {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "(n={}, deg_y={}, deg_x={})", self.n, self.deg_y, self.deg_x)
    }
}

impl JetShape {
    pub fn new(n: usize, deg_y: usize, deg_x: usize) -> Result<Self, JetError> {
        if n > MAX_FIBER_VARS || deg_y > MAX_FIBER_DEG || deg_x > MAX_BASE_DEG {
            return Err(JetError::UnsupportedShape(format!(
                "n={n}, deg_y={deg_y}, deg_x={deg_x}"
            )));
        }
        Ok(JetShape { n, deg_y, deg_x })
    }

    /// Shape for a univariate series in the base direction only.
    pub fn univariate(deg: usize) -> Result<Self, JetError> {
        JetShape::new(0, 0, deg)
    }
}

type Multi = [u8; MAX_FIBER_VARS];

/// Enumeration and product data for the fiber monomials of one (n, deg) pair.
struct MonoTable {
    monos: Vec<Multi>,
    degree: Vec<u8>,
    /// First monomial index of each degree level d in 0..=deg+1 (prefix ends).
    level_end: Vec<usize>,
    index: HashMap<Multi, u32>,
    /// prod[i * len + j] = index of monos[i] + monos[j]; only valid when the
    /// summed degree fits the truncation.
    prod: Vec<u32>,
}

fn enumerate_monos(n: usize, deg: usize) -> Vec<Multi> {
    let mut out = Vec::new();
    let mut cur: Multi = [0; MAX_FIBER_VARS];
    for d in 0..=deg {
        fn rec(n: usize, axis: usize, left: u8, cur: &mut Multi, out: &mut Vec<Multi>) {
            if axis == n {
                if left == 0 {
                    out.push(*cur);
                }
                return;
            }
            if axis == n - 1 {
                cur[axis] = left;
                out.push(*cur);
                cur[axis] = 0;
                return;
            }
            for v in (0..=left).rev() {
                cur[axis] = v;
                rec(n, axis + 1, left - v, cur, out);
                cur[axis] = 0;
            }
        }
        if n == 0 {
            if d == 0 {
                out.push(cur);
            }
        } else {
            rec(n, 0, d as u8, &mut cur, &mut out);
        }
    }
    out
}

impl MonoTable {
    fn build(n: usize, deg: usize) -> MonoTable {
        let monos = enumerate_monos(n, deg);
        let degree: Vec<u8> = monos
            .iter()
            .map(|m| m.iter().take(n).sum::<u8>())
            .collect();
        let mut level_end = vec![0usize; deg + 2];
        for d in 0..=deg {
            level_end[d + 1] = degree.iter().filter(|&&x| x as usize <= d).count();
        }
        let mut index = HashMap::new();
        for (i, m) in monos.iter().enumerate() {
            index.insert(*m, i as u32);
        }
        let len = monos.len();
        let mut prod = vec![u32::MAX; len * len];
        for i in 0..len {
            for j in 0..len {
                if degree[i] as usize + degree[j] as usize > deg {
                    continue;
                }
                let mut s: Multi = [0; MAX_FIBER_VARS];
                for k in 0..MAX_FIBER_VARS {
                    s[k] = monos[i][k] + monos[j][k];
                }
                prod[i * len + j] = index[&s];
            }
        }
        MonoTable {
            monos,
            degree,
            level_end,
            index,
            prod,
        }
    }
}

fn table(n: usize, deg: usize) -> Arc<MonoTable> {
    static CACHE: OnceLock<Mutex<HashMap<(usize, usize), Arc<MonoTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().unwrap();
    guard
        .entry((n, deg))
        .or_insert_with(|| Arc::new(MonoTable::build(n, deg)))
        .clone()
}

const FACTORIALS: [f64; 9] = [1., 1., 2., 6., 24., 120., 720., 5040., 40320.];

/// Truncated Taylor expansion of a scalar quantity.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    shape: JetShape,
    /// Layout: `coeffs[mono * (deg_x + 1) + base_power]`.
    coeffs: Vec<f64>,
}

impl Jet {
    fn zeros(shape: JetShape) -> Jet {
        let monos = table(shape.n, shape.deg_y).monos.len();
        Jet {
            shape,
            coeffs: vec![0.0; monos * (shape.deg_x + 1)],
        }
    }

    pub fn constant(shape: JetShape, value: f64) -> Jet {
        let mut j = Jet::zeros(shape);
        j.coeffs[0] = value;
        j
    }

    /// Jet of the coordinate function `y^axis` evaluated at `value`.
    pub fn seed_fiber(shape: JetShape, value: f64, axis: usize) -> Result<Jet, JetError> {
        if axis >= shape.n {
            return Err(JetError::AxisOutOfRange { axis, n: shape.n });
        }
        let mut j = Jet::zeros(shape);
        j.coeffs[0] = value;
        if shape.deg_y >= 1 {
            let t = table(shape.n, shape.deg_y);
            let mut m: Multi = [0; MAX_FIBER_VARS];
            m[axis] = 1;
            let idx = t.index[&m] as usize;
            j.coeffs[idx * (shape.deg_x + 1)] = 1.0;
        }
        Ok(j)
    }

    /// Jet of `value + slope * t` in the base direction.
    pub fn base_linear(shape: JetShape, value: f64, slope: f64) -> Result<Jet, JetError> {
        if shape.deg_x < 1 && slope != 0.0 {
            return Err(JetError::UnsupportedShape(
                "base seed requires deg_x >= 1".into(),
            ));
        }
        let mut j = Jet::zeros(shape);
        j.coeffs[0] = value;
        if shape.deg_x >= 1 {
            j.coeffs[1] = slope;
        }
        Ok(j)
    }

    /// Fiber-constant jet with the given base Taylor coefficients
    /// (`series[p]` is the coefficient of `t^p`).
    pub fn from_base_series(shape: JetShape, series: &[f64]) -> Result<Jet, JetError> {
        if series.len() > shape.deg_x + 1 {
            return Err(JetError::UnsupportedShape(format!(
                "base series of length {} exceeds deg_x={}",
                series.len(),
                shape.deg_x
            )));
        }
        let mut j = Jet::zeros(shape);
        j.coeffs[..series.len()].copy_from_slice(series);
        Ok(j)
    }

    pub fn shape(&self) -> JetShape {
        self.shape
    }

    /// Constant (value) term.
    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    fn check_shape(&self, other: &Jet) -> Result<(), JetError> {
        if self.shape != other.shape {
            return Err(JetError::ShapeMismatch(self.shape, other.shape));
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (o, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *o += b;
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_shape(other)?;
        let mut out = self.clone();
        for (o, b) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *o -= b;
        }
        Ok(out)
    }

    pub fn scale(&self, f: f64) -> Jet {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= f;
        }
        out
    }

    pub fn neg(&self) -> Jet {
        self.scale(-1.0)
    }

    pub fn add_scalar(&self, f: f64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += f;
        out
    }

    /// Truncated Taylor product.
    pub fn try_mul(&self, other: &Jet) -> Result<Jet, JetError> {
        self.check_shape(other)?;
        let sh = self.shape;
        let t = table(sh.n, sh.deg_y);
        let m = t.monos.len();
        let bx = sh.deg_x + 1;
        let mut out = Jet::zeros(sh);
        for i in 0..m {
            let a_row = &self.coeffs[i * bx..(i + 1) * bx];
            if a_row.iter().all(|&v| v == 0.0) {
                continue;
            }
            let j_end = t.level_end[sh.deg_y - t.degree[i] as usize + 1];
            for j in 0..j_end {
                let k = t.prod[i * m + j] as usize;
                let b_row = &other.coeffs[j * bx..(j + 1) * bx];
                let o_row = &mut out.coeffs[k * bx..(k + 1) * bx];
                for (p, &av) in a_row.iter().enumerate() {
                    if av == 0.0 {
                        continue;
                    }
                    for q in 0..bx - p {
                        o_row[p + q] += av * b_row[q];
                    }
                }
            }
        }
        Ok(out)
    }

    /// Composes a univariate analytic function with this jet. `series[k]`
    /// must be the k-th Taylor coefficient of the function at the jet's
    /// constant term; exactness requires `series.len() > deg_y + deg_x`.
    pub fn apply_series(&self, series: &[f64]) -> Jet {
        let mut u = self.clone();
        u.coeffs[0] = 0.0;
        let k_max = series.len().saturating_sub(1);
        let mut r = Jet::constant(self.shape, *series.last().unwrap_or(&0.0));
        for k in (0..k_max).rev() {
            r = r.try_mul(&u).expect("shape preserved");
            r.coeffs[0] += series[k];
        }
        r
    }

    fn composition_order(&self) -> usize {
        self.shape.deg_y + self.shape.deg_x
    }

    pub fn recip(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c == 0.0 {
            return Err(JetError::DivisionByZero);
        }
        let k = self.composition_order();
        let mut series = Vec::with_capacity(k + 1);
        let mut t = 1.0 / c;
        for _ in 0..=k {
            series.push(t);
            t *= -1.0 / c;
        }
        Ok(self.apply_series(&series))
    }

    pub fn try_div(&self, other: &Jet) -> Result<Jet, JetError> {
        self.try_mul(&other.recip()?)
    }

    pub fn try_sqrt(&self) -> Result<Jet, JetError> {
        let c = self.value();
        if c <= 0.0 {
            return Err(JetError::SqrtNonpositive(c));
        }
        let k = self.composition_order();
        let mut series = Vec::with_capacity(k + 1);
        let mut t = c.sqrt();
        for i in 0..=k {
            if i > 0 {
                t *= (1.5 - i as f64) / (i as f64 * c);
            }
            series.push(t);
        }
        Ok(self.apply_series(&series))
    }

    /// Real power with positive base.
    pub fn try_powf(&self, p: f64) -> Result<Jet, JetError> {
        let c = self.value();
        if c <= 0.0 {
            return Err(JetError::PowNonpositive(c));
        }
        let k = self.composition_order();
        let mut series = Vec::with_capacity(k + 1);
        let mut t = c.powf(p);
        for i in 0..=k {
            if i > 0 {
                t *= (p - (i as f64 - 1.0)) / (i as f64 * c);
            }
            series.push(t);
        }
        Ok(self.apply_series(&series))
    }

    /// Integer power by repeated multiplication; exact for polynomials and
    /// valid for any base value when `k >= 0`.
    pub fn powi(&self, k: i32) -> Result<Jet, JetError> {
        if k < 0 {
            return self.recip()?.powi(-k);
        }
        let mut r = Jet::constant(self.shape, 1.0);
        let mut base = self.clone();
        let mut e = k as u32;
        while e > 0 {
            if e & 1 == 1 {
                r = r.try_mul(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.try_mul(&base)?;
            }
        }
        Ok(r)
    }

    pub fn exp(&self) -> Jet {
        let c = self.value();
        let k = self.composition_order();
        let ec = c.exp();
        let series: Vec<f64> = (0..=k).map(|i| ec / FACTORIALS[i]).collect();
        self.apply_series(&series)
    }

    pub fn sin(&self) -> Jet {
        let c = self.value();
        let k = self.composition_order();
        let (s, co) = c.sin_cos();
        let cycle = [s, co, -s, -co];
        let series: Vec<f64> = (0..=k).map(|i| cycle[i % 4] / FACTORIALS[i]).collect();
        self.apply_series(&series)
    }

    pub fn cos(&self) -> Jet {
        let c = self.value();
        let k = self.composition_order();
        let (s, co) = c.sin_cos();
        let cycle = [co, -s, -co, s];
        let series: Vec<f64> = (0..=k).map(|i| cycle[i % 4] / FACTORIALS[i]).collect();
        self.apply_series(&series)
    }

    /// Exact partial derivative with respect to fiber variable `axis`;
    /// the result lives in the truncation one fiber degree lower.
    pub fn fiber_derivative(&self, axis: usize) -> Result<Jet, JetError> {
        let sh = self.shape;
        if axis >= sh.n {
            return Err(JetError::AxisOutOfRange { axis, n: sh.n });
        }
        if sh.deg_y == 0 {
            return Err(JetError::DegreeExhausted);
        }
        let new_shape = JetShape::new(sh.n, sh.deg_y - 1, sh.deg_x)?;
        let src = table(sh.n, sh.deg_y);
        let dst = table(sh.n, sh.deg_y - 1);
        let bx = sh.deg_x + 1;
        let mut out = Jet::zeros(new_shape);
        for (mi, mono) in dst.monos.iter().enumerate() {
            let mut up = *mono;
            up[axis] += 1;
            let si = src.index[&up] as usize;
            let mult = up[axis] as f64;
            for p in 0..bx {
                out.coeffs[mi * bx + p] = self.coeffs[si * bx + p] * mult;
            }
        }
        Ok(out)
    }

    /// Exact derivative in the base direction; lowers `deg_x` by one.
    pub fn base_derivative(&self) -> Result<Jet, JetError> {
        let sh = self.shape;
        if sh.deg_x == 0 {
            return Err(JetError::DegreeExhausted);
        }
        let new_shape = JetShape::new(sh.n, sh.deg_y, sh.deg_x - 1)?;
        let monos = table(sh.n, sh.deg_y).monos.len();
        let bx = sh.deg_x + 1;
        let nbx = bx - 1;
        let mut out = Jet::zeros(new_shape);
        for m in 0..monos {
            for p in 0..nbx {
                out.coeffs[m * nbx + p] = self.coeffs[m * bx + p + 1] * (p as f64 + 1.0);
            }
        }
        Ok(out)
    }

    /// Lowers the truncation bounds, discarding higher coefficients.
    pub fn truncate(&self, deg_y: usize, deg_x: usize) -> Result<Jet, JetError> {
        let sh = self.shape;
        if deg_y > sh.deg_y || deg_x > sh.deg_x {
            return Err(JetError::UnsupportedShape(
                "truncate cannot raise degrees".into(),
            ));
        }
        if deg_y == sh.deg_y && deg_x == sh.deg_x {
            return Ok(self.clone());
        }
        let new_shape = JetShape::new(sh.n, deg_y, deg_x)?;
        let dst = table(sh.n, deg_y);
        let bx = sh.deg_x + 1;
        let nbx = deg_x + 1;
        let mut out = Jet::zeros(new_shape);
        // Graded enumeration makes the lower-degree monomials a prefix.
        for m in 0..dst.monos.len() {
            for p in 0..nbx {
                out.coeffs[m * nbx + p] = self.coeffs[m * bx + p];
            }
        }
        Ok(out)
    }

    pub fn drop_base(&self) -> Jet {
        self.truncate(self.shape.deg_y, 0).expect("lowering degree")
    }

    /// Partial derivative value: coefficient times multi-index factorials.
    pub fn extract(&self, multi: &[usize], base_power: usize) -> Result<f64, JetError> {
        let sh = self.shape;
        let total: usize = multi.iter().sum();
        if multi.len() > sh.n || total > sh.deg_y || base_power > sh.deg_x {
            return Err(JetError::IndexOutOfBounds(multi.to_vec(), base_power));
        }
        let mut key: Multi = [0; MAX_FIBER_VARS];
        for (i, &m) in multi.iter().enumerate() {
            key[i] = m as u8;
        }
        let t = table(sh.n, sh.deg_y);
        let idx = *t
            .index
            .get(&key)
            .ok_or_else(|| JetError::IndexOutOfBounds(multi.to_vec(), base_power))?
            as usize;
        let mut fact = FACTORIALS[base_power];
        for &m in multi {
            fact *= FACTORIALS[m];
        }
        Ok(self.coeffs[idx * (sh.deg_x + 1) + base_power] * fact)
    }
}

impl std::ops::Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        self.try_add(rhs).expect("jet shape mismatch in +")
    }
}

impl std::ops::Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        self.try_sub(rhs).expect("jet shape mismatch in -")
    }
}

impl std::ops::Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        self.try_mul(rhs).expect("jet shape mismatch in *")
    }
}

impl std::ops::Mul<f64> for &Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn sh(n: usize, dy: usize, dx: usize) -> JetShape {
        JetShape::new(n, dy, dx).unwrap()
    }

    #[test]
    fn seed_is_coordinate_function() {
        let j = Jet::seed_fiber(sh(2, 3, 0), 2.0, 0).unwrap();
        assert_eq!(j.value(), 2.0);
        assert_eq!(j.extract(&[1, 0], 0).unwrap(), 1.0);
        assert_eq!(j.extract(&[0, 1], 0).unwrap(), 0.0);
    }

    #[test]
    fn square_second_derivative() {
        let j = Jet::seed_fiber(sh(2, 3, 0), 2.0, 0).unwrap();
        let j2 = &j * &j;
        assert_eq!(j2.extract(&[2, 0], 0).unwrap(), 2.0);
        assert_eq!(j2.value(), 4.0);
    }

    #[test]
    fn zero_seed_constant_term() {
        let j = Jet::seed_fiber(sh(3, 5, 2), 0.0, 1).unwrap();
        assert_eq!(j.value(), 0.0);
    }

    #[test]
    fn fifth_power_gives_factorial() {
        let t = Jet::seed_fiber(sh(1, 5, 0), 0.3, 0).unwrap();
        let mut p = t.clone();
        for _ in 0..4 {
            p = &p * &t;
        }
        assert_relative_eq!(p.extract(&[5], 0).unwrap(), 120.0, max_relative = 1e-14);
    }

    #[test]
    fn sqrt_of_perfect_square() {
        // (1 + t)^2 at t = 0, then sqrt recovers 1 + t.
        let t = Jet::seed_fiber(sh(1, 4, 0), 0.0, 0).unwrap();
        let one_plus = t.add_scalar(1.0);
        let sq = &one_plus * &one_plus;
        let r = sq.try_sqrt().unwrap();
        assert_relative_eq!(r.value(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(r.extract(&[1], 0).unwrap(), 1.0, max_relative = 1e-14);
        assert_relative_eq!(r.extract(&[2], 0).unwrap(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn reciprocal_times_self_is_identity() {
        let x = Jet::seed_fiber(sh(2, 5, 1), 1.7, 0).unwrap();
        let prod = &x.recip().unwrap() * &x;
        assert_relative_eq!(prod.value(), 1.0, max_relative = 1e-14);
        for axis in 0..2 {
            let mut m = [0usize; 2];
            m[axis] = 1;
            assert_relative_eq!(prod.extract(&m, 0).unwrap(), 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn mixed_product_extraction() {
        let a = Jet::seed_fiber(sh(2, 3, 0), 1.5, 0).unwrap();
        let b = Jet::seed_fiber(sh(2, 3, 0), -0.5, 1).unwrap();
        let p = &a * &b;
        assert_relative_eq!(p.extract(&[1, 1], 0).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn constant_jet_has_zero_partials() {
        let c = Jet::constant(sh(3, 4, 1), 7.0);
        assert_eq!(c.extract(&[1, 0, 0], 0).unwrap(), 0.0);
        assert_eq!(c.extract(&[0, 2, 1], 1).unwrap(), 0.0);
    }

    #[test]
    fn cubic_monomial_partial() {
        // d^3 (y0^2 y1) / dy0^2 dy1 = 2
        let y0 = Jet::seed_fiber(sh(2, 3, 0), 0.7, 0).unwrap();
        let y1 = Jet::seed_fiber(sh(2, 3, 0), -0.2, 1).unwrap();
        let m = &(&y0 * &y0) * &y1;
        assert_relative_eq!(m.extract(&[2, 1], 0).unwrap(), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn base_derivative_of_linear() {
        let t = Jet::base_linear(sh(2, 2, 2), 3.0, 0.5).unwrap();
        let d = t.base_derivative().unwrap();
        assert_eq!(d.value(), 0.5);
        let dd = d.base_derivative().unwrap();
        assert_eq!(dd.value(), 0.0);
    }

    #[test]
    fn division_by_zero_constant_rejected() {
        let z = Jet::seed_fiber(sh(1, 2, 0), 0.0, 0).unwrap();
        let one = Jet::constant(sh(1, 2, 0), 1.0);
        assert_eq!(one.try_div(&z).unwrap_err(), JetError::DivisionByZero);
    }

    #[test]
    fn sqrt_guard() {
        let z = Jet::constant(sh(1, 2, 0), -1.0);
        assert!(matches!(z.try_sqrt(), Err(JetError::SqrtNonpositive(_))));
    }

    #[test]
    fn shape_mismatch_rejected() {
        let a = Jet::constant(sh(2, 3, 0), 1.0);
        let b = Jet::constant(sh(2, 4, 0), 1.0);
        assert!(matches!(a.try_mul(&b), Err(JetError::ShapeMismatch(_, _))));
    }

    #[test]
    fn exp_series_univariate() {
        let t = Jet::base_linear(JetShape::univariate(5).unwrap(), 0.0, 1.0).unwrap();
        let e = t.exp();
        for k in 0..=5 {
            assert_relative_eq!(
                e.extract(&[], k).unwrap(),
                1.0,
                max_relative = 1e-13
            );
        }
    }

    #[test]
    fn truncate_keeps_prefix() {
        let y0 = Jet::seed_fiber(sh(3, 5, 2), 1.0, 0).unwrap();
        let y1 = Jet::seed_fiber(sh(3, 5, 2), 2.0, 1).unwrap();
        let p = &y0 * &y1;
        let t = p.truncate(2, 1).unwrap();
        assert_eq!(t.value(), 2.0);
        assert_relative_eq!(t.extract(&[1, 1, 0], 0).unwrap(), 1.0, max_relative = 1e-14);
    }

    /// Random multivariate polynomial evaluated through jets matches the
    /// combinatorially computed partial derivatives.
    fn poly_partial(
        terms: &[(Vec<usize>, f64)],
        at: &[f64],
        multi: &[usize],
    ) -> f64 {
        let mut total = 0.0;
        for (expo, coef) in terms {
            let mut term = *coef;
            let mut ok = true;
            for (i, (&e, &m)) in expo.iter().zip(multi.iter()).enumerate() {
                if e < m {
                    ok = false;
                    break;
                }
                let mut fall = 1.0;
                for k in 0..m {
                    fall *= (e - k) as f64;
                }
                term *= fall * at[i].powi((e - m) as i32);
            }
            if ok {
                total += term;
            }
        }
        total
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn polynomial_partials_exact(
            coefs in proptest::collection::vec(-3.0f64..3.0, 10),
            at in proptest::collection::vec(-1.5f64..1.5, 3),
        ) {
            let n = 3;
            let deg = 5;
            let exps: Vec<Vec<usize>> = vec![
                vec![0,0,0], vec![1,0,0], vec![0,2,0], vec![1,1,0], vec![0,0,3],
                vec![2,1,0], vec![1,1,1], vec![3,0,2], vec![0,4,1], vec![2,2,1],
            ];
            let terms: Vec<(Vec<usize>, f64)> =
                exps.into_iter().zip(coefs).collect();
            let shape = sh(n, deg, 0);
            let seeds: Vec<Jet> = (0..n)
                .map(|i| Jet::seed_fiber(shape, at[i], i).unwrap())
                .collect();
            let mut p = Jet::constant(shape, 0.0);
            for (expo, coef) in &terms {
                let mut t = Jet::constant(shape, *coef);
                for (i, &e) in expo.iter().enumerate() {
                    t = t.try_mul(&seeds[i].powi(e as i32).unwrap()).unwrap();
                }
                p = p.try_add(&t).unwrap();
            }
            for multi in [[0,0,0],[1,0,0],[0,1,1],[2,0,1],[1,2,2],[0,0,5],[3,1,1]] {
                if multi.iter().sum::<usize>() > deg { continue; }
                let want = poly_partial(&terms, &at, &multi);
                let got = p.extract(&multi, 0).unwrap();
                let scale = 1.0 + want.abs();
                prop_assert!((got - want).abs() / scale < 1e-12,
                    "partial {:?}: got {got}, want {want}", multi);
            }
        }

        #[test]
        fn product_rule_leibniz(
            ca in proptest::collection::vec(-2.0f64..2.0, 6),
            cb in proptest::collection::vec(-2.0f64..2.0, 6),
        ) {
            // d^2/(dy0 dy1) (a*b) = sum of Leibniz terms, on quadratics.
            let shape = sh(2, 4, 0);
            let y0 = Jet::seed_fiber(shape, 0.4, 0).unwrap();
            let y1 = Jet::seed_fiber(shape, -0.3, 1).unwrap();
            let build = |c: &[f64]| {
                let mut j = Jet::constant(shape, c[0]);
                j = j.try_add(&y0.scale(c[1])).unwrap();
                j = j.try_add(&y1.scale(c[2])).unwrap();
                j = j.try_add(&(&y0 * &y0).scale(c[3])).unwrap();
                j = j.try_add(&(&y0 * &y1).scale(c[4])).unwrap();
                j = j.try_add(&(&y1 * &y1).scale(c[5])).unwrap();
                j
            };
            let a = build(&ca);
            let b = build(&cb);
            let prod = &a * &b;
            let d = |j: &Jet, m: &[usize]| j.extract(m, 0).unwrap();
            let lhs = d(&prod, &[1, 1]);
            let rhs = d(&a, &[1,1]) * b.value()
                + d(&a, &[1,0]) * d(&b, &[0,1])
                + d(&a, &[0,1]) * d(&b, &[1,0])
                + a.value() * d(&b, &[1,1]);
            prop_assert!((lhs - rhs).abs() < 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
