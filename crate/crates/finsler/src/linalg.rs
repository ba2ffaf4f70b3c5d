//! Minimal dense linear algebra for the small (n <= 4) matrices used
//! throughout the engine.

pub type Mat = Vec<Vec<f64>>;

pub fn zeros_mat(n: usize) -> Mat {
    vec![vec![0.0; n]; n]
}

pub fn zeros3(n: usize) -> Vec<Mat> {
    vec![zeros_mat(n); n]
}

pub fn zeros4(n: usize) -> Vec<Vec<Mat>> {
    vec![zeros3(n); n]
}

/// Cholesky factor L (lower) of a symmetric positive definite matrix.
pub fn cholesky(a: &Mat) -> Option<Mat> {
    let n = a.len();
    let mut l = zeros_mat(n);
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return None;
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Solves `a x = rhs` given the Cholesky factor of `a`.
pub fn chol_solve(l: &Mat, rhs: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in i + 1..n {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Inverse of a symmetric positive definite matrix via Cholesky.
pub fn spd_inverse(a: &Mat) -> Option<Mat> {
    let n = a.len();
    let l = cholesky(a)?;
    let mut inv = zeros_mat(n);
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        let col = chol_solve(&l, &e);
        for i in 0..n {
            inv[i][j] = col[i];
        }
    }
    // Symmetrize against rounding.
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (inv[i][j] + inv[j][i]);
            inv[i][j] = v;
            inv[j][i] = v;
        }
    }
    Some(inv)
}

pub fn sqrt_det_from_chol(l: &Mat) -> f64 {
    l.iter().enumerate().map(|(i, row)| row[i]).product()
}

pub fn mat_vec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn quad_form(a: &Mat, u: &[f64], v: &[f64]) -> f64 {
    let n = a.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += a[i][j] * u[i] * v[j];
        }
    }
    s
}

pub fn max_abs_mat(a: &Mat) -> f64 {
    a.iter()
        .flat_map(|r| r.iter())
        .fold(0.0_f64, |m, &v| m.max(v.abs()))
}

pub fn max_abs_vec(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, &x| m.max(x.abs()))
}
