//! Riemannian machinery of the pair (alpha, beta): Levi-Civita connection,
//! covariant derivatives of the 1-form, and the r/s tensors with their
//! contractions.

use crate::error::FinslerError;
use crate::expr::Expr;
use crate::jet::{Jet, JetShape};
use crate::linalg::{self, Mat};
use crate::metric::MetricSpec;

/// Value, gradient, and full Hessian of one scalar field at a point.
#[derive(Clone, Debug)]
pub struct ScalarField2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Mat,
}

/// Evaluates value, first, and second partial derivatives of an expression
/// by directional base jets of degree two; mixed partials come from the
/// polarization identity on the axis-pair directions.
pub fn eval_field2(e: &Expr, x: &[f64]) -> Result<ScalarField2, FinslerError> {
    let n = x.len();
    let shape = JetShape::new(0, 0, 2)?;
    let eval_dir = |v: &[f64]| -> Result<(f64, f64, f64), FinslerError> {
        let vars: Vec<Jet> = x
            .iter()
            .zip(v)
            .map(|(&xi, &vi)| Jet::base_linear(shape, xi, vi))
            .collect::<Result<_, _>>()?;
        let j = e.eval_jet(&vars)?;
        Ok((
            j.value(),
            j.extract(&[], 1)?,
            j.extract(&[], 2)?,
        ))
    };

    let mut value = 0.0;
    let mut grad = vec![0.0; n];
    let mut hess = linalg::zeros_mat(n);
    let mut diag2 = vec![0.0; n];
    for d in 0..n {
        let mut v = vec![0.0; n];
        v[d] = 1.0;
        let (val, g, h2) = eval_dir(&v)?;
        value = val;
        grad[d] = g;
        diag2[d] = h2;
        hess[d][d] = h2;
    }
    for c in 0..n {
        for d in c + 1..n {
            let mut v = vec![0.0; n];
            v[c] = 1.0;
            v[d] = 1.0;
            let (_, _, h2) = eval_dir(&v)?;
            let mixed = 0.5 * (h2 - diag2[c] - diag2[d]);
            hess[c][d] = mixed;
            hess[d][c] = mixed;
        }
    }
    Ok(ScalarField2 { value, grad, hess })
}

/// All Riemannian data of (alpha, beta) at one base point.
#[derive(Clone, Debug)]
pub struct RiemannState {
    pub x: Vec<f64>,
    pub n: usize,
    pub a: Mat,
    pub a_inv: Mat,
    pub sqrt_det_a: f64,
    /// `da[k][i][j] = d a_ij / d x^k`
    pub da: Vec<Mat>,
    /// `dda[k][l][i][j]`, symmetric in (k, l).
    pub dda: Vec<Vec<Mat>>,
    /// `gamma[i][j][k] = Gamma^i_{jk}`
    pub gamma: Vec<Mat>,
    /// `dgamma[l][i][j][k] = d Gamma^i_{jk} / d x^l`
    pub dgamma: Vec<Vec<Mat>>,
    pub b: Vec<f64>,
    /// `db[i][j] = d b_i / d x^j`
    pub db: Mat,
    /// `ddb[i][j][k] = d^2 b_i / d x^j d x^k`
    pub ddb: Vec<Mat>,
    /// `nabla_b[i][j] = b_{i|j}`
    pub nabla_b: Mat,
    pub r: Mat,
    pub s: Mat,
    /// `s_mixed[i][j] = s^i_j`
    pub s_mixed: Mat,
    /// `ds_mixed[k][i][j] = d s^i_j / d x^k` (plain partial)
    pub ds_mixed: Vec<Mat>,
    /// `nabla_s[i][j][k] = s_{ij|k}` (Levi-Civita covariant derivative)
    pub nabla_s: Vec<Mat>,
    /// `s_j = b^i s_ij`
    pub s_vec: Vec<f64>,
    /// `r_j = b^i r_ij`
    pub r_vec: Vec<f64>,
    /// `b^i = a^{ij} b_j`
    pub b_up: Vec<f64>,
    pub b_norm_sq: f64,
    /// `d b^2 / d x^l`
    pub db_norm_sq: Vec<f64>,
}

/// y-dependent contractions of the r/s machinery.
#[derive(Clone, Debug)]
pub struct RsContractions {
    pub r_00: f64,
    pub r_i0: Vec<f64>,
    pub s_i0: Vec<f64>,
    /// `s^i_0 = a^{ih} s_{hj} y^j`
    pub s_up_0: Vec<f64>,
    pub r_0: f64,
    pub s_0: f64,
}

impl RiemannState {
    pub fn new(spec: &MetricSpec, x: &[f64]) -> Result<Self, FinslerError> {
        let n = spec.dim;
        if x.len() != n {
            return Err(FinslerError::InvalidMetric(format!(
                "base point has {} coordinates, chart dimension is {n}",
                x.len()
            )));
        }

        let mut a = linalg::zeros_mat(n);
        let mut da = linalg::zeros3(n);
        let mut dda = vec![linalg::zeros3(n); n];
        for i in 0..n {
            for j in 0..=i {
                let f = eval_field2(&spec.a[i][j], x)?;
                a[i][j] = f.value;
                a[j][i] = f.value;
                for k in 0..n {
                    da[k][i][j] = f.grad[k];
                    da[k][j][i] = f.grad[k];
                    for l in 0..n {
                        dda[k][l][i][j] = f.hess[k][l];
                        dda[k][l][j][i] = f.hess[k][l];
                    }
                }
            }
        }

        let chol = linalg::cholesky(&a).ok_or(FinslerError::NotPositiveDefinite)?;
        let sqrt_det_a = linalg::sqrt_det_from_chol(&chol);
        let a_inv = linalg::spd_inverse(&a).ok_or(FinslerError::NotPositiveDefinite)?;

        let mut b = vec![0.0; n];
        let mut db = linalg::zeros_mat(n);
        let mut ddb = linalg::zeros3(n);
        for i in 0..n {
            let f = eval_field2(&spec.b[i], x)?;
            b[i] = f.value;
            for j in 0..n {
                db[i][j] = f.grad[j];
                for k in 0..n {
                    ddb[i][j][k] = f.hess[j][k];
                }
            }
        }

        // Gamma^i_jk = a^il (d_j a_lk + d_k a_jl - d_l a_jk) / 2
        let mut gamma = linalg::zeros3(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut sum = 0.0;
                    for l in 0..n {
                        sum += a_inv[i][l] * (da[j][l][k] + da[k][j][l] - da[l][j][k]);
                    }
                    gamma[i][j][k] = 0.5 * sum;
                }
            }
        }

        // d a^{im} / d x^l = -a^{ip} (d_l a_pq) a^{qm}
        let mut da_inv = linalg::zeros3(n);
        for l in 0..n {
            for i in 0..n {
                for m in 0..n {
                    let mut sum = 0.0;
                    for p in 0..n {
                        for q in 0..n {
                            sum -= a_inv[i][p] * da[l][p][q] * a_inv[q][m];
                        }
                    }
                    da_inv[l][i][m] = sum;
                }
            }
        }

        let mut dgamma = vec![linalg::zeros3(n); n];
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let mut sum = 0.0;
                        for m in 0..n {
                            sum += da_inv[l][i][m] * (da[j][m][k] + da[k][j][m] - da[m][j][k]);
                            sum += a_inv[i][m]
                                * (dda[l][j][m][k] + dda[l][k][j][m] - dda[l][m][j][k]);
                        }
                        dgamma[l][i][j][k] = 0.5 * sum;
                    }
                }
            }
        }

        // b_{i|j} = d_j b_i - Gamma^m_ij b_m
        let mut nabla_b = linalg::zeros_mat(n);
        for i in 0..n {
            for j in 0..n {
                let mut v = db[i][j];
                for m in 0..n {
                    v -= gamma[m][i][j] * b[m];
                }
                nabla_b[i][j] = v;
            }
        }

        let mut r = linalg::zeros_mat(n);
        let mut s = linalg::zeros_mat(n);
        for i in 0..n {
            for j in 0..n {
                r[i][j] = 0.5 * (nabla_b[i][j] + nabla_b[j][i]);
                s[i][j] = 0.5 * (nabla_b[i][j] - nabla_b[j][i]);
            }
        }

        let mut s_mixed = linalg::zeros_mat(n);
        for i in 0..n {
            for j in 0..n {
                s_mixed[i][j] = (0..n).map(|h| a_inv[i][h] * s[h][j]).sum();
            }
        }

        // d_k s_ij = (d_k d_j b_i - d_k d_i b_j) / 2
        let mut ds = linalg::zeros3(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    ds[k][i][j] = 0.5 * (ddb[i][j][k] - ddb[j][i][k]);
                }
            }
        }

        let mut ds_mixed = linalg::zeros3(n);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let mut v = 0.0;
                    for h in 0..n {
                        v += da_inv[k][i][h] * s[h][j] + a_inv[i][h] * ds[k][h][j];
                    }
                    ds_mixed[k][i][j] = v;
                }
            }
        }

        // s_{ij|k} = d_k s_ij - Gamma^m_ki s_mj - Gamma^m_kj s_im
        let mut nabla_s = linalg::zeros3(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut v = ds[k][i][j];
                    for m in 0..n {
                        v -= gamma[m][k][i] * s[m][j] + gamma[m][k][j] * s[i][m];
                    }
                    nabla_s[i][j][k] = v;
                }
            }
        }

        let b_up = linalg::mat_vec(&a_inv, &b);
        let s_vec: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| b_up[i] * s[i][j]).sum())
            .collect();
        let r_vec: Vec<f64> = (0..n)
            .map(|j| (0..n).map(|i| b_up[i] * r[i][j]).sum())
            .collect();
        let b_norm_sq = linalg::dot(&b_up, &b);
        // d_l b^2 = 2 b^m b_{m|l} = 2 (r_l + s_l)
        let db_norm_sq: Vec<f64> = (0..n).map(|l| 2.0 * (r_vec[l] + s_vec[l])).collect();

        Ok(RiemannState {
            x: x.to_vec(),
            n,
            a,
            a_inv,
            sqrt_det_a,
            da,
            dda,
            gamma,
            dgamma,
            b,
            db,
            ddb,
            nabla_b,
            r,
            s,
            s_mixed,
            ds_mixed,
            nabla_s,
            s_vec,
            r_vec,
            b_up,
            b_norm_sq,
            db_norm_sq,
        })
    }

    pub fn alpha(&self, y: &[f64]) -> f64 {
        linalg::quad_form(&self.a, y, y).sqrt()
    }

    pub fn beta(&self, y: &[f64]) -> f64 {
        linalg::dot(&self.b, y)
    }

    /// `s = beta/alpha` and `b = |beta|_alpha` at this point.
    pub fn s_and_b(&self, y: &[f64]) -> (f64, f64) {
        (self.beta(y) / self.alpha(y), self.b_norm_sq.max(0.0).sqrt())
    }

    pub fn contractions(&self, y: &[f64]) -> RsContractions {
        let n = self.n;
        let r_i0: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| self.r[i][j] * y[j]).sum())
            .collect();
        let s_i0: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| self.s[i][j] * y[j]).sum())
            .collect();
        let s_up_0: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| self.s_mixed[i][j] * y[j]).sum())
            .collect();
        RsContractions {
            r_00: linalg::dot(&r_i0, y),
            r_0: linalg::dot(&self.r_vec, y),
            s_0: linalg::dot(&self.s_vec, y),
            r_i0,
            s_i0,
            s_up_0,
        }
    }
}
