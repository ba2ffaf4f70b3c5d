//! Definition-path evaluation of every Finsler tensor at one (x, y):
//! fundamental tensor, Cartan and Matsumoto torsions, spray, Berwald and
//! Landsberg curvatures, and their means, all obtained by exact jet
//! differentiation of `F^2 = alpha^2 phi(beta/alpha)^2`.
//!
//! This path never touches the closed-form coefficient apparatus, so it can
//! serve as an independent oracle for it.

use crate::error::FinslerError;
use crate::jet::{Jet, JetShape};
use crate::linalg::{self, Mat};
use crate::metric::MetricSpec;
use crate::phi::compose_phi;
use crate::riemann::RiemannState;

pub type T3 = Vec<Vec<Vec<f64>>>;
pub type T4 = Vec<Vec<Vec<Vec<f64>>>>;

/// Fiber truncation used by the engine: the deepest consumer is the Berwald
/// tensor, three fiber derivatives of spray coefficients that already carry
/// two fiber derivatives of `F^2`.
pub const FIBER_DEG: usize = 5;

/// All evaluated tensors at one point of the slit tangent bundle.
#[derive(Clone, Debug)]
pub struct PointState {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f: f64,
    pub g: Mat,
    pub g_inv: Mat,
    /// `y_i = g_ij y^j`
    pub y_low: Vec<f64>,
    /// Angular metric `h_ij = g_ij - y_i y_j / F^2`.
    pub h: Mat,
    /// Cartan torsion `C_ijk`.
    pub cartan: T3,
    /// Mean Cartan torsion `I_i = g^{jk} C_ijk`.
    pub mean_cartan: Vec<f64>,
    /// Matsumoto torsion: trace-free part of the Cartan torsion.
    pub matsumoto: T3,
    /// Spray coefficients `G^i`.
    pub spray: Vec<f64>,
    /// `N^i_j = dG^i/dy^j`
    pub spray_jac: Mat,
    /// `dG^i/dy^i`, the fiber divergence entering the S-curvature.
    pub spray_div: f64,
    /// Berwald curvature `B^i_jkl`.
    pub berwald: T4,
    /// Landsberg curvature `L_ijk = -1/2 y_m B^m_jkl`.
    pub landsberg: T3,
    /// Mean Landsberg curvature `J_i = g^{jk} L_ijk`.
    pub mean_landsberg: Vec<f64>,
    /// P-deviation `L_ijk - (J_i h_jk + J_j h_ik + J_k h_ij)/(n+1)`.
    ///
    /// This equals the horizontal derivative of the Matsumoto torsion along
    /// the spray: h, F, and the lowered y are all h-parallel and the
    /// horizontal derivatives of C and I are L and J, so differentiating
    /// `M = C - sym(I h)/(n+1)` along the flow leaves exactly this
    /// combination.
    pub pred: T3,
    /// S-curvature; populated once a volume density is attached.
    pub s_curvature: Option<f64>,
}

/// Jet of `F^2` at (x, y). With `dir = Some(d)` the jet also carries first
/// base-order data in direction `x^d`; the Riemannian state supplies the
/// exact expression derivatives.
pub fn f_squared_jet(
    spec: &MetricSpec,
    rm: &RiemannState,
    y: &[f64],
    dir: Option<usize>,
) -> Result<Jet, FinslerError> {
    let n = spec.dim;
    let shape = JetShape::new(n, FIBER_DEG, if dir.is_some() { 1 } else { 0 })?;
    let embed = |value: f64, slope: f64| -> Result<Jet, FinslerError> {
        Ok(match dir {
            Some(_) => Jet::from_base_series(shape, &[value, slope])?,
            None => Jet::constant(shape, value),
        })
    };

    let y_jets: Vec<Jet> = (0..n)
        .map(|i| Jet::seed_fiber(shape, y[i], i))
        .collect::<Result<_, _>>()?;

    let mut alpha_sq = Jet::constant(shape, 0.0);
    for i in 0..n {
        for j in 0..=i {
            let slope = dir.map(|d| rm.da[d][i][j]).unwrap_or(0.0);
            let aij = embed(rm.a[i][j], slope)?;
            let factor = if i == j { 1.0 } else { 2.0 };
            alpha_sq = &alpha_sq + &(&(&aij * &y_jets[i]) * &y_jets[j]).scale(factor);
        }
    }
    if alpha_sq.value() <= 1e-16 {
        return Err(FinslerError::Domain {
            guard: format!("alpha positivity: alpha^2 = {} at y = {y:?}", alpha_sq.value()),
        });
    }

    let mut beta = Jet::constant(shape, 0.0);
    for i in 0..n {
        let slope = dir.map(|d| rm.db[i][d]).unwrap_or(0.0);
        let bi = embed(rm.b[i], slope)?;
        beta = &beta + &(&bi * &y_jets[i]);
    }

    let alpha = alpha_sq.try_sqrt()?;
    let s = beta.try_div(&alpha)?;
    spec.phi.check_regularity(s.value())?;
    let phi_jet = compose_phi(&spec.phi, &s)?;
    Ok(&(&alpha_sq * &phi_jet) * &phi_jet)
}

/// Cholesky-based inverse of a symmetric jet-valued matrix.
fn jet_spd_inverse(g: &[Vec<Jet>]) -> Result<Vec<Vec<Jet>>, FinslerError> {
    let n = g.len();
    let shape = g[0][0].shape();
    let zero = Jet::constant(shape, 0.0);
    let mut l = vec![vec![zero.clone(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = g[i][j].clone();
            for k in 0..j {
                sum = &sum - &(&l[i][k] * &l[j][k]);
            }
            if i == j {
                l[i][j] = sum.try_sqrt().map_err(|_| FinslerError::SingularFundamental)?;
            } else {
                l[i][j] = sum
                    .try_div(&l[j][j])
                    .map_err(|_| FinslerError::SingularFundamental)?;
            }
        }
    }
    let mut inv = vec![vec![zero.clone(); n]; n];
    for col in 0..n {
        // forward: L z = e_col
        let mut z = vec![zero.clone(); n];
        for i in 0..n {
            let mut sum = Jet::constant(shape, if i == col { 1.0 } else { 0.0 });
            for k in 0..i {
                sum = &sum - &(&l[i][k] * &z[k]);
            }
            z[i] = sum
                .try_div(&l[i][i])
                .map_err(|_| FinslerError::SingularFundamental)?;
        }
        // backward: L^T w = z
        for i in (0..n).rev() {
            let mut sum = z[i].clone();
            for k in i + 1..n {
                sum = &sum - &(&l[k][i] * &inv[k][col]);
            }
            inv[i][col] = sum
                .try_div(&l[i][i])
                .map_err(|_| FinslerError::SingularFundamental)?;
        }
    }
    Ok(inv)
}

fn unit(i: usize, j: usize, k: usize, n: usize) -> Vec<usize> {
    let mut m = vec![0usize; n];
    m[i] += 1;
    m[j] += 1;
    m[k] += 1;
    m
}

impl PointState {
    pub fn compute(
        spec: &MetricSpec,
        rm: &RiemannState,
        y: &[f64],
    ) -> Result<PointState, FinslerError> {
        let n = spec.dim;
        let f2_dirs: Vec<Jet> = (0..n)
            .map(|d| f_squared_jet(spec, rm, y, Some(d)))
            .collect::<Result<_, _>>()?;
        let f2_fiber = f2_dirs[0].drop_base();

        let f_sq = f2_fiber.value();
        if f_sq <= 0.0 {
            return Err(FinslerError::Domain {
                guard: format!("F^2 positivity: F^2 = {f_sq}"),
            });
        }
        let f = f_sq.sqrt();

        // g_ij as jets of remaining fiber degree 3, for the spray pipeline.
        let mut g_jets: Vec<Vec<Jet>> = Vec::with_capacity(n);
        for i in 0..n {
            let di = f2_fiber.fiber_derivative(i)?;
            let mut row = Vec::with_capacity(n);
            for j in 0..n {
                row.push(di.fiber_derivative(j)?.scale(0.5));
            }
            g_jets.push(row);
        }
        let mut g = linalg::zeros_mat(n);
        for i in 0..n {
            for j in 0..n {
                g[i][j] = g_jets[i][j].value();
            }
        }
        let ginv_jets = jet_spd_inverse(&g_jets)?;
        let mut g_inv = linalg::zeros_mat(n);
        for i in 0..n {
            for j in 0..n {
                g_inv[i][j] = ginv_jets[i][j].value();
            }
        }

        let y_low = linalg::mat_vec(&g, y);
        let mut h = linalg::zeros_mat(n);
        for i in 0..n {
            for j in 0..n {
                h[i][j] = g[i][j] - y_low[i] * y_low[j] / f_sq;
            }
        }

        // C_ijk = (1/4) d^3 F^2 / dy^i dy^j dy^k
        let mut cartan = zeros3(n);
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let v = 0.25 * f2_fiber.extract(&unit(i, j, k, n), 0)?;
                    set_sym3(&mut cartan, i, j, k, v);
                }
            }
        }
        let mean_cartan: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        s += g_inv[j][k] * cartan[i][j][k];
                    }
                }
                s
            })
            .collect();
        let matsumoto = sub3(&cartan, &sym_vec_mat(&mean_cartan, &h, 1.0 / (n as f64 + 1.0)));

        // Spray coefficients as fiber-degree-3 jets:
        // G^i = (1/4) g^{il} [ (d^2 F^2/dx^k dy^l) y^k - d F^2/dx^l ]
        let y_seed4: Vec<Jet> = {
            let shape4 = JetShape::new(n, 4, 0)?;
            (0..n)
                .map(|i| Jet::seed_fiber(shape4, y[i], i))
                .collect::<Result<_, _>>()?
        };
        let dx_f2: Vec<Jet> = f2_dirs
            .iter()
            .map(|j| j.base_derivative())
            .collect::<Result<_, _>>()?; // each: fiber degree 5, no base
        let mut w = Vec::with_capacity(n);
        for l in 0..n {
            let mut acc = dx_f2[l].truncate(4, 0)?.neg();
            for k in 0..n {
                let u = dx_f2[k].fiber_derivative(l)?; // degree 4
                acc = &acc + &(&u * &y_seed4[k]);
            }
            w.push(acc.truncate(3, 0)?);
        }
        let mut spray_jets = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = Jet::constant(w[0].shape(), 0.0);
            for l in 0..n {
                acc = &acc + &(&ginv_jets[i][l] * &w[l]);
            }
            spray_jets.push(acc.scale(0.25));
        }

        let spray: Vec<f64> = spray_jets.iter().map(|j| j.value()).collect();
        let mut spray_jac = linalg::zeros_mat(n);
        for i in 0..n {
            for j in 0..n {
                let mut m = vec![0usize; n];
                m[j] = 1;
                spray_jac[i][j] = spray_jets[i].extract(&m, 0)?;
            }
        }
        let spray_div = (0..n).map(|i| spray_jac[i][i]).sum();

        let mut berwald = zeros4(n);
        for i in 0..n {
            for j in 0..n {
                for k in j..n {
                    for l in k..n {
                        let v = spray_jets[i].extract(&unit(j, k, l, n), 0)?;
                        // symmetric in (j,k,l)
                        for (jj, kk, ll) in perms3(j, k, l) {
                            berwald[i][jj][kk][ll] = v;
                        }
                    }
                }
            }
        }

        let mut landsberg = zeros3(n);
        for j in 0..n {
            for k in j..n {
                for l in k..n {
                    let mut v = 0.0;
                    for m in 0..n {
                        v += y_low[m] * berwald[m][j][k][l];
                    }
                    set_sym3(&mut landsberg, j, k, l, -0.5 * v);
                }
            }
        }
        let mean_landsberg: Vec<f64> = (0..n)
            .map(|i| {
                let mut s = 0.0;
                for j in 0..n {
                    for k in 0..n {
                        s += g_inv[j][k] * landsberg[i][j][k];
                    }
                }
                s
            })
            .collect();
        let pred = sub3(
            &landsberg,
            &sym_vec_mat(&mean_landsberg, &h, 1.0 / (n as f64 + 1.0)),
        );

        Ok(PointState {
            x: rm.x.clone(),
            y: y.to_vec(),
            f,
            g,
            g_inv,
            y_low,
            h,
            cartan,
            mean_cartan,
            matsumoto,
            spray,
            spray_jac,
            spray_div,
            berwald,
            landsberg,
            mean_landsberg,
            pred,
            s_curvature: None,
        })
    }
}

fn perms3(a: usize, b: usize, c: usize) -> [(usize, usize, usize); 6] {
    [
        (a, b, c),
        (a, c, b),
        (b, a, c),
        (b, c, a),
        (c, a, b),
        (c, b, a),
    ]
}

pub fn zeros3(n: usize) -> T3 {
    vec![vec![vec![0.0; n]; n]; n]
}

pub fn zeros4(n: usize) -> T4 {
    vec![vec![vec![vec![0.0; n]; n]; n]; n]
}

fn set_sym3(t: &mut T3, i: usize, j: usize, k: usize, v: f64) {
    for (a, b, c) in perms3(i, j, k) {
        t[a][b][c] = v;
    }
}

/// `coef * (v_i m_jk + v_j m_ik + v_k m_ij)`
pub fn sym_vec_mat(v: &[f64], m: &Mat, coef: f64) -> T3 {
    let n = v.len();
    let mut t = zeros3(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                t[i][j][k] = coef * (v[i] * m[j][k] + v[j] * m[i][k] + v[k] * m[i][j]);
            }
        }
    }
    t
}

pub fn sub3(a: &T3, b: &T3) -> T3 {
    let n = a.len();
    let mut t = zeros3(n);
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                t[i][j][k] = a[i][j][k] - b[i][j][k];
            }
        }
    }
    t
}

/// g-norm of a fully covariant vector: `sqrt(v_i v_j g^{ij})`.
pub fn norm_cov(v: &[f64], g_inv: &Mat) -> f64 {
    linalg::quad_form(g_inv, v, v).max(0.0).sqrt()
}

/// g-norm of a fully covariant rank-3 tensor.
pub fn norm3(t: &T3, g_inv: &Mat) -> f64 {
    let n = t.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        for p in 0..n {
                            total += t[i][j][k]
                                * t[l][m][p]
                                * g_inv[i][l]
                                * g_inv[j][m]
                                * g_inv[k][p];
                        }
                    }
                }
            }
        }
    }
    total.max(0.0).sqrt()
}

/// g-inner product of two fully covariant rank-3 tensors.
pub fn inner3(a: &T3, b: &T3, g_inv: &Mat) -> f64 {
    let n = a.len();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    for m in 0..n {
                        for p in 0..n {
                            total += a[i][j][k]
                                * b[l][m][p]
                                * g_inv[i][l]
                                * g_inv[j][m]
                                * g_inv[k][p];
                        }
                    }
                }
            }
        }
    }
    total
}

/// g-norm of the Berwald tensor (one contravariant, three covariant slots).
pub fn norm_berwald(b: &T4, g: &Mat, g_inv: &Mat) -> f64 {
    let n = b.len();
    let mut total = 0.0;
    for i in 0..n {
        for m in 0..n {
            for j in 0..n {
                for p in 0..n {
                    for k in 0..n {
                        for q in 0..n {
                            for l in 0..n {
                                for r in 0..n {
                                    total += b[i][j][k][l]
                                        * b[m][p][q][r]
                                        * g[i][m]
                                        * g_inv[j][p]
                                        * g_inv[k][q]
                                        * g_inv[l][r];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    total.max(0.0).sqrt()
}

/// Largest deviation of a rank-3 tensor from total symmetry.
pub fn max_asymmetry3(t: &T3) -> f64 {
    let n = t.len();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let v = t[i][j][k];
                for (a, b, c) in perms3(i, j, k) {
                    worst = worst.max((v - t[a][b][c]).abs());
                }
            }
        }
    }
    worst
}

/// Largest contraction of the last slot with y (for `T_..k y^k = 0` checks).
pub fn max_y_contraction3(t: &T3, y: &[f64]) -> f64 {
    let n = t.len();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let v: f64 = (0..n).map(|k| t[i][j][k] * y[k]).sum();
            worst = worst.max(v.abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{ChartBox, MetricSpec};
    use crate::phi::PhiFamily;
    use approx::assert_relative_eq;

    fn euclid_randers(dim: usize, bv: f64) -> MetricSpec {
        MetricSpec::flat_constant_form(dim, bv, PhiFamily::Randers, "t".into()).unwrap()
    }

    #[test]
    fn euclidean_norm_value() {
        // b = 0 and phi = 1 + s gives F = |y|.
        let spec = euclid_randers(2, 0.0);
        let rm = RiemannState::new(&spec, &[0.0, 0.0]).unwrap();
        let st = PointState::compute(&spec, &rm, &[3.0, 4.0]).unwrap();
        assert_relative_eq!(st.f, 5.0, max_relative = 1e-14);
    }

    #[test]
    fn euclidean_fundamental_tensor() {
        let spec = euclid_randers(2, 0.0);
        let rm = RiemannState::new(&spec, &[0.0, 0.0]).unwrap();
        let st = PointState::compute(&spec, &rm, &[1.0, 0.0]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_relative_eq!(st.g[i][j], want, epsilon = 1e-13);
            }
        }
        assert_relative_eq!(st.h[0][0], 0.0, epsilon = 1e-13);
        assert_relative_eq!(st.h[1][1], 1.0, epsilon = 1e-13);
    }

    #[test]
    fn kropina_hand_value() {
        // F = alpha^2/beta with b = (1,0,0), y = (1,0,0): F = 1.
        let spec =
            MetricSpec::flat_constant_form(3, 1.0, PhiFamily::Kropina, "t".into()).unwrap();
        let rm = RiemannState::new(&spec, &[0.1, 0.2, 0.3]).unwrap();
        let st = PointState::compute(&spec, &rm, &[1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(st.f, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn riemannian_cartan_vanishes() {
        let spec = euclid_randers(3, 0.0);
        let rm = RiemannState::new(&spec, &[0.0, 0.0, 0.0]).unwrap();
        let st = PointState::compute(&spec, &rm, &[0.5, -1.0, 2.0]).unwrap();
        let c_norm = norm3(&st.cartan, &st.g_inv);
        assert!(c_norm < 1e-12, "Cartan norm {c_norm}");
    }

    #[test]
    fn randers_matsumoto_vanishes() {
        let spec = euclid_randers(3, 0.3);
        let rm = RiemannState::new(&spec, &[0.0, 0.0, 0.0]).unwrap();
        let st = PointState::compute(&spec, &rm, &[0.5, -1.0, 2.0]).unwrap();
        let m_norm = norm3(&st.matsumoto, &st.g_inv);
        let c_norm = norm3(&st.cartan, &st.g_inv);
        assert!(c_norm > 1e-3, "Randers should be non-Riemannian");
        assert!(m_norm / (1.0 + c_norm) < 1e-10, "Matsumoto norm {m_norm}");
    }

    #[test]
    fn berwald_baseline_flat() {
        let spec = euclid_randers(3, 0.4);
        let rm = RiemannState::new(&spec, &[0.3, 0.1, -0.2]).unwrap();
        let st = PointState::compute(&spec, &rm, &[1.0, 0.5, -0.7]).unwrap();
        assert!(linalg::max_abs_vec(&st.spray) < 1e-14);
        assert!(norm_berwald(&st.berwald, &st.g, &st.g_inv) < 1e-12);
        assert!(norm3(&st.landsberg, &st.g_inv) < 1e-12);
        assert!(norm_cov(&st.mean_landsberg, &st.g_inv) < 1e-12);
        assert!(norm3(&st.pred, &st.g_inv) < 1e-12);
    }

    #[test]
    fn f_squared_matches_g_contraction() {
        let spec = euclid_randers(3, 0.3);
        let rm = RiemannState::new(&spec, &[0.0, 0.0, 0.0]).unwrap();
        let y = [0.8, -0.3, 0.5];
        let st = PointState::compute(&spec, &rm, &y).unwrap();
        let gyy = linalg::quad_form(&st.g, &y, &y);
        assert_relative_eq!(gyy, st.f * st.f, max_relative = 1e-10);
    }

    #[test]
    fn angular_metric_annihilates_y() {
        let spec = euclid_randers(3, 0.3);
        let rm = RiemannState::new(&spec, &[0.0, 0.0, 0.0]).unwrap();
        let y = [0.8, -0.3, 0.5];
        let st = PointState::compute(&spec, &rm, &y).unwrap();
        for i in 0..3 {
            let v: f64 = (0..3).map(|j| st.h[i][j] * y[j]).sum();
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn spray_homogeneity_on_curved_background() {
        let spec = MetricSpec::from_strings(
            3,
            &[
                vec!["1+0.2*x2^2".into()],
                vec!["0.1*x3".into(), "1.5".into()],
                vec!["0".into(), "0.05*x1".into(), "2".into()],
            ],
            &["0.2".into(), "0.1*x1".into(), "0".into()],
            PhiFamily::Randers,
            ChartBox::cube(3, 1.0),
            "curved".into(),
        )
        .unwrap();
        let rm = RiemannState::new(&spec, &[0.2, -0.1, 0.3]).unwrap();
        let y = [0.9, 0.2, -0.4];
        let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        let st1 = PointState::compute(&spec, &rm, &y).unwrap();
        let st2 = PointState::compute(&spec, &rm, &y2).unwrap();
        for i in 0..3 {
            let scale = 1.0 + st2.spray[i].abs();
            assert!(
                (st2.spray[i] - 4.0 * st1.spray[i]).abs() / scale < 1e-10,
                "spray not 2-homogeneous"
            );
        }
    }

    #[test]
    fn landsberg_contraction_identities() {
        let spec = MetricSpec::from_strings(
            3,
            &[
                vec!["1".into()],
                vec!["0".into(), "1+0.3*x1^2".into()],
                vec!["0".into(), "0".into(), "1".into()],
            ],
            &["0.3".into(), "0.1*x1".into(), "0".into()],
            PhiFamily::Randers,
            ChartBox::cube(3, 1.0),
            "curved".into(),
        )
        .unwrap();
        let rm = RiemannState::new(&spec, &[0.4, -0.2, 0.1]).unwrap();
        let y = [1.0, 0.3, -0.6];
        let st = PointState::compute(&spec, &rm, &y).unwrap();
        let scale = 1.0 + norm3(&st.landsberg, &st.g_inv);
        assert!(max_y_contraction3(&st.landsberg, &y) / scale < 1e-10);
        assert!(max_asymmetry3(&st.landsberg) / scale < 1e-10);
        let jy: f64 = (0..3).map(|i| st.mean_landsberg[i] * y[i]).sum();
        assert!(jy.abs() / scale < 1e-10);
    }
}
