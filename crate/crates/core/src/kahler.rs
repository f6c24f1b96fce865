//! Kähler structure at a point: parallelism of `J`, Ricci form, the
//! closed forms of `W₊` and of the Bach tensor, extremality.
//!
//! `J` is stored as `J^a_b`. The Kähler form is `ω_ab = g_cb J^c_a`, the Ricci
//! form `ρ_ab = r_cb J^c_a`, and `J*T_ab = J^c_a J^d_b T_cd` on 2-tensors.

use serde::Serialize;

use crate::bach::BachTensor;
use crate::curvature::{curvature_norm_sq, laplacian_jet, CurvatureBundle, CurvatureJets};
use crate::exprlang::{variable_jets, Expr, MetricDefinition};
use crate::geometry::{sd_asd_project, JetMat4, Mat4, MetricJet, TwoForm};
use crate::jets::{Jet, NVARS};
use crate::tensor::{JetTensor, RealTensor};
use crate::{require_order, Error};

/// Jets of `J^a_b` at a point.
pub fn complex_structure_jets(
    def: &MetricDefinition,
    point: [f64; NVARS],
    order: usize,
) -> Result<JetMat4, Error> {
    let j = def
        .j
        .as_ref()
        .ok_or_else(|| Error::ComplexStructure(format!("{} declares no J", def.name)))?;
    let vars = variable_jets(&point, order)?;
    let mut out: JetMat4 = std::array::from_fn(|_| std::array::from_fn(|_| Jet::zero(order)));
    for a in 0..NVARS {
        for b in 0..NVARS {
            out[a][b] = j[a][b].eval_with(&vars, &def.params, order)?;
        }
    }
    Ok(out)
}

fn values(m: &JetMat4) -> Mat4 {
    std::array::from_fn(|a| std::array::from_fn(|b| m[a][b].value()))
}

/// `J*T_ab = J^c_a J^d_b T_cd`.
pub fn j_pullback(j: &Mat4, t: &Mat4) -> Mat4 {
    std::array::from_fn(|a| {
        std::array::from_fn(|b| {
            let mut acc = 0.0;
            for c in 0..NVARS {
                for d in 0..NVARS {
                    acc += j[c][a] * j[d][b] * t[c][d];
                }
            }
            acc
        })
    })
}

/// `T(J·,·)`: `(T∘J)_ab = T_cb J^c_a`.
pub fn compose_j(j: &Mat4, t: &Mat4) -> Mat4 {
    std::array::from_fn(|a| std::array::from_fn(|b| (0..NVARS).map(|c| t[c][b] * j[c][a]).sum()))
}

/// Checks `J² = −1` and `g(J·,J·) = g` to `tol`.
pub fn check_algebraic(g: &Mat4, j: &Mat4, tol: f64) -> Result<(), Error> {
    let gscale = g.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let gjj = j_pullback(j, g);
    for a in 0..NVARS {
        for b in 0..NVARS {
            let jj: f64 = (0..NVARS).map(|c| j[a][c] * j[c][b]).sum();
            let target = if a == b { -1.0 } else { 0.0 };
            if (jj - target).abs() > tol {
                return Err(Error::ComplexStructure(format!(
                    "J^2 differs from -1 by {:e}",
                    (jj - target).abs()
                )));
            }
            if (gjj[a][b] - g[a][b]).abs() > tol * gscale {
                return Err(Error::ComplexStructure(format!(
                    "g(J.,J.) differs from g by {:e}",
                    (gjj[a][b] - g[a][b]).abs()
                )));
            }
        }
    }
    Ok(())
}

/// Max over `a, b, c` of `|∇_a J^b_c|`.
pub fn kahler_residual(c: &CurvatureJets, j: &JetMat4) -> Result<f64, Error> {
    require_order("Kähler residual", 1, j[0][0].order())?;
    let gamma = c.gamma.values();
    let jv = values(j);
    let mut worst = 0.0f64;
    for a in 0..NVARS {
        for b in 0..NVARS {
            for cc in 0..NVARS {
                let mut v = j[b][cc].diff(a).value();
                for e in 0..NVARS {
                    v += gamma.at(&[b, a, e]) * jv[e][cc] - gamma.at(&[e, a, cc]) * jv[b][e];
                }
                worst = worst.max(v.abs());
            }
        }
    }
    Ok(worst)
}

/// Kähler quantities at one point.
#[derive(Debug, Clone)]
pub struct KahlerPointData {
    pub j: Mat4,
    pub omega: TwoForm,
    pub rho: TwoForm,
    pub rho0: TwoForm,
    pub s: f64,
    /// `∂_a s`.
    pub ds: [f64; NVARS],
    /// `ξ^a = J^a_b ∇^b s`.
    pub xi: [f64; NVARS],
    pub hess_s: Mat4,
    pub laplacian_s: f64,
}

impl KahlerPointData {
    pub fn new(c: &CurvatureJets, j: &JetMat4) -> Result<Self, Error> {
        require_order("Kähler point data", 4, c.order())?;
        let g = c.metric.g_values();
        let gi = c.metric.g_inv_values();
        let jv = values(j);
        check_algebraic(&g, &jv, 1e-10)?;
        let omega = TwoForm::antisymmetrize(&compose_j(&jv, &g));
        let ricci = c.ricci.values().as_matrix();
        let rho = TwoForm::antisymmetrize(&compose_j(&jv, &ricci));
        let s = c.scalar.value();
        let rho0 = rho.sub(&omega.scale(s / 4.0));
        let ds: [f64; NVARS] = std::array::from_fn(|i| c.scalar.diff(i).value());
        let grad: [f64; NVARS] = std::array::from_fn(|a| (0..NVARS).map(|b| gi[a][b] * ds[b]).sum());
        let xi = std::array::from_fn(|a| (0..NVARS).map(|b| jv[a][b] * grad[b]).sum());
        let hess_s = c.hessian(&c.scalar)?.values().as_matrix();
        let laplacian_s = -(0..NVARS)
            .flat_map(|a| (0..NVARS).map(move |b| (a, b)))
            .map(|(a, b)| gi[a][b] * hess_s[a][b])
            .sum::<f64>();
        Ok(KahlerPointData {
            j: jv,
            omega,
            rho,
            rho0,
            s,
            ds,
            xi,
            hess_s,
            laplacian_s,
        })
    }
}

/// `(s/12)[ω_ab ω_cd − ½(g_ac g_bd − g_ad g_bc) + ½(ω_ac ω_bd − ω_ad ω_bc)]`,
/// the closed form of `W₊` on a Kähler surface, all indices lowered.
pub fn wplus_kahler_form(g: &Mat4, omega: &TwoForm, s: f64) -> RealTensor {
    let w = &omega.0;
    RealTensor::from_fn(4, |i| {
        let (a, b, c, d) = (i[0], i[1], i[2], i[3]);
        s / 12.0
            * (w[a][b] * w[c][d] - 0.5 * (g[a][c] * g[b][d] - g[a][d] * g[b][c])
                + 0.5 * (w[a][c] * w[b][d] - w[a][d] * w[b][c]))
    })
}

pub fn wplus_kahler_residual(b: &CurvatureBundle, k: &KahlerPointData) -> f64 {
    wplus_kahler_form(&b.g, &k.omega, b.scalar)
        .sub(&b.weyl_plus)
        .max_abs()
}

/// `| |W₊|² − s²/24 |`.
pub fn sebastian_residual(b: &CurvatureBundle) -> f64 {
    (b.densities.weyl_plus_sq - b.densities.s2_over_24).abs()
}

/// Self-dual part of `ρ̊`; vanishes on a Kähler surface.
pub fn rho0_selfdual_residual(m: &MetricJet, k: &KahlerPointData) -> f64 {
    sd_asd_project(m, &k.rho0).0.max_abs()
}

/// `(s/6) r̊ + ¼ J*Hess(s) + (1/12) Hess(s) + (1/12) Δs g`.
pub fn bach_kahler_formula(b: &CurvatureBundle, k: &KahlerPointData) -> Mat4 {
    let jh = j_pullback(&k.j, &k.hess_s);
    let r0 = b.traceless_ricci.as_matrix();
    std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            b.scalar / 6.0 * r0[i][j]
                + 0.25 * jh[i][j]
                + k.hess_s[i][j] / 12.0
                + b.g[i][j] * k.laplacian_s / 12.0
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BachSplit {
    pub b_plus: Mat4,
    pub b_minus: Mat4,
    /// Max-abs of `B⊞ − (1/6)[s r̊ + 2 Hess₀⊞(s)]`.
    pub plus_residual: f64,
    /// Max-abs of `B⊟ − (1/12)[J*Hess(s) − Hess(s)]`.
    pub minus_residual: f64,
}

fn max_abs_diff(a: &Mat4, b: &Mat4) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..NVARS {
        for j in 0..NVARS {
            worst = worst.max((a[i][j] - b[i][j]).abs());
        }
    }
    worst
}

/// J-invariant and J-anti-invariant parts of `B` against their closed forms.
///
/// The anti-invariant part is `(1/12)(J*Hess s − Hess s)`, the sign that
/// the concrete Kähler Bach formula and the direct computation agree on.
pub fn bach_split(bach: &Mat4, k: &KahlerPointData, b: &CurvatureBundle) -> BachSplit {
    let jb = j_pullback(&k.j, bach);
    let b_plus: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (bach[i][j] + jb[i][j])));
    let b_minus: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| 0.5 * (bach[i][j] - jb[i][j])));
    let h = &k.hess_s;
    let jh = j_pullback(&k.j, h);
    let tr = -k.laplacian_s;
    let r0 = b.traceless_ricci.as_matrix();
    let plus_form: Mat4 = std::array::from_fn(|i| {
        std::array::from_fn(|j| {
            let hess0_plus = 0.5 * (h[i][j] + jh[i][j]) - tr / 4.0 * b.g[i][j];
            (b.scalar * r0[i][j] + 2.0 * hess0_plus) / 6.0
        })
    });
    let minus_form: Mat4 = std::array::from_fn(|i| std::array::from_fn(|j| (jh[i][j] - h[i][j]) / 12.0));
    BachSplit {
        plus_residual: max_abs_diff(&b_plus, &plus_form),
        minus_residual: max_abs_diff(&b_minus, &minus_form),
        b_plus,
        b_minus,
    }
}

/// `|s r̊ + 2 Hess₀(s)|`, zero for Bach-flat Kähler metrics.
pub fn rico_residual(b: &CurvatureBundle, k: &KahlerPointData) -> f64 {
    let r0 = b.traceless_ricci.as_matrix();
    let tr = -k.laplacian_s;
    let t: Mat4 = std::array::from_fn(|i| {
        std::array::from_fn(|j| b.scalar * r0[i][j] + 2.0 * (k.hess_s[i][j] - tr / 4.0 * b.g[i][j]))
    });
    RealTensor::from_matrix(&t).full_norm_sq(&b.g_inv).max(0.0).sqrt()
}

/// Antisymmetry and J-invariance defects of `B(J·,·)`.
pub fn bach_two_form_residual(bach: &BachTensor, k: &KahlerPointData) -> (f64, f64) {
    let beta = compose_j(&k.j, &bach.b);
    let mut asym = 0.0f64;
    for i in 0..NVARS {
        for j in 0..NVARS {
            asym = asym.max((beta[i][j] + beta[j][i]).abs());
        }
    }
    let jb = j_pullback(&k.j, &beta);
    (asym, max_abs_diff(&beta, &jb))
}

/// `ξ^a = J^a_b g^{bc} ∂_c s` as jets, order three below the metric.
pub fn xi_jets(c: &CurvatureJets, j: &JetMat4) -> [Jet; NVARS] {
    let ds = c.scalar.gradient();
    let n = ds[0].order();
    let grad: Vec<Jet> = (0..NVARS)
        .map(|b| {
            let mut acc = Jet::zero(n);
            for cc in 0..NVARS {
                acc.add_product(&c.metric.g_inv[b][cc], &ds[cc]);
            }
            acc
        })
        .collect();
    std::array::from_fn(|a| {
        let mut acc = Jet::zero(n);
        for b in 0..NVARS {
            acc.add_product(&j[a][b], &grad[b]);
        }
        acc
    })
}

pub(crate) fn lower(m: &MetricJet, v: &[Jet; NVARS]) -> JetTensor {
    let n = v[0].order();
    JetTensor::from_fn(1, |i| {
        let mut acc = Jet::zero(n);
        for b in 0..NVARS {
            acc.add_product(&m.g[i[0]][b], &v[b]);
        }
        acc
    })
}

/// Max-abs of `∇_(a ξ_b)` for a jet-valued vector field `ξ^a`.
pub fn killing_residual(c: &CurvatureJets, xi: &[Jet; NVARS]) -> Result<f64, Error> {
    require_order("Killing residual", 1, xi[0].order())?;
    let dxi = lower(&c.metric, xi).covariant_derivative(&c.gamma);
    let mut worst = 0.0f64;
    for a in 0..NVARS {
        for b in 0..NVARS {
            let v = 0.5 * (dxi.at(&[a, b]).value() + dxi.at(&[b, a]).value());
            worst = worst.max(v.abs());
        }
    }
    Ok(worst)
}

/// Killing residual of `ξ = J∇s`.
pub fn extremal_residual(c: &CurvatureJets, j: &JetMat4) -> Result<f64, Error> {
    require_order("extremal residual", 4, c.order())?;
    killing_residual(c, &xi_jets(c, j))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BochnerReport {
    pub residual: f64,
    pub killing_residual: f64,
    pub half_laplacian_norm_sq: f64,
    pub grad_norm_sq: f64,
    pub ricci_xi_xi: f64,
}

/// `½Δ|ξ|² + |∇ξ|² − r(ξ,ξ)` for a jet-valued field of order ≥ 2.
pub fn bochner_residual_jets(c: &CurvatureJets, xi: &[Jet; NVARS]) -> Result<BochnerReport, Error> {
    require_order("Bochner formula", 2, xi[0].order())?;
    let killing = killing_residual(c, xi)?;
    let low = lower(&c.metric, xi);
    let mut norm_sq = Jet::zero(xi[0].order());
    for a in 0..NVARS {
        norm_sq.add_product(low.at(&[a]), &xi[a]);
    }
    let lap = laplacian_jet(&c.metric, &c.gamma, &norm_sq)?.value();
    let dxi = low.covariant_derivative(&c.gamma).values();
    let gi = c.metric.g_inv_values();
    let grad_norm_sq = dxi.full_norm_sq(&gi);
    let r = c.ricci.values();
    let xv: Vec<f64> = xi.iter().map(Jet::value).collect();
    let mut ricci_xi_xi = 0.0;
    for a in 0..NVARS {
        for b in 0..NVARS {
            ricci_xi_xi += r.at(&[a, b]) * xv[a] * xv[b];
        }
    }
    Ok(BochnerReport {
        residual: (0.5 * lap + grad_norm_sq - ricci_xi_xi).abs(),
        killing_residual: killing,
        half_laplacian_norm_sq: 0.5 * lap,
        grad_norm_sq,
        ricci_xi_xi,
    })
}

/// Bochner formula for a vector field given as expressions in the metric's scope.
pub fn bochner_residual(
    def: &MetricDefinition,
    c: &CurvatureJets,
    xi: &[Expr; NVARS],
) -> Result<BochnerReport, Error> {
    let order = c.order();
    let vars = variable_jets(&c.metric.point, order)?;
    let mut jets: [Jet; NVARS] = std::array::from_fn(|_| Jet::zero(order));
    for a in 0..NVARS {
        jets[a] = xi[a].eval_with(&vars, &def.params, order)?;
    }
    bochner_residual_jets(c, &jets)
}

/// `|ω|²` under the 2-form norm; equals 2 for a Kähler form.
pub fn omega_norm_sq(b: &CurvatureBundle, k: &KahlerPointData) -> f64 {
    k.omega.norm_sq(&b.g_inv)
}

/// Norm of `W₊` under the operator convention, for reports.
pub fn weyl_plus_norm(b: &CurvatureBundle) -> f64 {
    curvature_norm_sq(&b.weyl_plus, &b.g_inv).sqrt()
}
