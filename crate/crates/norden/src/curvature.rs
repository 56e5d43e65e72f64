//! Curvature of the Levi-Civita and deformed connections, Ricci and scalar
//! curvatures, the Kähler-tensor predicate, and the parallel-torsion chain.
//!
//! Sign conventions: `R(x,y)z = ∇_x ∇_y z − ∇_y ∇_x z − ∇_{[x,y]} z`,
//! `R(x,y,z,w) = g(R(x,y)z, w)`, `ρ(y,z) = g^{ij} R(e_i,y,z,e_j)`,
//! `τ = g^{ij} ρ(e_i,e_j)`.

use crate::connection::{
    b_connection, canonical_connection, kt_connection, ConnectionKind, DeformedConnection,
};
use crate::error::{NordenError, Result};
use crate::frame::{self, ConnectionCoeffs};
use crate::model::{ChartFrame, FrameModel, NordenStructure};
use crate::tensor::{DenseTensor, LOWER2, LOWER4, ULL};
use crate::tol::Tolerances;

/// A (0,3)-tensor field evaluator used for chart-mode derivatives.
pub type TensorField<'a> = &'a dyn Fn(&[f64]) -> Result<DenseTensor>;

/// Curvature tensor with its contractions.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    /// R(x,y,z,w), slots (x, y, z, w), all lower.
    pub r: DenseTensor,
    /// ρ(y,z) = g^{ij} R(e_i, y, z, e_j).
    pub ricci: DenseTensor,
    /// τ = g^{ij} ρ(e_i, e_j).
    pub scalar: f64,
    pub source: String,
}

fn contractions(r: &DenseTensor, structure: &NordenStructure) -> (DenseTensor, f64) {
    let dim = r.dim();
    let gi = structure.metric_inv();
    let ricci = DenseTensor::from_fn2(dim, LOWER2, |y, z| {
        let mut sum = 0.0;
        for i in 0..dim {
            for j in 0..dim {
                let w = gi.at2(i, j);
                if w != 0.0 {
                    sum += w * r.at4(i, y, z, j);
                }
            }
        }
        sum
    });
    let mut tau = 0.0;
    for y in 0..dim {
        for z in 0..dim {
            tau += gi.at2(y, z) * ricci.at2(y, z);
        }
    }
    (ricci, tau)
}

/// Curvature of a left-invariant connection:
/// `R^l_{ijk} = Γ^m_{jk} Γ^l_{im} − Γ^m_{ik} Γ^l_{jm} − C^m_{ij} Γ^l_{mk}`.
fn curvature_invariant(gamma: &DenseTensor, c: &DenseTensor, structure: &NordenStructure) -> DenseTensor {
    let dim = gamma.dim();
    let g = structure.metric();
    let r_upper = DenseTensor::from_fn4(dim, [crate::tensor::Variance::Upper, crate::tensor::Variance::Lower, crate::tensor::Variance::Lower, crate::tensor::Variance::Lower], |l, i, j, k| {
        let mut sum = 0.0;
        for m in 0..dim {
            sum += gamma.at3(m, j, k) * gamma.at3(l, i, m) - gamma.at3(m, i, k) * gamma.at3(l, j, m)
                - c.at3(m, i, j) * gamma.at3(l, m, k);
        }
        sum
    });
    DenseTensor::from_fn4(dim, LOWER4, |i, j, k, w| {
        (0..dim).map(|l| r_upper.at4(l, i, j, k) * g.at2(l, w)).sum()
    })
}

/// Curvature in a coordinate chart from a connection-coefficient field:
/// `R^l_{ijk} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^m_{jk} Γ^l_{im} − Γ^m_{ik} Γ^l_{jm}`.
/// `gamma_at` evaluates Γ(u) anywhere; partials are central differences.
fn curvature_chart(
    chart: &ChartFrame,
    structure: &NordenStructure,
    gamma_at: &dyn Fn(&[f64]) -> Result<DenseTensor>,
) -> Result<DenseTensor> {
    let dim = chart.dim();
    let h = chart.fd_step;
    let gamma0 = gamma_at(&chart.point)?;
    let mut dgamma = Vec::with_capacity(dim);
    for m in 0..dim {
        let mut up = chart.point.clone();
        up[m] += h;
        let mut dn = chart.point.clone();
        dn[m] -= h;
        dgamma.push(gamma_at(&up)?.sub(&gamma_at(&dn)?)?.scale(0.5 / h));
    }
    let g = structure.metric();
    Ok(DenseTensor::from_fn4(dim, LOWER4, |i, j, k, w| {
        (0..dim)
            .map(|l| {
                let mut v = dgamma[i].at3(l, j, k) - dgamma[j].at3(l, i, k);
                for m in 0..dim {
                    v += gamma0.at3(m, j, k) * gamma0.at3(l, i, m)
                        - gamma0.at3(m, i, k) * gamma0.at3(l, j, m);
                }
                v * g.at2(l, w)
            })
            .sum()
    }))
}

/// Named connections whose coefficient fields can be rebuilt at any chart point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedConnection {
    LeviCivita,
    Canonical,
    BConnection,
    KtConnection,
}

impl NamedConnection {
    pub fn label(&self) -> &'static str {
        match self {
            NamedConnection::LeviCivita => "levi_civita",
            NamedConnection::Canonical => "canonical",
            NamedConnection::BConnection => "b_connection",
            NamedConnection::KtConnection => "kt_connection",
        }
    }
}

/// Γ(u) for a named connection in a chart (the full pointwise pipeline).
pub fn gamma_field_at(chart: &ChartFrame, kind: NamedConnection, u: &[f64]) -> Result<DenseTensor> {
    let s = chart.structure_at(u)?;
    let shifted = ChartFrame { point: u.to_vec(), ..chart.clone() };
    let f = FrameModel::Chart(shifted);
    let base = frame::levi_civita_unchecked(&s, &f)?;
    let gamma = match kind {
        NamedConnection::LeviCivita => base.gamma,
        NamedConnection::Canonical => {
            let nj = frame::nabla_j(&base, &s, &f);
            canonical_connection(&s, &base, &nj, false)?.gamma_prime.gamma
        }
        NamedConnection::BConnection => {
            let nj = frame::nabla_j(&base, &s, &f);
            let fund = frame::fundamental_f(&nj, &s)?;
            b_connection(&fund, &s, &base).gamma_prime.gamma
        }
        NamedConnection::KtConnection => {
            let nj = frame::nabla_j(&base, &s, &f);
            let fund = frame::fundamental_f(&nj, &s)?;
            kt_connection(&fund, &s, &base).gamma_prime.gamma
        }
    };
    Ok(gamma)
}

/// Curvature of an arbitrary coefficient table. In Lie mode any table works;
/// in chart mode the connection must be one of the named kinds so its field
/// can be re-evaluated off the base point.
pub fn curvature(
    gamma: &DenseTensor,
    frame_model: &FrameModel,
    structure: &NordenStructure,
    source: &str,
    chart_kind: Option<NamedConnection>,
) -> Result<CurvatureData> {
    let r = match frame_model {
        FrameModel::LieAlgebra(f) => curvature_invariant(gamma, &f.structure_constants, structure),
        FrameModel::Chart(c) => {
            let kind = chart_kind.ok_or_else(|| {
                NordenError::InvalidStructure(
                    "chart-mode curvature needs a named connection field".into(),
                )
            })?;
            curvature_chart(c, structure, &|u| gamma_field_at(c, kind, u))?
        }
    };
    let (ricci, scalar) = contractions(&r, structure);
    Ok(CurvatureData { r, ricci, scalar, source: source.to_string() })
}

/// Convenience: curvature of the Levi-Civita connection.
pub fn curvature_levi_civita(
    structure: &NordenStructure,
    frame_model: &FrameModel,
    conn: &ConnectionCoeffs,
) -> Result<CurvatureData> {
    curvature(&conn.gamma, frame_model, structure, "levi_civita", Some(NamedConnection::LeviCivita))
}

/// Cyclic sum over the first three slots of a rank-4 tensor.
pub fn cyclic_sum4(t: &DenseTensor) -> DenseTensor {
    let dim = t.dim();
    DenseTensor::from_fn4(dim, LOWER4, |i, j, k, w| {
        t.at4(i, j, k, w) + t.at4(j, k, i, w) + t.at4(k, i, j, w)
    })
}

/// Residuals of the curvature-like and Kähler-tensor properties.
#[derive(Debug, Clone, serde::Serialize)]
pub struct KahlerCheck {
    /// `R(x,y,z,w) = −R(y,x,z,w)`.
    pub antisym_first_pair: f64,
    /// `R(x,y,z,w) = −R(x,y,w,z)`.
    pub antisym_second_pair: f64,
    /// First Bianchi identity: cyclic sum over (x,y,z).
    pub bianchi: f64,
    /// `R(x,y,Jz,Jw) = −R(x,y,z,w)`.
    pub j_invariance: f64,
    pub is_kahler: bool,
}

/// Checks the curvature-like properties plus the Kähler condition
/// `L(x,y,Jz,Jw) = −L(x,y,z,w)`; the verdict requires all residuals below
/// tolerance.
pub fn kahler_tensor_check(r: &DenseTensor, structure: &NordenStructure, tols: &Tolerances) -> KahlerCheck {
    let dim = r.dim();
    let j = structure.complex_structure();
    let mut a1 = 0.0f64;
    let mut a2 = 0.0f64;
    let mut ji = 0.0f64;
    for i in 0..dim {
        for jj in 0..dim {
            for k in 0..dim {
                for w in 0..dim {
                    a1 = a1.max((r.at4(i, jj, k, w) + r.at4(jj, i, k, w)).abs());
                    a2 = a2.max((r.at4(i, jj, k, w) + r.at4(i, jj, w, k)).abs());
                    let mut rjj = 0.0;
                    for c in 0..dim {
                        let cc = j.at2(c, k);
                        if cc == 0.0 {
                            continue;
                        }
                        for d in 0..dim {
                            let cd = j.at2(d, w);
                            if cd != 0.0 {
                                rjj += cc * cd * r.at4(i, jj, c, d);
                            }
                        }
                    }
                    ji = ji.max((rjj + r.at4(i, jj, k, w)).abs());
                }
            }
        }
    }
    let bianchi = cyclic_sum4(r).max_abs();
    let tol = tols.identity(r.max_abs());
    KahlerCheck {
        antisym_first_pair: a1,
        antisym_second_pair: a2,
        bianchi,
        j_invariance: ji,
        is_kahler: a1 <= tol && a2 <= tol && bianchi <= tol && ji <= tol,
    }
}

/// Covariant derivative of a (0,3) tensor belonging to a deformed connection,
/// frame-aware: in chart mode the tensor field is re-evaluated via `field`
/// and differentiated by central differences.
fn cov3_frame(
    conn: &ConnectionCoeffs,
    s3: &DenseTensor,
    frame_model: &FrameModel,
    field: Option<TensorField<'_>>,
) -> Result<DenseTensor> {
    match frame_model {
        FrameModel::LieAlgebra(_) => Ok(frame::cov_deriv3(conn, s3, None)),
        FrameModel::Chart(c) => {
            let f = field.ok_or_else(|| {
                NordenError::InvalidStructure("chart-mode covariant derivative needs a field".into())
            })?;
            let partials = frame::fd_partials3(c, f)?;
            Ok(frame::cov_deriv3(conn, s3, Some(&partials)))
        }
    }
}

/// The (0,3) field of a named deformed connection's torsion / deformation /
/// fundamental tensor at an arbitrary chart point.
pub fn named_tensor_field<'a>(
    chart: &'a ChartFrame,
    kind: NamedConnection,
    which: &'static str,
) -> impl Fn(&[f64]) -> Result<DenseTensor> + 'a {
    move |u: &[f64]| {
        let s = chart.structure_at(u)?;
        let shifted = ChartFrame { point: u.to_vec(), ..chart.clone() };
        let f = FrameModel::Chart(shifted);
        let base = frame::levi_civita_unchecked(&s, &f)?;
        let nj = frame::nabla_j(&base, &s, &f);
        let fund = frame::fundamental_f(&nj, &s)?;
        if which == "F" {
            return Ok(fund.f);
        }
        let dc = match kind {
            NamedConnection::LeviCivita => {
                return Err(NordenError::InvalidStructure("Levi-Civita has no deformation".into()))
            }
            NamedConnection::Canonical => canonical_connection(&s, &base, &nj, false)?,
            NamedConnection::BConnection => b_connection(&fund, &s, &base),
            NamedConnection::KtConnection => kt_connection(&fund, &s, &base),
        };
        match which {
            "Q" => Ok(dc.q_lower),
            "T" => Ok(dc.torsion_lower),
            other => Err(NordenError::InvalidStructure(format!("unknown field `{other}`"))),
        }
    }
}

/// Left side of the torsion form of the first Bianchi identity:
/// `Σ_cyc {(∇′_x T)(y,z,w) + T(T(x,y),z,w)}`, returned as a rank-4 tensor.
/// Its vanishing is equivalent to the curvature of ∇′ being Kählerian, and it
/// equals the cyclic sum of R′ whenever ∇′g = 0.
pub fn bianchi_torsion_residual(
    dc: &DeformedConnection,
    frame_model: &FrameModel,
    structure: &NordenStructure,
) -> Result<DenseTensor> {
    let dim = structure.dim();
    let t = &dc.torsion_lower;
    let chart_kind = named_kind_of(&dc.label);
    let nabla_t = match frame_model {
        FrameModel::LieAlgebra(_) => frame::cov_deriv3(&dc.gamma_prime, t, None),
        FrameModel::Chart(c) => {
            let kind = chart_kind.ok_or_else(|| {
                NordenError::InvalidStructure("chart-mode Bianchi check needs a named connection".into())
            })?;
            let field = named_tensor_field(c, kind, "T");
            cov3_frame(&dc.gamma_prime, t, frame_model, Some(&field))?
        }
    };
    let gi = structure.metric_inv();
    // T(T(x,y), z, w) = T^a_{xy} T(e_a, z, w), with T^a = g^{ab} T(..,..,b)
    let t_vec = DenseTensor::from_fn3(dim, ULL, |a, i, j| {
        (0..dim).map(|b| gi.at2(a, b) * t.at3(i, j, b)).sum()
    });
    let combined = DenseTensor::from_fn4(dim, LOWER4, |i, j, k, w| {
        let mut v = nabla_t.at4(i, j, k, w);
        for a in 0..dim {
            v += t_vec.at3(a, i, j) * t.at3(a, k, w);
        }
        v
    });
    Ok(cyclic_sum4(&combined))
}

pub(crate) fn named_kind_of(label: &ConnectionKind) -> Option<NamedConnection> {
    match label {
        ConnectionKind::Canonical => Some(NamedConnection::Canonical),
        ConnectionKind::BConnection => Some(NamedConnection::BConnection),
        ConnectionKind::KtConnection => Some(NamedConnection::KtConnection),
        ConnectionKind::Custom(_) => None,
    }
}

/// R′ from the deformation route:
/// `R′(x,y,z,w) = R(x,y,z,w) + (∇_x Q)(y,z,w) − (∇_y Q)(x,z,w)
///  − g(Q(x,w),Q(y,z)) + g(Q(y,w),Q(x,z))`,
/// with ∇ the base Levi-Civita connection. Cross-checks the direct curvature
/// of ∇′.
pub fn rprime_via_deformation(
    dc: &DeformedConnection,
    base_conn: &ConnectionCoeffs,
    base_curvature: &CurvatureData,
    frame_model: &FrameModel,
    structure: &NordenStructure,
) -> Result<CurvatureData> {
    let dim = structure.dim();
    let q = &dc.q_lower;
    let nabla_q = match frame_model {
        FrameModel::LieAlgebra(_) => frame::cov_deriv3(base_conn, q, None),
        FrameModel::Chart(c) => {
            let kind = named_kind_of(&dc.label).ok_or_else(|| {
                NordenError::InvalidStructure("chart-mode deformation route needs a named connection".into())
            })?;
            let field = named_tensor_field(c, kind, "Q");
            cov3_frame(base_conn, q, frame_model, Some(&field))?
        }
    };
    let gi = structure.metric_inv();
    let q_vec = DenseTensor::from_fn3(dim, ULL, |a, i, j| {
        (0..dim).map(|b| gi.at2(a, b) * q.at3(i, j, b)).sum()
    });
    let g = structure.metric();
    let r = DenseTensor::from_fn4(dim, LOWER4, |i, j, k, w| {
        let mut v = base_curvature.r.at4(i, j, k, w) + nabla_q.at4(i, j, k, w) - nabla_q.at4(j, i, k, w);
        for a in 0..dim {
            for b in 0..dim {
                let gab = g.at2(a, b);
                if gab != 0.0 {
                    v += gab * (q_vec.at3(b, j, w) * q_vec.at3(a, i, k)
                        - q_vec.at3(b, i, w) * q_vec.at3(a, j, k));
                }
            }
        }
        v
    });
    let (ricci, scalar) = contractions(&r, structure);
    Ok(CurvatureData { r, ricci, scalar, source: format!("{}:deformation_route", dc.label) })
}

/// Ricci tensor from the contracted deformation route:
/// `ρ′(y,z) = ρ(y,z) + g^{ij}(∇_{e_i}Q)(y,z,e_j) + g^{ij} g(Q(y,e_j), Q(e_i,z))`.
pub fn ricci_via_deformation(
    dc: &DeformedConnection,
    base_conn: &ConnectionCoeffs,
    base_curvature: &CurvatureData,
    frame_model: &FrameModel,
    structure: &NordenStructure,
) -> Result<DenseTensor> {
    let dim = structure.dim();
    let q = &dc.q_lower;
    let nabla_q = match frame_model {
        FrameModel::LieAlgebra(_) => frame::cov_deriv3(base_conn, q, None),
        FrameModel::Chart(c) => {
            let kind = named_kind_of(&dc.label).ok_or_else(|| {
                NordenError::InvalidStructure("chart-mode deformation route needs a named connection".into())
            })?;
            let field = named_tensor_field(c, kind, "Q");
            cov3_frame(base_conn, q, frame_model, Some(&field))?
        }
    };
    let gi = structure.metric_inv();
    let g = structure.metric();
    let q_vec = DenseTensor::from_fn3(dim, ULL, |a, i, j| {
        (0..dim).map(|b| gi.at2(a, b) * q.at3(i, j, b)).sum()
    });
    Ok(DenseTensor::from_fn2(dim, LOWER2, |y, z| {
        let mut v = base_curvature.ricci.at2(y, z);
        for i in 0..dim {
            for j in 0..dim {
                let w = gi.at2(i, j);
                if w == 0.0 {
                    continue;
                }
                v += w * nabla_q.at4(i, y, z, j);
                let mut pair = 0.0;
                for a in 0..dim {
                    for b in 0..dim {
                        pair += g.at2(a, b) * q_vec.at3(a, y, j) * q_vec.at3(b, i, z);
                    }
                }
                v += w * pair;
            }
        }
        v
    }))
}

/// Outcome of the scalar-curvature relation on a quasi-Kähler instance.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ScalarRelation {
    pub tau: f64,
    pub tau_prime: f64,
    pub norm_nabla_j: f64,
    /// `|τ′ − τ + ⅛‖∇J‖|`, scaled check; the canonical scalar-curvature
    /// relation is `τ′ = τ − ⅛‖∇J‖`.
    pub residual: f64,
    /// Measured `(τ′ − τ)/‖∇J‖` when ‖∇J‖ is away from zero (else None).
    pub measured_ratio: Option<f64>,
    /// Residual of the deformation-trace route `τ′ = τ + g^{ij}g^{ks} g(Q(e_k,e_j), Q(e_i,e_s))`.
    pub contraction_route_residual: f64,
    /// Residual of the ∇J-form of the same contraction
    /// `(1/16) g^{ij}g^{ks} g(P_{jk}, P_{si})` with
    /// `P_{jk} = (∇_{e_j}J)Je_k − (∇_{Je_j}J)e_k + 2(∇_{e_k}J)Je_j`.
    pub p_route_residual: f64,
    /// Corollary verdict: τ′ = τ iff ‖∇J‖ = 0.
    pub isotropy_equivalence: bool,
}

/// Verifies the scalar-curvature relation `τ′ = τ − ⅛‖∇J‖` for the canonical
/// connection on a quasi-Kähler instance, together with both intermediate
/// contraction routes. Errors on non-quasi-Kähler input.
pub fn scalar_relation_check(
    structure: &NordenStructure,
    frame_model: &FrameModel,
    tols: &Tolerances,
) -> Result<ScalarRelation> {
    let conn = frame::levi_civita(structure, frame_model)?;
    let nj = frame::nabla_j(&conn, structure, frame_model);
    let fund = frame::fundamental_f(&nj, structure)?;
    let flags = frame::class_membership(&fund, structure, &nj, tols);
    if !flags.is_quasi_kahler_w3 {
        return Err(NordenError::NotQuasiKahler);
    }
    let dc = canonical_connection(structure, &conn, &nj, false)?;
    let base_curv = curvature_levi_civita(structure, frame_model, &conn)?;
    let prime_curv = curvature(
        &dc.gamma_prime.gamma,
        frame_model,
        structure,
        "canonical",
        Some(NamedConnection::Canonical),
    )?;
    let tau = base_curv.scalar;
    let tau_prime = prime_curv.scalar;
    let nrm = frame::square_norm_nabla_j(structure, &nj);
    let scale = 1.0 + tau.abs() + tau_prime.abs();
    let residual = (tau_prime - tau + 0.125 * nrm).abs();
    // deformation-trace route
    let dim = structure.dim();
    let gi = structure.metric_inv();
    let g = structure.metric();
    let q_vec = DenseTensor::from_fn3(dim, ULL, |a, i, j| {
        (0..dim).map(|b| gi.at2(a, b) * dc.q_lower.at3(i, j, b)).sum()
    });
    let mut qq = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                for s in 0..dim {
                    let w = gi.at2(i, j) * gi.at2(k, s);
                    if w == 0.0 {
                        continue;
                    }
                    let mut pair = 0.0;
                    for a in 0..dim {
                        for b in 0..dim {
                            pair += g.at2(a, b) * q_vec.at3(a, k, j) * q_vec.at3(b, i, s);
                        }
                    }
                    qq += w * pair;
                }
            }
        }
    }
    let contraction_route_residual = (tau_prime - tau - qq).abs();
    // P-form of the same trace, built from nabla J alone
    let j = structure.complex_structure();
    let p = DenseTensor::from_fn3(dim, ULL, |a, jj, k| {
        let mut v = 0.0;
        for m in 0..dim {
            v += nj.at3(a, jj, m) * j.at2(m, k) - j.at2(m, jj) * nj.at3(a, m, k)
                + 2.0 * nj.at3(a, k, m) * j.at2(m, jj);
        }
        v
    });
    let mut pp = 0.0;
    for i in 0..dim {
        for jj in 0..dim {
            for k in 0..dim {
                for s in 0..dim {
                    let w = gi.at2(i, jj) * gi.at2(k, s);
                    if w == 0.0 {
                        continue;
                    }
                    let mut pair = 0.0;
                    for a in 0..dim {
                        for b in 0..dim {
                            pair += g.at2(a, b) * p.at3(a, jj, k) * p.at3(b, s, i);
                        }
                    }
                    pp += w * pair;
                }
            }
        }
    }
    let p_route_residual = (qq - pp / 16.0).abs();
    let tol = tols.membership(scale);
    let tau_equal = (tau_prime - tau).abs() <= tol;
    let isotropic = nrm.abs() <= tols.membership(1.0 + nj.max_abs() * nj.max_abs());
    let measured_ratio = if nrm.abs() > 1e-6 { Some((tau_prime - tau) / nrm) } else { None };
    Ok(ScalarRelation {
        tau,
        tau_prime,
        norm_nabla_j: nrm,
        residual,
        measured_ratio,
        contraction_route_residual,
        p_route_residual,
        isotropy_equivalence: tau_equal == isotropic,
    })
}

/// Conditional verdict used by the parallel-torsion theorems.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum Conditional {
    Verified { residual: f64 },
    Failed { residual: f64 },
    NotApplicable,
}

/// Outcome of the parallel-torsion chain for a natural connection.
#[derive(Debug, Clone, serde::Serialize)]
pub struct ParallelTorsionReport {
    pub nabla_prime_t: f64,
    pub nabla_prime_q: f64,
    pub nabla_prime_f: f64,
    /// The three parallelism verdicts coincide (T, Q, F parallel together).
    pub verdicts_coincide: bool,
    pub is_parallel: bool,
    /// `R′ = R + Q(T(x,y),z,w) + g(Q(y,z),Q(x,w)) − g(Q(x,z),Q(y,w))`
    /// (only when the torsion is parallel).
    pub parallel_curvature_identity: Conditional,
    /// The expanded form with `g(Q(z,w),T(x,y)) + g((∇_{Jw}J)z, T(x,y))`
    /// (only when the torsion is parallel, quasi-Kähler case).
    pub parallel_curvature_expanded: Conditional,
    /// Isotropy conclusion `‖∇J‖ = 0` under parallel torsion.
    pub isotropy_conclusion: Conditional,
    /// `g^{ij}g^{ks} g(Q(e_j,e_s),Q(e_i,e_k)) = −⅜‖∇J‖` (quasi-Kähler).
    pub contraction_qq: Conditional,
    /// `g^{ij}g^{ks} g((∇_{Je_s}J)e_j, T(e_i,e_k)) = ½‖∇J‖` (quasi-Kähler).
    pub contraction_jt: Conditional,
}

/// Computes ∇′T, ∇′Q, ∇′F for a natural connection, asserts the
/// parallel-or-not verdicts coincide, and when the torsion is parallel also
/// evaluates the parallel-torsion curvature identities and the isotropy
/// conclusion. The two unconditional contraction identities are evaluated on
/// every quasi-Kähler instance.
pub fn parallel_torsion_check(
    dc: &DeformedConnection,
    frame_model: &FrameModel,
    structure: &NordenStructure,
    tols: &Tolerances,
) -> Result<ParallelTorsionReport> {
    let conn = frame::levi_civita(structure, frame_model)?;
    let nj = frame::nabla_j(&conn, structure, frame_model);
    let fund = frame::fundamental_f(&nj, structure)?;
    let chart_kind = named_kind_of(&dc.label);
    let cov = |s3: &DenseTensor, which: &'static str| -> Result<DenseTensor> {
        match frame_model {
            FrameModel::LieAlgebra(_) => Ok(frame::cov_deriv3(&dc.gamma_prime, s3, None)),
            FrameModel::Chart(c) => {
                let kind = chart_kind.ok_or_else(|| {
                    NordenError::InvalidStructure("chart-mode parallelism needs a named connection".into())
                })?;
                let field = named_tensor_field(c, kind, which);
                let partials = frame::fd_partials3(c, field)?;
                Ok(frame::cov_deriv3(&dc.gamma_prime, s3, Some(&partials)))
            }
        }
    };
    let n_t = cov(&dc.torsion_lower, "T")?.max_abs();
    let n_q = cov(&dc.q_lower, "Q")?.max_abs();
    let n_f = cov(&fund.f, "F")?.max_abs();
    let par = |resid: f64, scale: f64| resid <= tols.membership(scale);
    let t_par = par(n_t, dc.torsion_lower.max_abs());
    let q_par = par(n_q, dc.q_lower.max_abs());
    let f_par = par(n_f, fund.f.max_abs());
    let verdicts_coincide = t_par == q_par && q_par == f_par;
    let is_parallel = t_par;

    let dim = structure.dim();
    let g = structure.metric();
    let gi = structure.metric_inv();
    let j = structure.complex_structure();
    let flags = frame::class_membership(&fund, structure, &nj, tols);

    // unconditional contraction identities (quasi-Kahler only)
    let (contraction_qq, contraction_jt) = if flags.is_quasi_kahler_w3 {
        let nrm = frame::square_norm_nabla_j(structure, &nj);
        let q_vec = DenseTensor::from_fn3(dim, ULL, |a, i, jj| {
            (0..dim).map(|b| gi.at2(a, b) * dc.q_lower.at3(i, jj, b)).sum()
        });
        let t_vec = DenseTensor::from_fn3(dim, ULL, |a, i, jj| {
            (0..dim).map(|b| gi.at2(a, b) * dc.torsion_lower.at3(i, jj, b)).sum()
        });
        let mut qq = 0.0;
        let mut jt = 0.0;
        for i in 0..dim {
            for jj in 0..dim {
                for k in 0..dim {
                    for s in 0..dim {
                        let w = gi.at2(i, jj) * gi.at2(k, s);
                        if w == 0.0 {
                            continue;
                        }
                        let mut pair_qq = 0.0;
                        let mut pair_jt = 0.0;
                        for a in 0..dim {
                            for b in 0..dim {
                                let gab = g.at2(a, b);
                                if gab == 0.0 {
                                    continue;
                                }
                                pair_qq += gab * q_vec.at3(a, jj, s) * q_vec.at3(b, i, k);
                                let mut dj = 0.0;
                                for m in 0..dim {
                                    dj += j.at2(m, s) * nj.at3(a, m, jj);
                                }
                                pair_jt += gab * dj * t_vec.at3(b, i, k);
                            }
                        }
                        qq += w * pair_qq;
                        jt += w * pair_jt;
                    }
                }
            }
        }
        let scale = 1.0 + nrm.abs();
        let r_qq = (qq + 0.375 * nrm).abs();
        let r_jt = (jt - 0.5 * nrm).abs();
        let mk = |r: f64| if r <= tols.identity(scale) * 10.0 { Conditional::Verified { residual: r } } else { Conditional::Failed { residual: r } };
        (mk(r_qq), mk(r_jt))
    } else {
        (Conditional::NotApplicable, Conditional::NotApplicable)
    };

    // parallel-torsion theorems, only when the torsion really is parallel
    let (parallel_curvature_identity, parallel_curvature_expanded, isotropy_conclusion) = if is_parallel {
        let base_curv = curvature_levi_civita(structure, frame_model, &conn)?;
        let direct = curvature(
            &dc.gamma_prime.gamma,
            frame_model,
            structure,
            "prime",
            chart_kind,
        )?;
        let q = &dc.q_lower;
        let t = &dc.torsion_lower;
        let q_vec = DenseTensor::from_fn3(dim, ULL, |a, i, jj| {
            (0..dim).map(|b| gi.at2(a, b) * q.at3(i, jj, b)).sum()
        });
        let t_vec = DenseTensor::from_fn3(dim, ULL, |a, i, jj| {
            (0..dim).map(|b| gi.at2(a, b) * t.at3(i, jj, b)).sum()
        });
        let lemma = DenseTensor::from_fn4(dim, LOWER4, |x, y, z, w| {
            let mut v = base_curv.r.at4(x, y, z, w);
            for a in 0..dim {
                v += t_vec.at3(a, x, y) * q.at3(a, z, w);
            }
            for a in 0..dim {
                for b in 0..dim {
                    let gab = g.at2(a, b);
                    if gab != 0.0 {
                        v += gab
                            * (q_vec.at3(a, y, z) * q_vec.at3(b, x, w)
                                - q_vec.at3(a, x, z) * q_vec.at3(b, y, w));
                    }
                }
            }
            v
        });
        let r_lemma = lemma.residual(&direct.r)?;
        let expanded = DenseTensor::from_fn4(dim, LOWER4, |x, y, z, w| {
            let mut v = base_curv.r.at4(x, y, z, w);
            for a in 0..dim {
                for b in 0..dim {
                    let gab = g.at2(a, b);
                    if gab != 0.0 {
                        v += gab
                            * (q_vec.at3(a, y, z) * q_vec.at3(b, x, w)
                                - q_vec.at3(a, x, z) * q_vec.at3(b, y, w)
                                + q_vec.at3(a, z, w) * t_vec.at3(b, x, y));
                        let mut djw = 0.0;
                        for m in 0..dim {
                            djw += j.at2(m, w) * nj.at3(a, m, z);
                        }
                        v += gab * djw * t_vec.at3(b, x, y);
                    }
                }
            }
            v
        });
        let r_exp = expanded.residual(&direct.r)?;
        let nrm = frame::square_norm_nabla_j(structure, &nj);
        let scale = 1.0 + direct.r.max_abs();
        let mk = |r: f64| if r <= tols.identity(scale) * 10.0 { Conditional::Verified { residual: r } } else { Conditional::Failed { residual: r } };
        let iso_res = nrm.abs();
        let iso = if iso_res <= tols.membership(1.0 + nj.max_abs() * nj.max_abs()) {
            Conditional::Verified { residual: iso_res }
        } else {
            Conditional::Failed { residual: iso_res }
        };
        let expanded_check = if flags.is_quasi_kahler_w3 { mk(r_exp) } else { Conditional::NotApplicable };
        (mk(r_lemma), expanded_check, iso)
    } else {
        (Conditional::NotApplicable, Conditional::NotApplicable, Conditional::NotApplicable)
    };

    Ok(ParallelTorsionReport {
        nabla_prime_t: n_t,
        nabla_prime_q: n_q,
        nabla_prime_f: n_f,
        verdicts_coincide,
        is_parallel,
        parallel_curvature_identity,
        parallel_curvature_expanded,
        isotropy_conclusion,
        contraction_qq,
        contraction_jt,
    })
}

/// Residual of the inner-product identity that holds when the canonical
/// connection has Kähler curvature:
/// `g((∇_x J)Jz + (∇_{Jx}J)z, (∇_{Jy}J)w − (∇_y J)Jw) = 0`.
pub fn kahler_torsion_orthogonality_residual(structure: &NordenStructure, nabla_j: &DenseTensor) -> f64 {
    let dim = structure.dim();
    let g = structure.metric();
    let j = structure.complex_structure();
    let mut left = DenseTensor::zeros(dim, &ULL).expect("even dim");
    let mut right = DenseTensor::zeros(dim, &ULL).expect("even dim");
    for a in 0..dim {
        for i in 0..dim {
            for k in 0..dim {
                let mut l = 0.0;
                let mut r = 0.0;
                for m in 0..dim {
                    l += nabla_j.at3(a, i, m) * j.at2(m, k) + j.at2(m, i) * nabla_j.at3(a, m, k);
                    r += j.at2(m, i) * nabla_j.at3(a, m, k) - nabla_j.at3(a, i, m) * j.at2(m, k);
                }
                left.set(&[a, i, k], l);
                right.set(&[a, i, k], r);
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..dim {
        for k in 0..dim {
            for y in 0..dim {
                for w in 0..dim {
                    let mut sum = 0.0;
                    for a in 0..dim {
                        for b in 0..dim {
                            let gab = g.at2(a, b);
                            if gab != 0.0 {
                                sum += gab * left.at3(a, i, k) * right.at3(b, y, w);
                            }
                        }
                    }
                    worst = worst.max(sum.abs());
                }
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge;
    use crate::frame::{levi_civita, nabla_j as nabla_j_of};

    #[test]
    fn flat_model_curvature_vanishes() {
        let (s, f) = forge::flat_model(2).unwrap();
        let conn = levi_civita(&s, &f).unwrap();
        let curv = curvature_levi_civita(&s, &f, &conn).unwrap();
        assert_eq!(curv.r.max_abs(), 0.0);
        assert_eq!(curv.ricci.max_abs(), 0.0);
        assert_eq!(curv.scalar, 0.0);
        let check = kahler_tensor_check(&curv.r, &s, &Tolerances::default());
        assert!(check.is_kahler); // the zero tensor is a Kahler tensor
    }

    #[test]
    fn levi_civita_bianchi_and_antisymmetries() {
        let (s, f) = forge::quasi_kahler_search(2, 3, 100).unwrap();
        let conn = levi_civita(&s, &f).unwrap();
        let curv = curvature_levi_civita(&s, &f, &conn).unwrap();
        let scale = 1.0 + curv.r.max_abs();
        let check = kahler_tensor_check(&curv.r, &s, &Tolerances::default());
        assert!(check.antisym_first_pair < 1e-9 * scale);
        assert!(check.antisym_second_pair < 1e-9 * scale);
        assert!(check.bianchi < 1e-9 * scale, "torsion-free first Bianchi");
        // negative control: the Levi-Civita curvature of a non-Kahler W3
        // instance is not J-invariant
        assert!(check.j_invariance > 1e-3);
        assert!(!check.is_kahler);
    }

    #[test]
    fn canonical_curvature_is_j_invariant() {
        let (s, f) = forge::quasi_kahler_search(2, 5, 100).unwrap();
        let conn = levi_civita(&s, &f).unwrap();
        let nj = nabla_j_of(&conn, &s, &f);
        let dc = crate::connection::canonical_connection(&s, &conn, &nj, false).unwrap();
        let curv = curvature(&dc.gamma_prime.gamma, &f, &s, "canonical", None).unwrap();
        let scale = 1.0 + curv.r.max_abs();
        let check = kahler_tensor_check(&curv.r, &s, &Tolerances::default());
        assert!(check.antisym_first_pair < 1e-9 * scale);
        assert!(check.antisym_second_pair < 1e-9 * scale);
        assert!(check.j_invariance < 1e-9 * scale, "nabla' J = 0 forces J-invariance");
    }

    #[test]
    fn deformation_route_matches_direct_curvature() {
        let (s, f) = forge::quasi_kahler_search(2, 3, 100).unwrap();
        let conn = levi_civita(&s, &f).unwrap();
        let nj = nabla_j_of(&conn, &s, &f);
        let dc = crate::connection::canonical_connection(&s, &conn, &nj, false).unwrap();
        let base = curvature_levi_civita(&s, &f, &conn).unwrap();
        let direct = curvature(&dc.gamma_prime.gamma, &f, &s, "canonical", None).unwrap();
        let via_q = rprime_via_deformation(&dc, &conn, &base, &f, &s).unwrap();
        let scale = 1.0 + direct.r.max_abs();
        assert!(via_q.r.residual(&direct.r).unwrap() < 1e-9 * scale);
        // Q = 0 gives R' = R
        let zero_q = DenseTensor::zeros(s.dim(), &crate::tensor::LOWER3).unwrap();
        let lc =
            DeformedConnection::from_q(ConnectionKind::Custom("lc".into()), &s, &conn, zero_q);
        let same = rprime_via_deformation(&lc, &conn, &base, &f, &s).unwrap();
        assert!(same.r.residual(&base.r).unwrap() < 1e-12 * scale);
        // Ricci route
        let rho = ricci_via_deformation(&dc, &conn, &base, &f, &s).unwrap();
        assert!(rho.residual(&direct.ricci).unwrap() < 1e-9 * scale);
    }

    #[test]
    fn bianchi_residual_equals_cyclic_rprime() {
        let (s, f) = forge::quasi_kahler_search(2, 7, 100).unwrap();
        let conn = levi_civita(&s, &f).unwrap();
        let nj = nabla_j_of(&conn, &s, &f);
        let dc = crate::connection::canonical_connection(&s, &conn, &nj, false).unwrap();
        let lhs = bianchi_torsion_residual(&dc, &f, &s).unwrap();
        let direct = curvature(&dc.gamma_prime.gamma, &f, &s, "canonical", None).unwrap();
        let srp = cyclic_sum4(&direct.r);
        assert!(lhs.residual(&srp).unwrap() < 1e-9 * (1.0 + srp.max_abs()));
    }

    #[test]
    fn scalar_relation_on_quasi_kahler() {
        let (s, f) = forge::quasi_kahler_search(2, 3, 100).unwrap();
        let rel = scalar_relation_check(&s, &f, &Tolerances::default()).unwrap();
        let scale = 1.0 + rel.tau.abs() + rel.tau_prime.abs();
        assert!(rel.residual <= 1e-8 * scale, "{rel:?}");
        assert!(rel.contraction_route_residual <= 1e-9 * scale);
        assert!(rel.p_route_residual <= 1e-9 * scale);
        if let Some(ratio) = rel.measured_ratio {
            assert!((ratio + 0.125).abs() < 1e-9);
        }
        assert!(rel.isotropy_equivalence);
    }

    #[test]
    fn scalar_relation_rejects_non_w3() {
        let (s, f) = forge::random_norden(2, 5, 100).unwrap();
        let err = scalar_relation_check(&s, &f, &Tolerances::default()).unwrap_err();
        assert_eq!(err.to_string(), "quasi-Kahler form requires class W3");
    }

    #[test]
    fn isotropic_instance_has_equal_scalars() {
        let (s, f) = forge::isotropic_search(2, 11, 200).unwrap().instance.expect("isotropic instance");
        let rel = scalar_relation_check(&s, &f, &Tolerances::default()).unwrap();
        assert!(rel.norm_nabla_j.abs() < 1e-8);
        assert!((rel.tau - rel.tau_prime).abs() < 1e-8 * (1.0 + rel.tau.abs()));
        assert!(rel.isotropy_equivalence);
    }

    #[test]
    fn parallel_torsion_generic_and_flat() {
        let tols = Tolerances::default();
        // flat: T = 0 is trivially parallel, all identities collapse to 0 = 0
        let (s, f) = forge::flat_model(2).unwrap();
        let conn = levi_civita(&s, &f).unwrap();
        let nj = nabla_j_of(&conn, &s, &f);
        let dc = crate::connection::canonical_connection(&s, &conn, &nj, false).unwrap();
        let rep = parallel_torsion_check(&dc, &f, &s, &tols).unwrap();
        assert!(rep.is_parallel && rep.verdicts_coincide);
        assert!(matches!(rep.parallel_curvature_identity, Conditional::Verified { .. }));
        assert!(matches!(rep.isotropy_conclusion, Conditional::Verified { .. }));
        // generic quasi-Kahler: not parallel, but verdicts coincide and the
        // unconditional contraction identities hold
        let (s, f) = forge::quasi_kahler_search(2, 3, 100).unwrap();
        let conn = levi_civita(&s, &f).unwrap();
        let nj = nabla_j_of(&conn, &s, &f);
        let dc = crate::connection::canonical_connection(&s, &conn, &nj, false).unwrap();
        let rep = parallel_torsion_check(&dc, &f, &s, &tols).unwrap();
        assert!(!rep.is_parallel);
        assert!(rep.verdicts_coincide, "{rep:?}");
        assert!(matches!(rep.contraction_qq, Conditional::Verified { .. }), "{rep:?}");
        assert!(matches!(rep.contraction_jt, Conditional::Verified { .. }), "{rep:?}");
        assert!(matches!(rep.parallel_curvature_identity, Conditional::NotApplicable));
    }

    #[test]
    fn kahler_orthogonality_trivial_on_flat() {
        let (s, f) = forge::flat_model(3).unwrap();
        let conn = levi_civita(&s, &f).unwrap();
        let nj = nabla_j_of(&conn, &s, &f);
        assert_eq!(kahler_torsion_orthogonality_residual(&s, &nj), 0.0);
    }
}
