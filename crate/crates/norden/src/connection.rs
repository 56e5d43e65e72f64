//! Natural connections: the deformation tensor Q, torsion T, the four
//! torsion-space projections, the potential Φ, and the three named
//! connections (canonical, B, KT).
//!
//! A linear connection ∇′ = ∇ + Q is *natural* when ∇′J = ∇′g = 0,
//! equivalently when its (0,3) deformation tensor satisfies
//! `F(x,y,z) = Q(x,y,Jz) − Q(x,Jy,z)` and `Q(x,y,z) = −Q(x,z,y)`.
//! The canonical connection is the unique natural connection whose torsion
//! has vanishing p₁ and p₄ projections.

use crate::error::{NordenError, Result};
use crate::frame::{self, ConnectionCoeffs, FundamentalTensor};
use crate::model::{FrameModel, NordenStructure};
use crate::tensor::{DenseTensor, LOWER3};
use crate::tol::Tolerances;

/// Which deformed connection a coefficient table describes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ConnectionKind {
    Canonical,
    BConnection,
    KtConnection,
    Custom(String),
}

impl std::fmt::Display for ConnectionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConnectionKind::Canonical => write!(f, "canonical"),
            ConnectionKind::BConnection => write!(f, "b_connection"),
            ConnectionKind::KtConnection => write!(f, "kt_connection"),
            ConnectionKind::Custom(s) => write!(f, "custom:{s}"),
        }
    }
}

/// A connection ∇′ = ∇ + Q together with its deformation and torsion tensors.
#[derive(Debug, Clone)]
pub struct DeformedConnection {
    pub label: ConnectionKind,
    /// Coefficients of ∇′ in the frame.
    pub gamma_prime: ConnectionCoeffs,
    /// Q(x,y,z) = g(Q(x,y), z), slots (x, y, z).
    pub q_lower: DenseTensor,
    /// T(x,y,z) = g(T(x,y), z) = Q(x,y,z) − Q(y,x,z).
    pub torsion_lower: DenseTensor,
}

impl DeformedConnection {
    /// Builds ∇′ = ∇ + Q from a (0,3) deformation tensor.
    pub fn from_q(
        label: ConnectionKind,
        structure: &NordenStructure,
        base: &ConnectionCoeffs,
        q_lower: DenseTensor,
    ) -> Self {
        let dim = structure.dim();
        let gi = structure.metric_inv();
        let gamma = DenseTensor::from_fn3(dim, crate::tensor::ULL, |l, i, j| {
            base.gamma.at3(l, i, j) + (0..dim).map(|k| gi.at2(l, k) * q_lower.at3(i, j, k)).sum::<f64>()
        });
        let torsion_lower =
            DenseTensor::from_fn3(dim, LOWER3, |i, j, k| q_lower.at3(i, j, k) - q_lower.at3(j, i, k));
        DeformedConnection {
            label,
            gamma_prime: ConnectionCoeffs { gamma, metric_compatible: false, torsion_free: false },
            q_lower,
            torsion_lower,
        }
    }
}

/// The potential Φ(x,y,z) = ½{F(Jz,x,y) − F(x,y,Jz) − F(y,Jz,x)}.
///
/// On quasi-Kähler structures this reduces to Φ(x,y,z) = F(Jz,x,y). The
/// definitional route [`phi_definitional`] (difference of the Levi-Civita
/// connections of the associated and original metrics) agrees with this
/// formula on every Norden structure.
pub fn phi_tensor(fundamental: &FundamentalTensor, structure: &NordenStructure) -> DenseTensor {
    let f = &fundamental.f;
    let dim = f.dim();
    let j = structure.complex_structure();
    DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        let mut sum = 0.0;
        for m in 0..dim {
            sum += j.at2(m, k) * (f.at3(m, i, jj) - f.at3(i, jj, m) - f.at3(jj, m, i));
        }
        0.5 * sum
    })
}

/// Definitional route for Φ: `Φ(x,y,z) = g(∇̃_x y − ∇_x y, z)` where ∇̃ is the
/// Levi-Civita connection of the associated metric g̃.
pub fn phi_definitional(structure: &NordenStructure, frame: &FrameModel) -> Result<DenseTensor> {
    let g = structure.metric();
    let gt = structure.assoc_metric();
    let gt_inv = crate::linalg::invert(gt)?;
    let (gamma, gamma_t) = match frame {
        FrameModel::LieAlgebra(f) => {
            let c = &f.structure_constants;
            (frame::koszul(g, structure.metric_inv(), c), frame::koszul(gt, &gt_inv, c))
        }
        FrameModel::Chart(c) => {
            let dg = c.metric_partials_at(&c.point);
            let dj = c.j_partials_at(&c.point);
            let dim = c.dim();
            // exact partials of the associated metric: d(gJ) = dg.J + g.dJ
            let g0 = c.metric_at(&c.point);
            let j0 = c.j_at(&c.point);
            let dgt: Vec<DenseTensor> = (0..dim)
                .map(|m| {
                    DenseTensor::from_fn2(dim, crate::tensor::LOWER2, |i, jj| {
                        (0..dim)
                            .map(|a| dg[m].at2(i, a) * j0.at2(a, jj) + g0.at2(i, a) * dj[m].at2(a, jj))
                            .sum()
                    })
                })
                .collect();
            (frame::christoffel(structure.metric_inv(), &dg), frame::christoffel(&gt_inv, &dgt))
        }
    };
    let dim = structure.dim();
    Ok(DenseTensor::from_fn3(dim, LOWER3, |i, j, k| {
        (0..dim)
            .map(|l| (gamma_t.gamma.at3(l, i, j) - gamma.gamma.at3(l, i, j)) * g.at2(l, k))
            .sum()
    }))
}

fn apply_j_slot(t: &DenseTensor, j: &DenseTensor, slots: (bool, bool, bool)) -> DenseTensor {
    let dim = t.dim();
    DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        let mut sum = 0.0;
        let ii = if slots.0 { None } else { Some(i) };
        let jjj = if slots.1 { None } else { Some(jj) };
        let kk = if slots.2 { None } else { Some(k) };
        for a in 0..dim {
            if let Some(x) = ii {
                if a != x {
                    continue;
                }
            }
            let ca = if slots.0 { j.at2(a, i) } else { 1.0 };
            if ca == 0.0 {
                continue;
            }
            for b in 0..dim {
                if let Some(x) = jjj {
                    if b != x {
                        continue;
                    }
                }
                let cb = if slots.1 { j.at2(b, jj) } else { 1.0 };
                if cb == 0.0 {
                    continue;
                }
                for c in 0..dim {
                    if let Some(x) = kk {
                        if c != x {
                            continue;
                        }
                    }
                    let cc = if slots.2 { j.at2(c, k) } else { 1.0 };
                    if cc == 0.0 {
                        continue;
                    }
                    sum += ca * cb * cc * t.at3(a, b, c);
                }
            }
        }
        sum
    })
}

/// General-form canonical deformation:
/// `Q(x,y,z) = ¼{2Φ(x,y,z) − Φ(z,x,y) − Φ(Jz,x,Jy)}`,
/// valid on every Norden structure.
pub fn q_canonical_general(phi: &DenseTensor, structure: &NordenStructure) -> DenseTensor {
    let dim = phi.dim();
    let j = structure.complex_structure();
    let phi_jz_x_jy = DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        let mut sum = 0.0;
        for a in 0..dim {
            let ca = j.at2(a, k);
            if ca == 0.0 {
                continue;
            }
            for b in 0..dim {
                let cb = j.at2(b, jj);
                if cb != 0.0 {
                    sum += ca * cb * phi.at3(a, i, b);
                }
            }
        }
        sum
    });
    DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        0.25 * (2.0 * phi.at3(i, jj, k) - phi.at3(k, i, jj) - phi_jz_x_jy.at3(i, jj, k))
    })
}

/// Quasi-Kähler form of the canonical deformation:
/// `Q(x,y,z) = ¼{F(y,Jx,z) − F(Jy,x,z) + 2 F(x,Jy,z)}` (W₃ instances only).
pub fn q_canonical_quasi_kahler(fundamental: &FundamentalTensor, structure: &NordenStructure) -> DenseTensor {
    let f = &fundamental.f;
    let dim = f.dim();
    let j = structure.complex_structure();
    DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        let mut sum = 0.0;
        for m in 0..dim {
            sum += f.at3(jj, m, k) * j.at2(m, i) - j.at2(m, jj) * f.at3(m, i, k)
                + 2.0 * f.at3(i, m, k) * j.at2(m, jj);
        }
        0.25 * sum
    })
}

/// The canonical connection, built through both routes.
///
/// The general route (any Norden structure) deforms by
/// `¼{2Φ(x,y,z) − Φ(z,x,y) − Φ(Jz,x,Jy)}`. On quasi-Kähler instances the
/// direct F-form `¼{F(y,Jx,z) − F(Jy,x,z) + 2F(x,Jy,z)}` agrees; requesting
/// `quasi_kahler_form = true` on a non-W₃ instance is an error.
pub fn canonical_connection(
    structure: &NordenStructure,
    conn: &ConnectionCoeffs,
    nabla_j: &DenseTensor,
    quasi_kahler_form: bool,
) -> Result<DeformedConnection> {
    let fundamental = frame::fundamental_f(nabla_j, structure)?;
    let q = if quasi_kahler_form {
        let flags = frame::class_membership(&fundamental, structure, nabla_j, &Tolerances::default());
        if !flags.is_quasi_kahler_w3 {
            return Err(NordenError::NotQuasiKahler);
        }
        q_canonical_quasi_kahler(&fundamental, structure)
    } else {
        let phi = phi_tensor(&fundamental, structure);
        q_canonical_general(&phi, structure)
    };
    Ok(DeformedConnection::from_q(ConnectionKind::Canonical, structure, conn, q))
}

/// B-connection deformation `Q(x,y,z) = ½ F(x,Jy,z)`.
pub fn b_connection(
    fundamental: &FundamentalTensor,
    structure: &NordenStructure,
    conn: &ConnectionCoeffs,
) -> DeformedConnection {
    let f = &fundamental.f;
    let dim = f.dim();
    let j = structure.complex_structure();
    let q = DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        0.5 * (0..dim).map(|m| f.at3(i, m, k) * j.at2(m, jj)).sum::<f64>()
    });
    DeformedConnection::from_q(ConnectionKind::BConnection, structure, conn, q)
}

/// KT-connection deformation `Q(x,y,z) = −¼ Σ_cyc F(x,y,Jz)`; its torsion is
/// totally skew-symmetric on quasi-Kähler instances.
pub fn kt_connection(
    fundamental: &FundamentalTensor,
    structure: &NordenStructure,
    conn: &ConnectionCoeffs,
) -> DeformedConnection {
    let f = &fundamental.f;
    let dim = f.dim();
    let j = structure.complex_structure();
    let fj = DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        (0..dim).map(|m| f.at3(i, jj, m) * j.at2(m, k)).sum()
    });
    let q = frame::cyclic_sum3(&fj).scale(-0.25);
    DeformedConnection::from_q(ConnectionKind::KtConnection, structure, conn, q)
}

/// The four orthogonal components of an antisymmetric (0,3) torsion tensor.
#[derive(Debug, Clone)]
pub struct TorsionProjections {
    pub p1: DenseTensor,
    pub p2: DenseTensor,
    pub p3: DenseTensor,
    pub p4: DenseTensor,
}

/// Projects a torsion tensor (antisymmetric in its first two slots) onto the
/// four invariant subspaces of the torsion space.
pub fn torsion_projections(t: &DenseTensor, structure: &NordenStructure) -> Result<TorsionProjections> {
    let dim = t.dim();
    let mut anty = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                anty = anty.max((t.at3(i, j, k) + t.at3(j, i, k)).abs());
            }
        }
    }
    if anty > 1e-9 * (1.0 + t.max_abs()) {
        return Err(NordenError::NonAntisymmetricTorsion(anty));
    }
    let j = structure.complex_structure();
    let t_jj_z = apply_j_slot(t, j, (true, true, false));
    let t_jz_j = apply_j_slot(t, j, (true, false, true));
    let t_z_jj = apply_j_slot(t, j, (false, true, true));
    let p1 = DenseTensor::from_fn3(dim, LOWER3, |a, b, c| {
        0.25 * (t.at3(a, b, c) - t_jj_z.at3(a, b, c) - t_jz_j.at3(a, b, c) - t_z_jj.at3(a, b, c))
    });
    let p2 = DenseTensor::from_fn3(dim, LOWER3, |a, b, c| {
        0.25 * (t.at3(a, b, c) - t_jj_z.at3(a, b, c) + t_jz_j.at3(a, b, c) + t_z_jj.at3(a, b, c))
    });
    // the longer 1/8 formulas for p3 and p4
    let jm = j;
    let tj = |sl: (bool, bool, bool)| apply_j_slot(t, jm, sl);
    let t_jyzjx = {
        // T(Jy, z, Jx) read at slots (x,y,z) = (i,jj,k)
        let dim = t.dim();
        DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
            let mut sum = 0.0;
            for b in 0..dim {
                let cb = jm.at2(b, jj);
                if cb == 0.0 {
                    continue;
                }
                for a in 0..dim {
                    let ca = jm.at2(a, i);
                    if ca != 0.0 {
                        sum += cb * ca * t.at3(b, k, a);
                    }
                }
            }
            sum
        })
    };
    let t_zjxjy = DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        let mut sum = 0.0;
        for a in 0..dim {
            let ca = jm.at2(a, i);
            if ca == 0.0 {
                continue;
            }
            for b in 0..dim {
                let cb = jm.at2(b, jj);
                if cb != 0.0 {
                    sum += ca * cb * t.at3(k, a, b);
                }
            }
        }
        sum
    });
    let t_jyjzx = DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        let mut sum = 0.0;
        for b in 0..dim {
            let cb = jm.at2(b, jj);
            if cb == 0.0 {
                continue;
            }
            for c in 0..dim {
                let cc = jm.at2(c, k);
                if cc != 0.0 {
                    sum += cb * cc * t.at3(b, c, i);
                }
            }
        }
        sum
    });
    let t_jzjxy = DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        let mut sum = 0.0;
        for c in 0..dim {
            let cc = jm.at2(c, k);
            if cc == 0.0 {
                continue;
            }
            for a in 0..dim {
                let ca = jm.at2(a, i);
                if ca != 0.0 {
                    sum += cc * ca * t.at3(c, a, jj);
                }
            }
        }
        sum
    });
    let t_yjzjx = DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        let mut sum = 0.0;
        for c in 0..dim {
            let cc = jm.at2(c, k);
            if cc == 0.0 {
                continue;
            }
            for a in 0..dim {
                let ca = jm.at2(a, i);
                if ca != 0.0 {
                    sum += cc * ca * t.at3(jj, c, a);
                }
            }
        }
        sum
    });
    let t_jzxjy = DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        let mut sum = 0.0;
        for c in 0..dim {
            let cc = jm.at2(c, k);
            if cc == 0.0 {
                continue;
            }
            for b in 0..dim {
                let cb = jm.at2(b, jj);
                if cb != 0.0 {
                    sum += cc * cb * t.at3(c, i, b);
                }
            }
        }
        sum
    });
    let t_jj = tj((true, true, false));
    let p3 = DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        0.125
            * (2.0 * t.at3(i, jj, k) - t.at3(jj, k, i) - t.at3(k, i, jj) - t_jyzjx.at3(i, jj, k)
                - t_zjxjy.at3(i, jj, k)
                + 2.0 * t_jj.at3(i, jj, k)
                - t_jyjzx.at3(i, jj, k)
                - t_jzjxy.at3(i, jj, k)
                + t_yjzjx.at3(i, jj, k)
                + t_jzxjy.at3(i, jj, k))
    });
    let p4 = DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        0.125
            * (2.0 * t.at3(i, jj, k) + t.at3(jj, k, i) + t.at3(k, i, jj) + t_jyzjx.at3(i, jj, k)
                + t_zjxjy.at3(i, jj, k)
                + 2.0 * t_jj.at3(i, jj, k)
                + t_jyjzx.at3(i, jj, k)
                + t_jzjxy.at3(i, jj, k)
                - t_yjzjx.at3(i, jj, k)
                - t_jzxjy.at3(i, jj, k))
    });
    Ok(TorsionProjections { p1, p2, p3, p4 })
}

/// Residuals reported by [`naturality_check`].
#[derive(Debug, Clone, serde::Serialize)]
pub struct NaturalityReport {
    pub nabla_prime_j: f64,
    pub nabla_prime_g: f64,
    /// `F(x,y,z) = Q(x,y,Jz) − Q(x,Jy,z)`.
    pub deformation_condition: f64,
    /// `Q(x,y,z) = −Q(x,z,y)`.
    pub skew_condition: f64,
    /// `4p₂(x,y,z) = g(N(x,y),z)`.
    pub p2_vs_nijenhuis: f64,
    /// `g(N(x,y),z) = 2{Φ(z,Jx,Jy) − Φ(z,x,y)}`.
    pub nijenhuis_vs_phi: f64,
    /// `4p₃ = −Φ(x,y,z) + Φ(y,z,x) + Φ(x,Jy,Jz) + Φ(y,Jz,Jx) − 2Φ(z,Jx,Jy)`.
    pub p3_vs_phi: f64,
    pub natural: bool,
}

/// Evaluates ∇′J and ∇′g directly plus the equivalent deformation-tensor
/// conditions, and (for any connection) the two torsion-projection identities
/// that characterize natural connections.
pub fn naturality_check(
    dc: &DeformedConnection,
    structure: &NordenStructure,
    frame: &FrameModel,
    fundamental: &FundamentalTensor,
    tols: &Tolerances,
) -> Result<NaturalityReport> {
    let dim = structure.dim();
    let j = structure.complex_structure();
    let f = &fundamental.f;
    let nabla_prime_j = frame::nabla_j(&dc.gamma_prime, structure, frame).max_abs();
    // (nabla'_x g)(y,z) = frame-derivative − Q(x,y,z) − Q(x,z,y) with the base
    // Levi-Civita part already metric-compatible
    let glp = dc.gamma_prime.lowered(structure.metric());
    let dg_store;
    let dg: Option<&[DenseTensor]> = match frame {
        FrameModel::LieAlgebra(_) => None,
        FrameModel::Chart(c) => {
            dg_store = c.metric_partials_at(&c.point);
            Some(&dg_store)
        }
    };
    let nabla_prime_g = frame::metric_compat_residual(&glp, dg);
    let q = &dc.q_lower;
    let mut cond35 = 0.0f64;
    let mut cond36 = 0.0f64;
    for i in 0..dim {
        for a in 0..dim {
            for b in 0..dim {
                let mut qjz = 0.0;
                let mut qjy = 0.0;
                for m in 0..dim {
                    qjz += q.at3(i, a, m) * j.at2(m, b);
                    qjy += j.at2(m, a) * q.at3(i, m, b);
                }
                cond35 = cond35.max((f.at3(i, a, b) - (qjz - qjy)).abs());
                cond36 = cond36.max((q.at3(i, a, b) + q.at3(i, b, a)).abs());
            }
        }
    }
    let proj = torsion_projections(&dc.torsion_lower, structure)?;
    let nj = frame::nabla_j(
        &frame::levi_civita_unchecked(structure, frame)?,
        structure,
        frame,
    );
    let n_lower = frame::lower_first_slot(&frame::nijenhuis(structure, &nj), structure.metric());
    let mut p2_vs_n = 0.0f64;
    for i in 0..dim {
        for a in 0..dim {
            for b in 0..dim {
                p2_vs_n = p2_vs_n.max((4.0 * proj.p2.at3(i, a, b) - n_lower.at3(i, a, b)).abs());
            }
        }
    }
    let phi = phi_tensor(fundamental, structure);
    let mut n_vs_phi = 0.0f64;
    let mut p3_vs_phi = 0.0f64;
    for i in 0..dim {
        for a in 0..dim {
            for b in 0..dim {
                // Phi(z, Jx, Jy) at (x,y,z) = (i,a,b)
                let mut phi_z_jx_jy = 0.0;
                let mut phi_x_jy_jz = 0.0;
                let mut phi_y_jz_jx = 0.0;
                for m in 0..dim {
                    for l in 0..dim {
                        phi_z_jx_jy += j.at2(m, i) * j.at2(l, a) * phi.at3(b, m, l);
                        phi_x_jy_jz += j.at2(m, a) * j.at2(l, b) * phi.at3(i, m, l);
                        phi_y_jz_jx += j.at2(m, b) * j.at2(l, i) * phi.at3(a, m, l);
                    }
                }
                n_vs_phi = n_vs_phi
                    .max((n_lower.at3(i, a, b) - 2.0 * (phi_z_jx_jy - phi.at3(b, i, a))).abs());
                let rhs_p3 = -phi.at3(i, a, b) + phi.at3(a, b, i) + phi_x_jy_jz + phi_y_jz_jx
                    - 2.0 * phi_z_jx_jy;
                p3_vs_phi = p3_vs_phi.max((4.0 * proj.p3.at3(i, a, b) - rhs_p3).abs());
            }
        }
    }
    let scale = f.max_abs().max(q.max_abs()).max(1.0);
    let tol = tols.identity(scale);
    Ok(NaturalityReport {
        nabla_prime_j,
        nabla_prime_g,
        deformation_condition: cond35,
        skew_condition: cond36,
        p2_vs_nijenhuis: p2_vs_n,
        nijenhuis_vs_phi: n_vs_phi,
        p3_vs_phi,
        natural: nabla_prime_j <= tol && nabla_prime_g <= tol,
    })
}

/// Deformation tensor of a metric connection from its torsion:
/// `Q(x,y,z) = ½{T(x,y,z) − T(y,z,x) + T(z,x,y)}`.
pub fn hayden_q_from_t(t: &DenseTensor) -> Result<DenseTensor> {
    let dim = t.dim();
    let mut anty = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                anty = anty.max((t.at3(i, j, k) + t.at3(j, i, k)).abs());
            }
        }
    }
    if anty > 1e-9 * (1.0 + t.max_abs()) {
        return Err(NordenError::NonAntisymmetricTorsion(anty));
    }
    Ok(DenseTensor::from_fn3(dim, LOWER3, |i, j, k| {
        0.5 * (t.at3(i, j, k) - t.at3(j, k, i) + t.at3(k, i, j))
    }))
}

/// Reconstructs F from the canonical torsion on a quasi-Kähler instance:
/// `F(x,y,z) = T(x,z,Jy) − T(x,Jy,z)`.
pub fn f_from_torsion(t: &DenseTensor, structure: &NordenStructure) -> DenseTensor {
    let dim = t.dim();
    let j = structure.complex_structure();
    DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        (0..dim)
            .map(|m| j.at2(m, jj) * (t.at3(i, k, m) - t.at3(i, m, k)))
            .sum()
    })
}

/// Canonical torsion in the quasi-Kähler form `T(x,y,z) = ½{F(x,Jy,z) + F(Jx,y,z)}`.
pub fn torsion_from_f(fundamental: &FundamentalTensor, structure: &NordenStructure) -> DenseTensor {
    let f = &fundamental.f;
    let dim = f.dim();
    let j = structure.complex_structure();
    DenseTensor::from_fn3(dim, LOWER3, |i, jj, k| {
        0.5 * (0..dim)
            .map(|m| f.at3(i, m, k) * j.at2(m, jj) + j.at2(m, i) * f.at3(m, jj, k))
            .sum::<f64>()
    })
}

/// Residuals of the canonical-torsion identities on quasi-Kähler instances:
/// the defining condition `T(x,y,z) + T(y,z,x) − T(Jx,y,Jz) − T(y,Jz,Jx) = 0`
/// plus `T(Jx,y,z) = T(x,Jy,z) = −T(x,y,Jz)`.
pub fn canonical_torsion_residuals(t: &DenseTensor, structure: &NordenStructure) -> Vec<(&'static str, f64)> {
    let dim = t.dim();
    let j = structure.complex_structure();
    let mut defining = 0.0f64;
    let mut jx_vs_jz = 0.0f64;
    let mut jx_vs_jy = 0.0f64;
    for i in 0..dim {
        for a in 0..dim {
            for b in 0..dim {
                let mut t_jx_y_jz = 0.0;
                let mut t_y_jz_jx = 0.0;
                let mut t_jx = 0.0;
                let mut t_jy = 0.0;
                let mut t_jz = 0.0;
                for m in 0..dim {
                    t_jx += j.at2(m, i) * t.at3(m, a, b);
                    t_jy += j.at2(m, a) * t.at3(i, m, b);
                    t_jz += j.at2(m, b) * t.at3(i, a, m);
                    for l in 0..dim {
                        t_jx_y_jz += j.at2(m, i) * j.at2(l, b) * t.at3(m, a, l);
                        t_y_jz_jx += j.at2(m, b) * j.at2(l, i) * t.at3(a, m, l);
                    }
                }
                defining = defining
                    .max((t.at3(i, a, b) + t.at3(a, b, i) - t_jx_y_jz - t_y_jz_jx).abs());
                jx_vs_jz = jx_vs_jz.max((t_jx + t_jz).abs());
                jx_vs_jy = jx_vs_jy.max((t_jx - t_jy).abs());
            }
        }
    }
    vec![
        ("T(x,y,z)+T(y,z,x)-T(Jx,y,Jz)-T(y,Jz,Jx) = 0", defining),
        ("T(Jx,y,z) = -T(x,y,Jz)", jx_vs_jz),
        ("T(Jx,y,z) = T(x,Jy,z)", jx_vs_jy),
    ]
}

/// Residuals of `Q(x,y,z) = −Q(y,x,z) + F(Jz,x,y)` and of the trace identity
/// `g^{ij} Q(e_i, e_j, z) = 0` for the canonical deformation tensor.
pub fn canonical_q_residuals(
    q: &DenseTensor,
    fundamental: &FundamentalTensor,
    structure: &NordenStructure,
) -> Vec<(&'static str, f64)> {
    let dim = q.dim();
    let f = &fundamental.f;
    let j = structure.complex_structure();
    let gi = structure.metric_inv();
    let mut sym = 0.0f64;
    for i in 0..dim {
        for a in 0..dim {
            for b in 0..dim {
                let fjz: f64 = (0..dim).map(|m| j.at2(m, b) * f.at3(m, i, a)).sum();
                sym = sym.max((q.at3(i, a, b) + q.at3(a, i, b) - fjz).abs());
            }
        }
    }
    let mut trace = 0.0f64;
    for z in 0..dim {
        let mut sum = 0.0;
        for i in 0..dim {
            for a in 0..dim {
                sum += gi.at2(i, a) * q.at3(i, a, z);
            }
        }
        trace = trace.max(sum.abs());
    }
    vec![
        ("Q(x,y,z) = -Q(y,x,z) + F(Jz,x,y)", sym),
        ("g^{ij} Q(e_i,e_j,z) = 0", trace),
    ]
}

/// Mean-connection residual `Q^B − ½(Q^{KT} + Q^C)` on a quasi-Kähler
/// instance, plus the total-skew residual of the KT torsion.
pub fn mean_connection_residuals(
    canonical: &DeformedConnection,
    b_conn: &DeformedConnection,
    kt: &DeformedConnection,
) -> Vec<(&'static str, f64)> {
    let dim = canonical.q_lower.dim();
    let mut mean = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                mean = mean.max(
                    (b_conn.q_lower.at3(i, j, k)
                        - 0.5 * (kt.q_lower.at3(i, j, k) + canonical.q_lower.at3(i, j, k)))
                    .abs(),
                );
            }
        }
    }
    let t = &kt.torsion_lower;
    let mut skew = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            for k in 0..dim {
                skew = skew.max((t.at3(i, j, k) + t.at3(i, k, j)).abs());
                skew = skew.max((t.at3(i, j, k) + t.at3(j, i, k)).abs());
            }
        }
    }
    vec![
        ("Q^B = (Q^KT + Q^C)/2", mean),
        ("KT torsion totally skew-symmetric", skew),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge;
    use crate::frame::{fundamental_f, levi_civita, nabla_j};

    fn setup_qk4() -> (NordenStructure, FrameModel, ConnectionCoeffs, DenseTensor, FundamentalTensor) {
        let (s, f) = forge::quasi_kahler_search(2, 3, 100).unwrap();
        let conn = levi_civita(&s, &f).unwrap();
        let nj = nabla_j(&conn, &s, &f);
        let fund = fundamental_f(&nj, &s).unwrap();
        (s, f, conn, nj, fund)
    }

    #[test]
    fn phi_dual_route_agreement() {
        let (s, f, _conn, _nj, fund) = setup_qk4();
        let phi = phi_tensor(&fund, &s);
        let phi_def = phi_definitional(&s, &f).unwrap();
        assert!(phi.residual(&phi_def).unwrap() < 1e-9 * (1.0 + phi.max_abs()));
        // quasi-Kahler form: Phi(x,y,z) = F(Jz,x,y)
        let dim = s.dim();
        let j = s.complex_structure();
        let mut worst = 0.0f64;
        for i in 0..dim {
            for a in 0..dim {
                for b in 0..dim {
                    let fjz: f64 = (0..dim).map(|m| j.at2(m, b) * fund.f.at3(m, i, a)).sum();
                    worst = worst.max((phi.at3(i, a, b) - fjz).abs());
                }
            }
        }
        assert!(worst < 1e-9 * (1.0 + phi.max_abs()));
    }

    #[test]
    fn phi_dual_route_on_general_norden() {
        let (s, f) = forge::random_norden(3, 11, 100).unwrap();
        let conn = levi_civita(&s, &f).unwrap();
        let nj = nabla_j(&conn, &s, &f);
        let fund = fundamental_f(&nj, &s).unwrap();
        let phi = phi_tensor(&fund, &s);
        let phi_def = phi_definitional(&s, &f).unwrap();
        assert!(phi.residual(&phi_def).unwrap() < 1e-9 * (1.0 + phi.max_abs()));
    }

    #[test]
    fn canonical_dual_paths_agree_on_w3() {
        let (s, _f, conn, nj, _fund) = setup_qk4();
        let general = canonical_connection(&s, &conn, &nj, false).unwrap();
        let qk_form = canonical_connection(&s, &conn, &nj, true).unwrap();
        let res = general.q_lower.residual(&qk_form.q_lower).unwrap();
        assert!(res < 1e-9 * (1.0 + general.q_lower.max_abs()));
    }

    #[test]
    fn quasi_kahler_form_rejects_general_instance() {
        let (s, f) = forge::random_norden(2, 7, 100).unwrap();
        let conn = levi_civita(&s, &f).unwrap();
        let nj = nabla_j(&conn, &s, &f);
        let err = canonical_connection(&s, &conn, &nj, true).unwrap_err();
        assert_eq!(err.to_string(), "quasi-Kahler form requires class W3");
    }

    #[test]
    fn canonical_is_natural_even_off_w3() {
        let (s, f) = forge::random_norden(2, 9, 100).unwrap();
        let conn = levi_civita(&s, &f).unwrap();
        let nj = nabla_j(&conn, &s, &f);
        let fund = fundamental_f(&nj, &s).unwrap();
        let dc = canonical_connection(&s, &conn, &nj, false).unwrap();
        let rep = naturality_check(&dc, &s, &f, &fund, &Tolerances::default()).unwrap();
        assert!(rep.natural, "{rep:?}");
        // canonical torsion has p1 = p4 = 0 on any Norden structure
        let proj = torsion_projections(&dc.torsion_lower, &s).unwrap();
        let tol = 1e-9 * (1.0 + dc.torsion_lower.max_abs());
        assert!(proj.p1.max_abs() < tol && proj.p4.max_abs() < tol);
        // the projection identities for natural connections
        assert!(rep.p2_vs_nijenhuis < tol);
        assert!(rep.nijenhuis_vs_phi < tol);
        assert!(rep.p3_vs_phi < tol);
    }

    #[test]
    fn levi_civita_is_not_natural_on_w3() {
        let (s, f, conn, _nj, fund) = setup_qk4();
        let zero_q = DenseTensor::zeros(s.dim(), &LOWER3).unwrap();
        let dc = DeformedConnection::from_q(ConnectionKind::Custom("levi-civita".into()), &s, &conn, zero_q);
        let rep = naturality_check(&dc, &s, &f, &fund, &Tolerances::default()).unwrap();
        assert!(!rep.natural);
        assert!(rep.nabla_prime_j > 1e-3);
    }

    #[test]
    fn hand_built_q_violating_skewness_fails() {
        let (s, f, conn, _nj, fund) = setup_qk4();
        let dim = s.dim();
        // symmetric in last two slots: violates the metric condition
        let bad_q = DenseTensor::from_fn3(dim, LOWER3, |i, j, k| {
            0.1 * (i as f64 + 1.0) * ((j + k) as f64)
        });
        let dc = DeformedConnection::from_q(ConnectionKind::Custom("bad".into()), &s, &conn, bad_q);
        let rep = naturality_check(&dc, &s, &f, &fund, &Tolerances::default()).unwrap();
        assert!(rep.skew_condition > 0.1);
        assert!(!rep.natural);
    }

    #[test]
    fn torsion_type_on_w3() {
        let (s, _f, conn, nj, fund) = setup_qk4();
        let dc = canonical_connection(&s, &conn, &nj, false).unwrap();
        let t = &dc.torsion_lower;
        let tol = 1e-9 * (1.0 + t.max_abs());
        // torsion equals its F-form expression
        let t49 = torsion_from_f(&fund, &s);
        assert!(t.residual(&t49).unwrap() < tol);
        let proj = torsion_projections(t, &s).unwrap();
        assert!(proj.p1.max_abs() < tol);
        assert!(proj.p3.max_abs() < tol);
        assert!(proj.p4.max_abs() < tol);
        assert!(t.residual(&proj.p2).unwrap() < tol);
        assert!(proj.p2.max_abs() > 0.01, "non-Kahler canonical torsion must be nonzero");
        for (name, r) in canonical_torsion_residuals(t, &s) {
            assert!(r < tol, "{name}: {r}");
        }
        for (name, r) in canonical_q_residuals(&dc.q_lower, &fund, &s) {
            assert!(r < tol, "{name}: {r}");
        }
    }

    #[test]
    fn hayden_reconstructs_canonical_q() {
        let (s, _f, conn, nj, _fund) = setup_qk4();
        let dc = canonical_connection(&s, &conn, &nj, false).unwrap();
        let q_h = hayden_q_from_t(&dc.torsion_lower).unwrap();
        assert!(q_h.residual(&dc.q_lower).unwrap() < 1e-9 * (1.0 + dc.q_lower.max_abs()));
        // zero torsion gives zero Q
        let z = DenseTensor::zeros(s.dim(), &LOWER3).unwrap();
        assert_eq!(hayden_q_from_t(&z).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn hayden_on_totally_skew_torsion_is_half() {
        let (s, _f, conn, _nj, fund) = setup_qk4();
        let kt = kt_connection(&fund, &s, &conn);
        let q_h = hayden_q_from_t(&kt.torsion_lower).unwrap();
        let half_t = kt.torsion_lower.scale(0.5);
        assert!(q_h.residual(&half_t).unwrap() < 1e-9 * (1.0 + half_t.max_abs()));
    }

    #[test]
    fn f_round_trip_and_negative_control() {
        let (s, _f, conn, nj, fund) = setup_qk4();
        let dc = canonical_connection(&s, &conn, &nj, false).unwrap();
        let f_rec = f_from_torsion(&dc.torsion_lower, &s);
        assert!(f_rec.residual(&fund.f).unwrap() < 1e-9 * (1.0 + fund.f.max_abs()));
        // negative control: the B-connection torsion does not reconstruct F
        let b = b_connection(&fund, &s, &conn);
        let f_bad = f_from_torsion(&b.torsion_lower, &s);
        assert!(f_bad.residual(&fund.f).unwrap() > 0.01);
    }

    #[test]
    fn mean_connection_and_kt_skewness() {
        let (s, f, conn, nj, fund) = setup_qk4();
        let c = canonical_connection(&s, &conn, &nj, false).unwrap();
        let b = b_connection(&fund, &s, &conn);
        let kt = kt_connection(&fund, &s, &conn);
        let tol = 1e-9 * (1.0 + fund.f.max_abs());
        for (name, r) in mean_connection_residuals(&c, &b, &kt) {
            assert!(r < tol, "{name}: {r}");
        }
        // both are natural on W3
        for dc in [&b, &kt] {
            let rep = naturality_check(dc, &s, &f, &fund, &Tolerances::default()).unwrap();
            assert!(rep.natural, "{:?} not natural", dc.label);
        }
    }

    #[test]
    fn projections_sum_to_torsion() {
        let (s, _f, _conn, _nj, _fund) = setup_qk4();
        let dim = s.dim();
        // arbitrary antisymmetric rank-3 tensor
        let mut x = 0.37f64;
        let mut raw = DenseTensor::zeros(dim, &LOWER3).unwrap();
        for i in 0..dim {
            for j in (i + 1)..dim {
                for k in 0..dim {
                    x = (x * 1.9 + 0.13).fract();
                    raw.set(&[i, j, k], x - 0.5);
                    raw.set(&[j, i, k], 0.5 - x);
                }
            }
        }
        let proj = torsion_projections(&raw, &s).unwrap();
        let sum = proj.p1.add(&proj.p2).unwrap().add(&proj.p3).unwrap().add(&proj.p4).unwrap();
        assert!(sum.residual(&raw).unwrap() < 1e-12 * (1.0 + raw.max_abs()));
        // idempotence: each projection reprojects to itself, others vanish
        let pp = torsion_projections(&proj.p2, &s).unwrap();
        let tol = 1e-9 * (1.0 + raw.max_abs());
        assert!(pp.p2.residual(&proj.p2).unwrap() < tol);
        assert!(pp.p1.max_abs() < tol && pp.p3.max_abs() < tol && pp.p4.max_abs() < tol);
        let pp3 = torsion_projections(&proj.p3, &s).unwrap();
        assert!(pp3.p3.residual(&proj.p3).unwrap() < tol);
        assert!(pp3.p1.max_abs() < tol && pp3.p2.max_abs() < tol && pp3.p4.max_abs() < tol);
    }

    #[test]
    fn non_antisymmetric_torsion_rejected() {
        let (s, _f, _conn, _nj, _fund) = setup_qk4();
        let bad = DenseTensor::from_fn3(s.dim(), LOWER3, |i, j, k| (i + j + k) as f64);
        let err = torsion_projections(&bad, &s).unwrap_err();
        assert!(err.to_string().contains("antisymmetric"));
    }

    #[test]
    fn flat_model_all_connections_coincide() {
        let (s, f) = forge::flat_model(2).unwrap();
        let conn = levi_civita(&s, &f).unwrap();
        let nj = nabla_j(&conn, &s, &f);
        let fund = fundamental_f(&nj, &s).unwrap();
        let c = canonical_connection(&s, &conn, &nj, false).unwrap();
        let b = b_connection(&fund, &s, &conn);
        let kt = kt_connection(&fund, &s, &conn);
        assert_eq!(c.q_lower.max_abs(), 0.0);
        assert_eq!(b.q_lower.max_abs(), 0.0);
        assert_eq!(kt.q_lower.max_abs(), 0.0);
        assert_eq!(c.torsion_lower.max_abs(), 0.0);
    }
}
