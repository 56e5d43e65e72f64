//! Data-driven verification registry and report assembly.
//!
//! Every check is declared once in [`CHECKS`] with a stable id, the identity
//! it verifies (in mathematical notation) and its tolerance class; the CLI,
//! the corpus runner and the acceptance suite all run the same registry.

use serde::{Deserialize, Serialize};

use crate::connection::{self, ConnectionKind, DeformedConnection};
use crate::curvature::{self, Conditional, NamedConnection};
use crate::error::Result;
use crate::frame;
use crate::model::{FrameModel, NordenStructure, Provenance};
use crate::tensor::DenseTensor;
use crate::tol::Tolerances;

pub const TOOLKIT_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Scope of a check: which instances it applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    All,
    LieOnly,
    ChartOnly,
    QuasiKahler,
    QuasiKahlerNonKahler,
}

/// Tolerance class of a check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TolKind {
    /// 1e-9 x (1 + operand scale); exact identities.
    Identity,
    /// 1e-8 x (1 + operand scale); membership verdicts.
    Membership,
    /// Boolean verdict agreement (residual 0 or 1).
    Verdict,
    /// Finite-difference cross-checks in chart mode (1e-6).
    Fd,
}

/// A registry entry.
#[derive(Debug, Clone, Copy)]
pub struct CheckSpec {
    pub id: &'static str,
    pub identity: &'static str,
    pub scope: Scope,
    pub tol: TolKind,
}

/// The check registry: single source of truth for ids, identities, scopes
/// and tolerance classes.
pub const CHECKS: &[CheckSpec] = &[
    CheckSpec { id: "norden_axioms", identity: "J^2 = -id; g(Jx,Jy) = -g(x,y); g, g~ symmetric with signature (n,n); g^{-1} g = id", scope: Scope::All, tol: TolKind::Identity },
    CheckSpec { id: "jacobi_identity", identity: "S_cyc [[x,y],z] = 0 for the frame brackets", scope: Scope::LieOnly, tol: TolKind::Identity },
    CheckSpec { id: "levi_civita", identity: "nabla g = 0 and torsion(nabla) = 0 for the Levi-Civita connection", scope: Scope::All, tol: TolKind::Identity },
    CheckSpec { id: "f_symmetries", identity: "F(x,y,z) = F(x,z,y) = F(x,Jy,Jz); F(x,Jy,z) = -F(x,y,Jz)", scope: Scope::All, tol: TolKind::Identity },
    CheckSpec { id: "f_trace", identity: "g^{ij} F(Jz,e_i,e_j) = 0", scope: Scope::All, tol: TolKind::Identity },
    CheckSpec { id: "class_equivalence", identity: "verdicts of S_cyc F = 0, N* = 0 and S_cyc F(Jx,y,z) = 0 coincide", scope: Scope::All, tol: TolKind::Verdict },
    CheckSpec { id: "nijenhuis_dual_route", identity: "N from nabla J equals [Jx,Jy] - [x,y] - J[Jx,y] - J[x,Jy]", scope: Scope::LieOnly, tol: TolKind::Identity },
    CheckSpec { id: "square_norm_dual", identity: "||nabla J|| = -2 g^{ij}g^{ks} g((nabla_i J)e_k, (nabla_s J)e_j) on quasi-Kahler instances", scope: Scope::QuasiKahler, tol: TolKind::Identity },
    CheckSpec { id: "phi_dual_route", identity: "Phi formula 1/2{F(Jz,x,y) - F(x,y,Jz) - F(y,Jz,x)} equals g(nabla~_x y - nabla_x y, z)", scope: Scope::All, tol: TolKind::Identity },
    CheckSpec { id: "phi_quasi_kahler_form", identity: "Phi(x,y,z) = F(Jz,x,y) on quasi-Kahler instances", scope: Scope::QuasiKahler, tol: TolKind::Identity },
    CheckSpec { id: "canonical_dual_route", identity: "general deformation 1/4{2Phi(x,y,z) - Phi(z,x,y) - Phi(Jz,x,Jy)} equals the quasi-Kahler F-form 1/4{F(y,Jx,z) - F(Jy,x,z) + 2F(x,Jy,z)}", scope: Scope::QuasiKahler, tol: TolKind::Identity },
    CheckSpec { id: "canonical_natural", identity: "nabla' J = 0; nabla' g = 0; F(x,y,z) = Q(x,y,Jz) - Q(x,Jy,z); Q(x,y,z) = -Q(x,z,y)", scope: Scope::All, tol: TolKind::Identity },
    CheckSpec { id: "canonical_torsion_class", identity: "T(x,y,z) + T(y,z,x) - T(Jx,y,Jz) - T(y,Jz,Jx) = 0 and p1 = p4 = 0 for the canonical torsion", scope: Scope::All, tol: TolKind::Identity },
    CheckSpec { id: "torsion_quasi_kahler_type", identity: "canonical torsion on quasi-Kahler: T = p2, p3 = 0, T(Jx,y,z) = T(x,Jy,z) = -T(x,y,Jz)", scope: Scope::QuasiKahler, tol: TolKind::Identity },
    CheckSpec { id: "natural_p2_vs_nijenhuis", identity: "4 p2(x,y,z) = g(N(x,y),z) for natural connections", scope: Scope::All, tol: TolKind::Identity },
    CheckSpec { id: "natural_nijenhuis_vs_potential", identity: "g(N(x,y),z) = 2{Phi(z,Jx,Jy) - Phi(z,x,y)}", scope: Scope::All, tol: TolKind::Identity },
    CheckSpec { id: "natural_p3_vs_potential", identity: "4 p3 = -Phi(x,y,z) + Phi(y,z,x) + Phi(x,Jy,Jz) + Phi(y,Jz,Jx) - 2 Phi(z,Jx,Jy)", scope: Scope::All, tol: TolKind::Identity },
    CheckSpec { id: "nonkahler_torsion_components", identity: "p2 != 0 and p3 = 0 for natural connections on non-Kahler quasi-Kahler instances", scope: Scope::QuasiKahlerNonKahler, tol: TolKind::Membership },
    CheckSpec { id: "canonical_q_identities", identity: "Q(x,y,z) = -Q(y,x,z) + F(Jz,x,y); g^{ij} Q(e_i,e_j,z) = 0", scope: Scope::QuasiKahler, tol: TolKind::Identity },
    CheckSpec { id: "torsion_f_round_trip", identity: "T = 1/2{F(x,Jy,z) + F(Jx,y,z)} and F(x,y,z) = T(x,z,Jy) - T(x,Jy,z) recover each other", scope: Scope::QuasiKahler, tol: TolKind::Identity },
    CheckSpec { id: "hayden_route", identity: "Q(x,y,z) = 1/2{T(x,y,z) - T(y,z,x) + T(z,x,y)} rebuilds the canonical deformation", scope: Scope::All, tol: TolKind::Identity },
    CheckSpec { id: "projection_sum", identity: "p1 + p2 + p3 + p4 = T", scope: Scope::All, tol: TolKind::Identity },
    CheckSpec { id: "curvature_symmetries", identity: "R and R' antisymmetric in both pairs; Levi-Civita R satisfies the first Bianchi identity; R'(x,y,Jz,Jw) = -R'(x,y,z,w)", scope: Scope::All, tol: TolKind::Fd },
    CheckSpec { id: "curvature_dual_route", identity: "direct R' equals R + (nabla_x Q)(y,z,w) - (nabla_y Q)(x,z,w) - g(Q(x,w),Q(y,z)) + g(Q(y,w),Q(x,z))", scope: Scope::All, tol: TolKind::Fd },
    CheckSpec { id: "ricci_dual_route", identity: "rho'(y,z) = rho(y,z) + g^{ij}(nabla_i Q)(y,z,e_j) + g^{ij} g(Q(y,e_j),Q(e_i,z))", scope: Scope::QuasiKahler, tol: TolKind::Fd },
    CheckSpec { id: "scalar_relation", identity: "tau' = tau - 1/8 ||nabla J|| for the canonical connection; intermediate contraction routes agree", scope: Scope::QuasiKahler, tol: TolKind::Membership },
    CheckSpec { id: "isotropy_scalar_equivalence", identity: "tau' = tau iff ||nabla J|| = 0", scope: Scope::QuasiKahler, tol: TolKind::Verdict },
    CheckSpec { id: "kahler_bianchi_equivalence", identity: "S_cyc{(nabla'_x T)(y,z,w) + T(T(x,y),z,w)} equals S_cyc R'; R' Kahlerian iff it vanishes", scope: Scope::All, tol: TolKind::Fd },
    CheckSpec { id: "kahler_curvature_consequence", identity: "g((nabla_x J)Jz + (nabla_{Jx}J)z, (nabla_{Jy}J)w - (nabla_y J)Jw) = 0 when R' is Kahlerian", scope: Scope::QuasiKahler, tol: TolKind::Identity },
    CheckSpec { id: "mean_connection", identity: "Q^B = 1/2 (Q^KT + Q^C) on quasi-Kahler instances", scope: Scope::QuasiKahler, tol: TolKind::Identity },
    CheckSpec { id: "kt_skew_torsion", identity: "the KT-connection torsion is totally skew-symmetric; Q^KT = T^KT/2", scope: Scope::QuasiKahler, tol: TolKind::Identity },
    CheckSpec { id: "b_kt_natural", identity: "the B- and KT-connections are natural (nabla' J = nabla' g = 0)", scope: Scope::QuasiKahler, tol: TolKind::Identity },
    CheckSpec { id: "parallelism_coincidence", identity: "nabla' T, nabla' Q and nabla' F vanish (or not) together", scope: Scope::All, tol: TolKind::Verdict },
    CheckSpec { id: "torsion_contractions", identity: "g^{ij}g^{ks}g(Q(e_j,e_s),Q(e_i,e_k)) = -3/8 ||nabla J||; g^{ij}g^{ks}g((nabla_{Je_s}J)e_j,T(e_i,e_k)) = 1/2 ||nabla J||", scope: Scope::QuasiKahler, tol: TolKind::Membership },
    CheckSpec { id: "parallel_torsion_theorems", identity: "with parallel torsion: R' = R + g(Q(y,z),Q(x,w)) - g(Q(x,z),Q(y,w)) + g(Q(z,w),T(x,y)) + g((nabla_{Jw}J)z,T(x,y)), and ||nabla J|| = 0", scope: Scope::All, tol: TolKind::Membership },
    CheckSpec { id: "chart_fd_consistency", identity: "chart-mode Christoffel symbols and tensor partials from central differences match exact polynomial derivatives", scope: Scope::ChartOnly, tol: TolKind::Fd },
];

pub fn check_spec(id: &str) -> Option<&'static CheckSpec> {
    CHECKS.iter().find(|c| c.id == id)
}

/// Verdict of a single check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

/// One executed check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub check_id: String,
    pub identity: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

/// Pass/fail/not-applicable counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub not_applicable: usize,
}

/// Per-instance verification report; serializes to the documented JSON schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub instance: String,
    pub toolkit_version: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub checks: Vec<CheckResult>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn all_pass(&self) -> bool {
        self.summary.fail == 0
    }

    /// Text rendering: one line per check, residuals in scientific notation
    /// with 3 significant digits.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("instance: {}\n", self.instance));
        if let Some(p) = &self.provenance {
            out.push_str(&format!("provenance: {} seed={} budget={}\n", p.recipe, p.seed, p.budget));
        }
        for c in &self.checks {
            let verdict = match c.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "FAIL",
                Verdict::NotApplicable => "n/a ",
            };
            match (c.residual, c.tolerance) {
                (Some(r), Some(t)) => {
                    out.push_str(&format!("  [{verdict}] {:<30} residual {:>9.2e}  tol {:>9.2e}\n", c.check_id, r, t))
                }
                _ => out.push_str(&format!("  [{verdict}] {:<30}\n", c.check_id)),
            }
            if let Some(n) = &c.note {
                out.push_str(&format!("         {n}\n"));
            }
        }
        out.push_str(&format!(
            "summary: {} pass, {} fail, {} not applicable\n",
            self.summary.pass, self.summary.fail, self.summary.not_applicable
        ));
        out
    }
}

/// Everything the checks need, computed once per instance.
pub struct InstanceContext<'a> {
    pub name: String,
    pub structure: &'a NordenStructure,
    pub frame: &'a FrameModel,
    pub provenance: Option<Provenance>,
    pub tols: Tolerances,
    conn: frame::ConnectionCoeffs,
    nj: DenseTensor,
    fund: frame::FundamentalTensor,
    flags: frame::ClassFlags,
    canonical: DeformedConnection,
    chart_named: Option<NamedConnection>,
}

impl<'a> InstanceContext<'a> {
    pub fn build(
        name: &str,
        structure: &'a NordenStructure,
        frame_model: &'a FrameModel,
        provenance: Option<Provenance>,
        tols: Tolerances,
    ) -> Result<Self> {
        let conn = frame::levi_civita(structure, frame_model)?;
        let nj = frame::nabla_j(&conn, structure, frame_model);
        let fund = frame::fundamental_f(&nj, structure)?;
        let flags = frame::class_membership(&fund, structure, &nj, &tols);
        let canonical = connection::canonical_connection(structure, &conn, &nj, false)?;
        Ok(Self {
            name: name.to_string(),
            structure,
            frame: frame_model,
            provenance,
            tols,
            conn,
            nj,
            fund,
            flags,
            canonical,
            chart_named: Some(NamedConnection::Canonical),
        })
    }

    fn is_lie(&self) -> bool {
        matches!(self.frame, FrameModel::LieAlgebra(_))
    }

    fn applies(&self, scope: Scope) -> bool {
        match scope {
            Scope::All => true,
            Scope::LieOnly => self.is_lie(),
            Scope::ChartOnly => !self.is_lie(),
            Scope::QuasiKahler => self.flags.is_quasi_kahler_w3,
            Scope::QuasiKahlerNonKahler => self.flags.is_quasi_kahler_w3 && !self.flags.is_kahler_w0,
        }
    }

    fn tol_for(&self, kind: TolKind, scale: f64) -> f64 {
        match kind {
            TolKind::Identity => {
                if self.is_lie() {
                    self.tols.identity(scale)
                } else {
                    // first-order chart checks use exact polynomial partials,
                    // second-order ones go through the fd tolerance explicitly
                    self.tols.identity(scale)
                }
            }
            TolKind::Membership => self.tols.membership(scale),
            TolKind::Verdict => 0.5,
            TolKind::Fd => {
                if self.is_lie() {
                    self.tols.identity(scale)
                } else {
                    self.tols.fd() * (1.0 + scale)
                }
            }
        }
    }
}

fn result_from(spec: &CheckSpec, residual: f64, tolerance: f64, note: Option<String>) -> CheckResult {
    CheckResult {
        check_id: spec.id.to_string(),
        identity: spec.identity.to_string(),
        residual: Some(residual),
        tolerance: Some(tolerance),
        verdict: if residual <= tolerance { Verdict::Pass } else { Verdict::Fail },
        note,
    }
}

fn not_applicable(spec: &CheckSpec, note: Option<String>) -> CheckResult {
    CheckResult {
        check_id: spec.id.to_string(),
        identity: spec.identity.to_string(),
        residual: None,
        tolerance: None,
        verdict: Verdict::NotApplicable,
        note,
    }
}

fn run_one(spec: &CheckSpec, ctx: &InstanceContext<'_>) -> Result<CheckResult> {
    if !ctx.applies(spec.scope) {
        return Ok(not_applicable(spec, None));
    }
    let s = ctx.structure;
    let fm = ctx.frame;
    let tols = &ctx.tols;
    let out = match spec.id {
        "norden_axioms" => {
            let v = crate::model::validate(s, fm, tols)?;
            // report the entry closest to (or beyond) its own tolerance
            let worst = v
                .entries
                .iter()
                .max_by(|a, b| {
                    let ra = a.residual / a.tolerance.max(f64::MIN_POSITIVE);
                    let rb = b.residual / b.tolerance.max(f64::MIN_POSITIVE);
                    ra.total_cmp(&rb)
                })
                .expect("validation entries nonempty");
            let note = if v.is_valid() { None } else { Some(format!("violated: {}", worst.invariant)) };
            result_from(spec, worst.residual, worst.tolerance, note)
        }
        "jacobi_identity" => match fm {
            FrameModel::LieAlgebra(l) => {
                let scale = l.structure_constants.max_abs();
                result_from(spec, l.jacobi_residual(), ctx.tol_for(spec.tol, scale * scale), None)
            }
            _ => not_applicable(spec, None),
        },
        "levi_civita" => {
            let gl = ctx.conn.lowered(s.metric());
            let dg_store;
            let dg: Option<&[DenseTensor]> = match fm {
                FrameModel::LieAlgebra(_) => None,
                FrameModel::Chart(c) => {
                    dg_store = c.metric_partials_at(&c.point);
                    Some(&dg_store)
                }
            };
            let r = frame::metric_compat_residual(&gl, dg).max(frame::torsion_free_residual(&ctx.conn, fm));
            result_from(spec, r, ctx.tol_for(spec.tol, gl.max_abs()), None)
        }
        "f_symmetries" => {
            let rs = frame::f_symmetry_residuals(&ctx.fund.f, s);
            let worst = rs.iter().fold(0.0f64, |m, &(_, r)| m.max(r));
            result_from(spec, worst, ctx.tol_for(spec.tol, ctx.fund.f.max_abs()), None)
        }
        "f_trace" => {
            let r = frame::f_trace_residual(&ctx.fund.f, s);
            result_from(spec, r, ctx.tol_for(spec.tol, ctx.fund.f.max_abs()), None)
        }
        "class_equivalence" => {
            let fl = &ctx.flags;
            let agree = fl.is_quasi_kahler_w3 == fl.alt_condition
                && fl.is_quasi_kahler_w3 == (fl.assoc_residual <= tols.membership(fl.f_norm))
                && (!fl.is_kahler_w0 || fl.is_quasi_kahler_w3);
            result_from(
                spec,
                if agree { 0.0 } else { 1.0 },
                0.5,
                Some(format!(
                    "cyclic {:.3e}, N* {:.3e}, J-twisted cyclic {:.3e}; ||nabla J|| = {:.6e}{}",
                    fl.cyclic_residual,
                    fl.assoc_residual,
                    fl.alt_residual,
                    fl.square_norm,
                    if fl.is_isotropic_kahler { " (isotropic-Kahler)" } else { "" }
                )),
            )
        }
        "nijenhuis_dual_route" => {
            let n1 = frame::nijenhuis(s, &ctx.nj);
            let n2 = frame::nijenhuis_from_brackets(s, fm)?;
            result_from(spec, n1.residual(&n2)?, ctx.tol_for(spec.tol, n1.max_abs()), None)
        }
        "square_norm_dual" => {
            let a = frame::square_norm_nabla_j(s, &ctx.nj);
            let b = frame::square_norm_nabla_j_alt(s, &ctx.nj);
            result_from(spec, (a - b).abs(), ctx.tol_for(spec.tol, a.abs()), Some(format!("||nabla J|| = {a:.6}")))
        }
        "phi_dual_route" => {
            let phi = connection::phi_tensor(&ctx.fund, s);
            let phi_def = connection::phi_definitional(s, fm)?;
            result_from(spec, phi.residual(&phi_def)?, ctx.tol_for(spec.tol, phi.max_abs()), None)
        }
        "phi_quasi_kahler_form" => {
            let phi = connection::phi_tensor(&ctx.fund, s);
            let dim = s.dim();
            let j = s.complex_structure();
            let f = &ctx.fund.f;
            let mut worst = 0.0f64;
            for i in 0..dim {
                for a in 0..dim {
                    for b in 0..dim {
                        let fjz: f64 = (0..dim).map(|m| j.at2(m, b) * f.at3(m, i, a)).sum();
                        worst = worst.max((phi.at3(i, a, b) - fjz).abs());
                    }
                }
            }
            result_from(spec, worst, ctx.tol_for(spec.tol, phi.max_abs()), None)
        }
        "canonical_dual_route" => {
            let qk = connection::q_canonical_quasi_kahler(&ctx.fund, s);
            result_from(spec, ctx.canonical.q_lower.residual(&qk)?, ctx.tol_for(spec.tol, qk.max_abs()), None)
        }
        "canonical_natural" => {
            let rep = connection::naturality_check(&ctx.canonical, s, fm, &ctx.fund, tols)?;
            let worst = rep
                .nabla_prime_j
                .max(rep.nabla_prime_g)
                .max(rep.deformation_condition)
                .max(rep.skew_condition);
            result_from(spec, worst, ctx.tol_for(spec.tol, ctx.fund.f.max_abs()), None)
        }
        "canonical_torsion_class" => {
            let t = &ctx.canonical.torsion_lower;
            let res = connection::canonical_torsion_residuals(t, s);
            let defining = res[0].1;
            let proj = connection::torsion_projections(t, s)?;
            let worst = defining.max(proj.p1.max_abs()).max(proj.p4.max_abs());
            result_from(spec, worst, ctx.tol_for(spec.tol, t.max_abs()), None)
        }
        "torsion_quasi_kahler_type" => {
            let t = &ctx.canonical.torsion_lower;
            let proj = connection::torsion_projections(t, s)?;
            let res = connection::canonical_torsion_residuals(t, s);
            let worst = t
                .residual(&proj.p2)?
                .max(proj.p3.max_abs())
                .max(res[1].1)
                .max(res[2].1);
            result_from(spec, worst, ctx.tol_for(spec.tol, t.max_abs()), None)
        }
        "natural_p2_vs_nijenhuis" | "natural_nijenhuis_vs_potential" | "natural_p3_vs_potential" => {
            let rep = connection::naturality_check(&ctx.canonical, s, fm, &ctx.fund, tols)?;
            let r = match spec.id {
                "natural_p2_vs_nijenhuis" => rep.p2_vs_nijenhuis,
                "natural_nijenhuis_vs_potential" => rep.nijenhuis_vs_phi,
                _ => rep.p3_vs_phi,
            };
            result_from(spec, r, ctx.tol_for(spec.tol, ctx.fund.f.max_abs()), None)
        }
        "nonkahler_torsion_components" => {
            let proj = connection::torsion_projections(&ctx.canonical.torsion_lower, s)?;
            let p2n = proj.p2.max_abs();
            let p3n = proj.p3.max_abs();
            let tol = ctx.tol_for(spec.tol, ctx.canonical.torsion_lower.max_abs());
            let ok = p2n > tol && p3n <= tol;
            result_from(
                spec,
                if ok { p3n } else { tol * 2.0 },
                tol,
                Some(format!("|p2| = {p2n:.3e}, |p3| = {p3n:.3e}")),
            )
        }
        "canonical_q_identities" => {
            let rs = connection::canonical_q_residuals(&ctx.canonical.q_lower, &ctx.fund, s);
            let worst = rs.iter().fold(0.0f64, |m, &(_, r)| m.max(r));
            result_from(spec, worst, ctx.tol_for(spec.tol, ctx.canonical.q_lower.max_abs()), None)
        }
        "torsion_f_round_trip" => {
            let t49 = connection::torsion_from_f(&ctx.fund, s);
            let r1 = ctx.canonical.torsion_lower.residual(&t49)?;
            let f_rec = connection::f_from_torsion(&ctx.canonical.torsion_lower, s);
            let r2 = f_rec.residual(&ctx.fund.f)?;
            result_from(spec, r1.max(r2), ctx.tol_for(spec.tol, ctx.fund.f.max_abs()), None)
        }
        "hayden_route" => {
            let qh = connection::hayden_q_from_t(&ctx.canonical.torsion_lower)?;
            result_from(spec, qh.residual(&ctx.canonical.q_lower)?, ctx.tol_for(spec.tol, qh.max_abs()), None)
        }
        "projection_sum" => {
            let t = &ctx.canonical.torsion_lower;
            let proj = connection::torsion_projections(t, s)?;
            let sum = proj.p1.add(&proj.p2)?.add(&proj.p3)?.add(&proj.p4)?;
            result_from(spec, sum.residual(t)?, ctx.tol_for(spec.tol, t.max_abs()), None)
        }
        "curvature_symmetries" => {
            let base = curvature::curvature_levi_civita(s, fm, &ctx.conn)?;
            let prime = curvature::curvature(
                &ctx.canonical.gamma_prime.gamma,
                fm,
                s,
                "canonical",
                ctx.chart_named,
            )?;
            let cb = curvature::kahler_tensor_check(&base.r, s, tols);
            let cp = curvature::kahler_tensor_check(&prime.r, s, tols);
            let worst = cb
                .antisym_first_pair
                .max(cb.antisym_second_pair)
                .max(cb.bianchi)
                .max(cp.antisym_first_pair)
                .max(cp.antisym_second_pair)
                .max(cp.j_invariance);
            let scale = base.r.max_abs().max(prime.r.max_abs());
            result_from(spec, worst, ctx.tol_for(spec.tol, scale), None)
        }
        "curvature_dual_route" => {
            let base = curvature::curvature_levi_civita(s, fm, &ctx.conn)?;
            let direct = curvature::curvature(
                &ctx.canonical.gamma_prime.gamma,
                fm,
                s,
                "canonical",
                ctx.chart_named,
            )?;
            let via = curvature::rprime_via_deformation(&ctx.canonical, &ctx.conn, &base, fm, s)?;
            result_from(spec, via.r.residual(&direct.r)?, ctx.tol_for(spec.tol, direct.r.max_abs()), None)
        }
        "ricci_dual_route" => {
            let base = curvature::curvature_levi_civita(s, fm, &ctx.conn)?;
            let direct = curvature::curvature(
                &ctx.canonical.gamma_prime.gamma,
                fm,
                s,
                "canonical",
                ctx.chart_named,
            )?;
            let rho = curvature::ricci_via_deformation(&ctx.canonical, &ctx.conn, &base, fm, s)?;
            result_from(spec, rho.residual(&direct.ricci)?, ctx.tol_for(spec.tol, direct.ricci.max_abs()), None)
        }
        "scalar_relation" => {
            let rel = curvature::scalar_relation_check(s, fm, tols)?;
            let scale = 1.0 + rel.tau.abs() + rel.tau_prime.abs();
            let worst = rel.residual.max(rel.contraction_route_residual).max(rel.p_route_residual);
            let note = match rel.measured_ratio {
                Some(r) => format!("tau = {:.6}, tau' = {:.6}, (tau'-tau)/||nabla J|| = {r:.6}", rel.tau, rel.tau_prime),
                None => format!("tau = {:.6}, tau' = {:.6}, ||nabla J|| = {:.3e}", rel.tau, rel.tau_prime, rel.norm_nabla_j),
            };
            result_from(spec, worst, ctx.tol_for(spec.tol, scale), Some(note))
        }
        "isotropy_scalar_equivalence" => {
            let rel = curvature::scalar_relation_check(s, fm, tols)?;
            result_from(spec, if rel.isotropy_equivalence { 0.0 } else { 1.0 }, 0.5, None)
        }
        "kahler_bianchi_equivalence" => {
            let lhs = curvature::bianchi_torsion_residual(&ctx.canonical, fm, s)?;
            let prime = curvature::curvature(
                &ctx.canonical.gamma_prime.gamma,
                fm,
                s,
                "canonical",
                ctx.chart_named,
            )?;
            let srp = curvature::cyclic_sum4(&prime.r);
            let r = lhs.residual(&srp)?;
            let kc = curvature::kahler_tensor_check(&prime.r, s, tols);
            let agrees = kc.is_kahler == (lhs.max_abs() <= tols.membership(prime.r.max_abs()));
            let tol = ctx.tol_for(spec.tol, srp.max_abs());
            result_from(
                spec,
                if agrees { r } else { tol.max(1.0) * 2.0 },
                tol,
                Some(format!("|S_cyc R'| = {:.3e}; Kahler verdict {}", srp.max_abs(), kc.is_kahler)),
            )
        }
        "kahler_curvature_consequence" => {
            let prime = curvature::curvature(
                &ctx.canonical.gamma_prime.gamma,
                fm,
                s,
                "canonical",
                ctx.chart_named,
            )?;
            let kc = curvature::kahler_tensor_check(&prime.r, s, tols);
            if !kc.is_kahler {
                not_applicable(spec, Some(format!("R' not Kahlerian here (Bianchi residual {:.3e})", kc.bianchi)))
            } else {
                let r = curvature::kahler_torsion_orthogonality_residual(s, &ctx.nj);
                result_from(spec, r, ctx.tol_for(spec.tol, ctx.nj.max_abs().powi(2)), None)
            }
        }
        "mean_connection" | "kt_skew_torsion" | "b_kt_natural" => {
            let b = connection::b_connection(&ctx.fund, s, &ctx.conn);
            let kt = connection::kt_connection(&ctx.fund, s, &ctx.conn);
            match spec.id {
                "mean_connection" => {
                    let rs = connection::mean_connection_residuals(&ctx.canonical, &b, &kt);
                    result_from(spec, rs[0].1, ctx.tol_for(spec.tol, ctx.fund.f.max_abs()), None)
                }
                "kt_skew_torsion" => {
                    let rs = connection::mean_connection_residuals(&ctx.canonical, &b, &kt);
                    let qh = kt.q_lower.residual(&kt.torsion_lower.scale(0.5))?;
                    result_from(spec, rs[1].1.max(qh), ctx.tol_for(spec.tol, kt.torsion_lower.max_abs()), None)
                }
                _ => {
                    let rb = connection::naturality_check(&b, s, fm, &ctx.fund, tols)?;
                    let rk = connection::naturality_check(&kt, s, fm, &ctx.fund, tols)?;
                    let worst = rb
                        .nabla_prime_j
                        .max(rb.nabla_prime_g)
                        .max(rk.nabla_prime_j)
                        .max(rk.nabla_prime_g);
                    result_from(spec, worst, ctx.tol_for(spec.tol, ctx.fund.f.max_abs()), None)
                }
            }
        }
        "parallelism_coincidence" | "parallel_torsion_theorems" | "torsion_contractions" => {
            let rep = curvature::parallel_torsion_check(&ctx.canonical, fm, s, tols)?;
            match spec.id {
                "parallelism_coincidence" => result_from(
                    spec,
                    if rep.verdicts_coincide { 0.0 } else { 1.0 },
                    0.5,
                    Some(format!(
                        "nabla'T {:.3e}, nabla'Q {:.3e}, nabla'F {:.3e}, parallel: {}",
                        rep.nabla_prime_t, rep.nabla_prime_q, rep.nabla_prime_f, rep.is_parallel
                    )),
                ),
                "torsion_contractions" => {
                    let pick = |c: &Conditional| match c {
                        Conditional::Verified { residual } | Conditional::Failed { residual } => *residual,
                        Conditional::NotApplicable => 0.0,
                    };
                    if matches!(rep.contraction_qq, Conditional::NotApplicable) {
                        not_applicable(spec, None)
                    } else {
                        let r = pick(&rep.contraction_qq).max(pick(&rep.contraction_jt));
                        result_from(spec, r, ctx.tol_for(spec.tol, 1.0 + ctx.nj.max_abs().powi(2)), None)
                    }
                }
                _ => {
                    if !rep.is_parallel {
                        not_applicable(
                            spec,
                            Some(format!("torsion not parallel (nabla'T = {:.3e})", rep.nabla_prime_t)),
                        )
                    } else {
                        let pick = |c: &Conditional| match c {
                            Conditional::Verified { residual } | Conditional::Failed { residual } => *residual,
                            Conditional::NotApplicable => 0.0,
                        };
                        let r = pick(&rep.parallel_curvature_identity)
                            .max(pick(&rep.parallel_curvature_expanded))
                            .max(pick(&rep.isotropy_conclusion));
                        result_from(spec, r, ctx.tol_for(spec.tol, 1.0), None)
                    }
                }
            }
        }
        "chart_fd_consistency" => match fm {
            FrameModel::Chart(c) => {
                let dim = s.dim();
                let h = c.fd_step;
                let mut worst = 0.0f64;
                // exact vs FD metric partials
                let dg = c.metric_partials_at(&c.point);
                for m in 0..dim {
                    let mut up = c.point.clone();
                    up[m] += h;
                    let mut dn = c.point.clone();
                    dn[m] -= h;
                    let fd = c.metric_at(&up).sub(&c.metric_at(&dn))?.scale(0.5 / h);
                    worst = worst.max(dg[m].residual(&fd)?);
                    let dj = c.j_partials_at(&c.point);
                    let fdj = c.j_at(&up).sub(&c.j_at(&dn))?.scale(0.5 / h);
                    worst = worst.max(dj[m].residual(&fdj)?);
                }
                // exact vs FD Christoffels
                let mut dg_fd = Vec::with_capacity(dim);
                for m in 0..dim {
                    let mut up = c.point.clone();
                    up[m] += h;
                    let mut dn = c.point.clone();
                    dn[m] -= h;
                    dg_fd.push(c.metric_at(&up).sub(&c.metric_at(&dn))?.scale(0.5 / h));
                }
                let fd_conn = frame::christoffel(s.metric_inv(), &dg_fd);
                worst = worst.max(ctx.conn.gamma.residual(&fd_conn.gamma)?);
                result_from(spec, worst, ctx.tols.fd(), None)
            }
            _ => not_applicable(spec, None),
        },
        other => not_applicable(spec, Some(format!("unknown check `{other}`"))),
    };
    Ok(out)
}

/// Runs the registry (optionally a filtered subset of check ids) against one
/// instance and assembles the report.
pub fn run_checks(ctx: &InstanceContext<'_>, only: Option<&[String]>) -> Result<VerificationReport> {
    let mut checks = Vec::new();
    for spec in CHECKS {
        if let Some(filter) = only {
            if !filter.iter().any(|f| f == spec.id) {
                continue;
            }
        }
        checks.push(run_one(spec, ctx)?);
    }
    let mut summary = Summary::default();
    for c in &checks {
        match c.verdict {
            Verdict::Pass => summary.pass += 1,
            Verdict::Fail => summary.fail += 1,
            Verdict::NotApplicable => summary.not_applicable += 1,
        }
    }
    Ok(VerificationReport {
        instance: ctx.name.clone(),
        toolkit_version: TOOLKIT_VERSION.to_string(),
        provenance: ctx.provenance.clone(),
        checks,
        summary,
    })
}

/// Convenience wrapper: build the context and run every applicable check.
pub fn verify_instance(
    name: &str,
    structure: &NordenStructure,
    frame_model: &FrameModel,
    provenance: Option<Provenance>,
    tols: Tolerances,
    only: Option<&[String]>,
) -> Result<VerificationReport> {
    let ctx = InstanceContext::build(name, structure, frame_model, provenance, tols)?;
    run_checks(&ctx, only)
}

/// A deliberately broken deformation used as a negative control: violates the
/// metric condition, so naturality must fail.
pub fn negative_control_q(structure: &NordenStructure, conn: &frame::ConnectionCoeffs) -> DeformedConnection {
    let dim = structure.dim();
    let q = DenseTensor::from_fn3(dim, crate::tensor::LOWER3, |i, j, k| {
        0.05 * ((i + 1) as f64) * ((j + k + 1) as f64)
    });
    DeformedConnection::from_q(ConnectionKind::Custom("negative-control".into()), structure, conn, q)
}
