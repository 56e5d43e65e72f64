//! The structure (M, J, g): almost complex structure, Norden metric, the
//! associated metric, and the frame model carrying brackets or derivatives.
//!
//! Two frame models are supported. A `lie_algebra` model is a left-invariant
//! structure on a Lie group given by structure constants `C^k_{ij}` with
//! `[e_i, e_j] = C^k_{ij} e_k`; all tensors are constant in the frame and the
//! bracket carries the geometry. A `chart` model is a single coordinate chart
//! with polynomial entries for `g_{ij}(u)` and `J^i_j(u)`, evaluated at a
//! marked point; coordinate fields commute and derivatives are taken exactly
//! (polynomial calculus) or by central finite differences.

use serde::{Deserialize, Serialize};

use crate::error::{NordenError, Result};
use crate::linalg;
use crate::poly::Poly;
use crate::tensor::{contract, DenseTensor, Variance, LOWER2, MIXED11, ULL};
use crate::tol::Tolerances;

/// A validated almost complex structure with Norden metric on R^{2n}.
#[derive(Debug, Clone)]
pub struct NordenStructure {
    dim: usize,
    g: DenseTensor,
    g_inv: DenseTensor,
    j: DenseTensor,
    g_assoc: DenseTensor,
}

impl NordenStructure {
    /// Builds the structure from metric components `g_{ij}` and complex
    /// structure components `J^i_j`, computing `g^{ij}` and the associated
    /// metric. Axioms are NOT checked here; see [`validate`].
    pub fn new(g: DenseTensor, j: DenseTensor) -> Result<Self> {
        if g.dim() != j.dim() {
            return Err(NordenError::DimMismatch(g.dim(), j.dim()));
        }
        if g.rank() != 2 || j.rank() != 2 {
            return Err(NordenError::RankMismatch { expected: 2, got: g.rank().max(j.rank()) });
        }
        let g_inv = linalg::invert(&g)?;
        let g_assoc = associated_metric_of(&g, &j);
        Ok(Self { dim: g.dim(), g, g_inv, j, g_assoc })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Half-dimension n (signature is (n, n)).
    pub fn half_dim(&self) -> usize {
        self.dim / 2
    }

    pub fn metric(&self) -> &DenseTensor {
        &self.g
    }

    pub fn metric_inv(&self) -> &DenseTensor {
        &self.g_inv
    }

    pub fn complex_structure(&self) -> &DenseTensor {
        &self.j
    }

    /// The associated Norden metric g̃(x,y) = g(x, Jy).
    pub fn assoc_metric(&self) -> &DenseTensor {
        &self.g_assoc
    }
}

/// g̃_{ij} = g_{im} J^m_j.
pub fn associated_metric_of(g: &DenseTensor, j: &DenseTensor) -> DenseTensor {
    let dim = g.dim();
    DenseTensor::from_fn2(dim, LOWER2, |i, jj| {
        (0..dim).map(|m| g.at2(i, m) * j.at2(m, jj)).sum()
    })
}

/// Returns g̃ after checking its own Norden-metric invariants (symmetry and
/// signature (n,n)).
pub fn associated_metric(structure: &NordenStructure) -> Result<DenseTensor> {
    let gt = structure.assoc_metric().clone();
    linalg::require_symmetric(&gt, 1e-9 * (1.0 + gt.max_abs()))?;
    let n = structure.half_dim();
    let (pos, neg) = linalg::signature(&gt, 1e-10)?;
    if pos != n || neg != n {
        return Err(NordenError::WrongSignature);
    }
    Ok(gt)
}

/// Left-invariant frame: structure constants `C^k_{ij}`, slots (k, i, j).
#[derive(Debug, Clone)]
pub struct LieFrame {
    pub structure_constants: DenseTensor,
}

impl LieFrame {
    pub fn new(structure_constants: DenseTensor) -> Result<Self> {
        if structure_constants.rank() != 3 {
            return Err(NordenError::RankMismatch { expected: 3, got: structure_constants.rank() });
        }
        Ok(Self { structure_constants })
    }

    pub fn dim(&self) -> usize {
        self.structure_constants.dim()
    }

    /// Max-norm of the antisymmetry defect C^k_{ij} + C^k_{ji}.
    pub fn antisymmetry_residual(&self) -> f64 {
        let c = &self.structure_constants;
        let dim = c.dim();
        let mut worst = 0.0f64;
        for k in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    worst = worst.max((c.at3(k, i, j) + c.at3(k, j, i)).abs());
                }
            }
        }
        worst
    }

    /// Max-norm of the cyclic Jacobi sum `[[x,y],z] + [[y,z],x] + [[z,x],y]`.
    pub fn jacobi_residual(&self) -> f64 {
        let c = &self.structure_constants;
        let dim = c.dim();
        let mut worst = 0.0f64;
        for l in 0..dim {
            for i in 0..dim {
                for j in 0..dim {
                    for k in 0..dim {
                        let mut sum = 0.0;
                        for m in 0..dim {
                            sum += c.at3(m, i, j) * c.at3(l, m, k)
                                + c.at3(m, j, k) * c.at3(l, m, i)
                                + c.at3(m, k, i) * c.at3(l, m, j);
                        }
                        worst = worst.max(sum.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Polynomial chart frame. `metric[i][j]` and `j_entries[i][j]` are
/// polynomials in the chart coordinates; `point` is where tensors are read.
#[derive(Debug, Clone)]
pub struct ChartFrame {
    pub metric: Vec<Vec<Poly>>,
    pub j_entries: Vec<Vec<Poly>>,
    pub point: Vec<f64>,
    pub fd_step: f64,
}

impl ChartFrame {
    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn metric_at(&self, u: &[f64]) -> DenseTensor {
        let dim = self.dim();
        DenseTensor::from_fn2(dim, LOWER2, |i, j| self.metric[i][j].eval(u))
    }

    pub fn j_at(&self, u: &[f64]) -> DenseTensor {
        let dim = self.dim();
        DenseTensor::from_fn2(dim, MIXED11, |i, j| self.j_entries[i][j].eval(u))
    }

    pub fn structure_at(&self, u: &[f64]) -> Result<NordenStructure> {
        NordenStructure::new(self.metric_at(u), self.j_at(u))
    }

    /// Exact partials `dg[m][i][j] = ∂_m g_{ij}` at `u`.
    pub fn metric_partials_at(&self, u: &[f64]) -> Vec<DenseTensor> {
        let dim = self.dim();
        (0..dim)
            .map(|m| DenseTensor::from_fn2(dim, LOWER2, |i, j| self.metric[i][j].partial(m).eval(u)))
            .collect()
    }

    /// Exact partials `dJ[m][i][j] = ∂_m J^i_j` at `u`.
    pub fn j_partials_at(&self, u: &[f64]) -> Vec<DenseTensor> {
        let dim = self.dim();
        (0..dim)
            .map(|m| DenseTensor::from_fn2(dim, MIXED11, |i, j| self.j_entries[i][j].partial(m).eval(u)))
            .collect()
    }

    /// The 2*dim central-difference stencil points around `point`.
    pub fn stencil_points(&self) -> Vec<Vec<f64>> {
        let dim = self.dim();
        let mut pts = Vec::with_capacity(2 * dim);
        for m in 0..dim {
            for sign in [-1.0, 1.0] {
                let mut u = self.point.clone();
                u[m] += sign * self.fd_step;
                pts.push(u);
            }
        }
        pts
    }
}

/// Frame carrier: brackets (Lie algebra) or polynomial chart data.
#[derive(Debug, Clone)]
pub enum FrameModel {
    LieAlgebra(LieFrame),
    Chart(ChartFrame),
}

impl FrameModel {
    pub fn dim(&self) -> usize {
        match self {
            FrameModel::LieAlgebra(f) => f.dim(),
            FrameModel::Chart(f) => f.dim(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FrameModel::LieAlgebra(_) => "lie_algebra",
            FrameModel::Chart(_) => "chart",
        }
    }
}

/// Bracket of two frame vectors. In chart mode coordinate fields commute, so
/// the bracket of constant-coefficient fields is zero.
pub fn bracket(frame: &FrameModel, x: &DenseTensor, y: &DenseTensor) -> Result<DenseTensor> {
    let dim = frame.dim();
    if x.dim() != dim || y.dim() != dim {
        return Err(NordenError::DimMismatch(x.dim(), dim));
    }
    match frame {
        FrameModel::Chart(_) => DenseTensor::zeros(dim, &[Variance::Upper]),
        FrameModel::LieAlgebra(f) => {
            // [x,y]^k = C^k_{ij} x^i y^j
            let cx = contract(&f.structure_constants, 1, x, 0)?;
            contract(&cx, 1, y, 0)
        }
    }
}

/// One validated invariant with its residual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationEntry {
    pub invariant: String,
    pub residual: f64,
    pub tolerance: f64,
    pub ok: bool,
}

/// Result of [`validate`]: pass, or the list of violated invariants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub entries: Vec<ValidationEntry>,
}

impl ValidationOutcome {
    pub fn is_valid(&self) -> bool {
        self.entries.iter().all(|e| e.ok)
    }

    pub fn violations(&self) -> impl Iterator<Item = &ValidationEntry> {
        self.entries.iter().filter(|e| !e.ok)
    }

    fn push(&mut self, invariant: &str, residual: f64, tolerance: f64) {
        self.entries.push(ValidationEntry {
            invariant: invariant.to_string(),
            residual,
            tolerance,
            ok: residual <= tolerance,
        });
    }
}

fn axiom_residuals(out: &mut ValidationOutcome, g: &DenseTensor, j: &DenseTensor, tols: &Tolerances, label: &str) {
    let dim = g.dim();
    let tol = tols.identity(g.max_abs().max(j.max_abs()).max(1.0));
    // J^2 = -id
    let mut jj_res = 0.0f64;
    for i in 0..dim {
        for k in 0..dim {
            let mut sum = 0.0;
            for m in 0..dim {
                sum += j.at2(i, m) * j.at2(m, k);
            }
            let expect = if i == k { -1.0 } else { 0.0 };
            jj_res = jj_res.max((sum - expect).abs());
        }
    }
    out.push(&format!("{label}J^2 = -id"), jj_res, tol);
    // g(Jx, Jy) = -g(x, y)
    let mut anti = 0.0f64;
    for i in 0..dim {
        for k in 0..dim {
            let mut sum = 0.0;
            for a in 0..dim {
                for b in 0..dim {
                    sum += j.at2(a, i) * g.at2(a, b) * j.at2(b, k);
                }
            }
            anti = anti.max((sum + g.at2(i, k)).abs());
        }
    }
    out.push(&format!("{label}g(Jx,Jy) = -g(x,y)"), anti, tol);
    out.push(&format!("{label}g symmetric"), linalg::asymmetry(g), tol);
    // signatures of g and of the associated metric
    let n = dim / 2;
    match linalg::signature(g, 1e-10) {
        Ok((pos, neg)) if pos == n && neg == n => out.push(&format!("{label}signature(g) = (n,n)"), 0.0, 1.0),
        Ok(_) => out.push(&format!("{label}signature(g) = (n,n)"), 1.0, 0.5),
        Err(_) => out.push(&format!("{label}g nondegenerate"), f64::INFINITY, tol),
    }
    let gt = associated_metric_of(g, j);
    out.push(&format!("{label}assoc metric symmetric"), linalg::asymmetry(&gt), tol);
    match linalg::signature(&gt, 1e-10) {
        Ok((pos, neg)) if pos == n && neg == n => out.push(&format!("{label}signature(assoc) = (n,n)"), 0.0, 1.0),
        Ok(_) => out.push(&format!("{label}signature(assoc) = (n,n)"), 1.0, 0.5),
        Err(_) => out.push(&format!("{label}assoc nondegenerate"), f64::INFINITY, tol),
    }
}

/// Validates every structure invariant: J² = -id, anti-isometry, symmetry and
/// (n,n) signature of both metrics, g·g⁻¹ = id, and the frame's own
/// invariants (bracket antisymmetry and Jacobi in Lie mode; axioms at the
/// evaluation point and all stencil points in chart mode).
pub fn validate(structure: &NordenStructure, frame: &FrameModel, tols: &Tolerances) -> Result<ValidationOutcome> {
    let mut out = ValidationOutcome { entries: Vec::new() };
    if structure.dim() != frame.dim() {
        return Err(NordenError::DimMismatch(structure.dim(), frame.dim()));
    }
    axiom_residuals(&mut out, structure.metric(), structure.complex_structure(), tols, "");
    // g_inv * g = id
    let dim = structure.dim();
    let mut inv_res = 0.0f64;
    for i in 0..dim {
        for k in 0..dim {
            let mut sum = 0.0;
            for m in 0..dim {
                sum += structure.metric_inv().at2(i, m) * structure.metric().at2(m, k);
            }
            let expect = if i == k { 1.0 } else { 0.0 };
            inv_res = inv_res.max((sum - expect).abs());
        }
    }
    out.push("g_inv . g = id", inv_res, tols.identity(structure.metric_inv().max_abs()));
    match frame {
        FrameModel::LieAlgebra(f) => {
            let scale = f.structure_constants.max_abs();
            out.push("bracket antisymmetry", f.antisymmetry_residual(), tols.identity(scale));
            out.push("Jacobi identity", f.jacobi_residual(), tols.identity(scale * scale));
        }
        FrameModel::Chart(f) => {
            let res_point = structure
                .metric()
                .residual(&f.metric_at(&f.point))
                .unwrap_or(f64::INFINITY)
                .max(structure.complex_structure().residual(&f.j_at(&f.point)).unwrap_or(f64::INFINITY));
            out.push("structure matches chart at point", res_point, tols.identity(structure.metric().max_abs()));
            for (s, u) in f.stencil_points().iter().enumerate() {
                let g = f.metric_at(u);
                let j = f.j_at(u);
                axiom_residuals(&mut out, &g, &j, tols, &format!("stencil {s}: "));
            }
        }
    }
    Ok(out)
}

/// Validates and returns an error naming the first violated invariant.
pub fn validate_strict(structure: &NordenStructure, frame: &FrameModel, tols: &Tolerances) -> Result<ValidationOutcome> {
    let out = validate(structure, frame, tols)?;
    let violations: Vec<&ValidationEntry> = out.violations().collect();
    if violations.is_empty() {
        return Ok(out);
    }
    // report the most specific failure class first
    if violations.iter().any(|v| v.invariant.contains("signature")) {
        return Err(NordenError::WrongSignature);
    }
    if violations.iter().any(|v| v.invariant.contains("symmetric")) {
        return Err(NordenError::MetricNotSymmetric);
    }
    if let Some(v) = violations.iter().find(|v| v.invariant.contains("Jacobi")) {
        return Err(NordenError::JacobiViolation(v.residual));
    }
    let v = violations[0];
    Err(NordenError::InvalidStructure(format!(
        "{} (residual {:.3e}, tolerance {:.3e})",
        v.invariant, v.residual, v.tolerance
    )))
}

// ---------------------------------------------------------------------------
// Model file format
// ---------------------------------------------------------------------------

/// Optional provenance block echoed by generated model files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub recipe: String,
    pub seed: u64,
    #[serde(default)]
    pub budget: u64,
}

/// On-disk model document. Indices inside `structure_constants` are 1-based,
/// matching the frame labels e_1 ... e_2n; they are converted on load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub kind: String,
    pub dim: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric: Option<Vec<Vec<f64>>>,
    #[serde(rename = "J", skip_serializing_if = "Option::is_none")]
    pub j: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub structure_constants: Option<Vec<(usize, usize, usize, f64)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub metric_poly: Option<Vec<Vec<Poly>>>,
    #[serde(rename = "J_poly", skip_serializing_if = "Option::is_none")]
    pub j_poly: Option<Vec<Vec<Poly>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub point: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

fn matrix_to_tensor(dim: usize, rows: &[Vec<f64>], variance: [Variance; 2]) -> Result<DenseTensor> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(NordenError::ModelFormat(format!("matrix must be {dim}x{dim}")));
    }
    Ok(DenseTensor::from_fn2(dim, variance, |i, j| rows[i][j]))
}

fn tensor_to_matrix(t: &DenseTensor) -> Vec<Vec<f64>> {
    let dim = t.dim();
    (0..dim).map(|i| (0..dim).map(|j| t.at2(i, j)).collect()).collect()
}

impl ModelFile {
    pub fn into_instance(self) -> Result<(NordenStructure, FrameModel)> {
        let dim = self.dim;
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(NordenError::OddDimension(dim));
        }
        match self.kind.as_str() {
            "lie_algebra" => {
                let g = matrix_to_tensor(
                    dim,
                    self.metric.as_deref().ok_or_else(|| NordenError::ModelFormat("missing field `metric`".into()))?,
                    LOWER2,
                )?;
                let j = matrix_to_tensor(
                    dim,
                    self.j.as_deref().ok_or_else(|| NordenError::ModelFormat("missing field `J`".into()))?,
                    MIXED11,
                )?;
                let mut c = DenseTensor::zeros(dim, &ULL)?;
                for &(i, jj, k, value) in self.structure_constants.as_deref().unwrap_or(&[]) {
                    if i == 0 || jj == 0 || k == 0 || i > dim || jj > dim || k > dim {
                        return Err(NordenError::ModelFormat(format!(
                            "structure constant indices must be in 1..={dim}, got [{i},{jj},{k}]"
                        )));
                    }
                    // file stores [i, j, k, value] with [e_i, e_j] = value * e_k
                    c.set(&[k - 1, i - 1, jj - 1], value);
                    c.set(&[k - 1, jj - 1, i - 1], -value);
                }
                let frame = FrameModel::LieAlgebra(LieFrame::new(c)?);
                Ok((NordenStructure::new(g, j)?, frame))
            }
            "chart" => {
                let metric = self
                    .metric_poly
                    .ok_or_else(|| NordenError::ModelFormat("missing field `metric_poly`".into()))?;
                let j_entries =
                    self.j_poly.ok_or_else(|| NordenError::ModelFormat("missing field `J_poly`".into()))?;
                let point = self.point.ok_or_else(|| NordenError::ModelFormat("missing field `point`".into()))?;
                if metric.len() != dim || j_entries.len() != dim || point.len() != dim {
                    return Err(NordenError::ModelFormat("chart entries must match dim".into()));
                }
                let chart = ChartFrame {
                    metric,
                    j_entries,
                    point,
                    fd_step: self.fd_step.unwrap_or(1e-5),
                };
                let structure = chart.structure_at(&chart.point.clone())?;
                Ok((structure, FrameModel::Chart(chart)))
            }
            other => Err(NordenError::ModelFormat(format!("unknown kind `{other}`"))),
        }
    }

    pub fn from_instance(structure: &NordenStructure, frame: &FrameModel, provenance: Option<Provenance>) -> Self {
        match frame {
            FrameModel::LieAlgebra(f) => {
                let dim = structure.dim();
                let c = &f.structure_constants;
                let mut entries = Vec::new();
                for i in 0..dim {
                    for j in (i + 1)..dim {
                        for k in 0..dim {
                            let v = c.at3(k, i, j);
                            if v != 0.0 {
                                entries.push((i + 1, j + 1, k + 1, v));
                            }
                        }
                    }
                }
                ModelFile {
                    kind: "lie_algebra".into(),
                    dim,
                    metric: Some(tensor_to_matrix(structure.metric())),
                    j: Some(tensor_to_matrix(structure.complex_structure())),
                    structure_constants: Some(entries),
                    metric_poly: None,
                    j_poly: None,
                    point: None,
                    fd_step: None,
                    provenance,
                }
            }
            FrameModel::Chart(f) => ModelFile {
                kind: "chart".into(),
                dim: f.dim(),
                metric: None,
                j: None,
                structure_constants: None,
                metric_poly: Some(f.metric.clone()),
                j_poly: Some(f.j_entries.clone()),
                point: Some(f.point.clone()),
                fd_step: Some(f.fd_step),
                provenance,
            },
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Loads a model file and builds the instance.
pub fn load_model(path: &std::path::Path) -> Result<(NordenStructure, FrameModel, Option<Provenance>)> {
    let text = std::fs::read_to_string(path)?;
    let file = ModelFile::from_json(&text)?;
    let prov = file.provenance.clone();
    let (s, f) = file.into_instance()?;
    Ok((s, f, prov))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forge;
    use crate::tol::Tolerances;

    #[test]
    fn flat_model_validates() {
        let (s, f) = forge::flat_model(2).unwrap();
        let out = validate(&s, &f, &Tolerances::default()).unwrap();
        assert!(out.is_valid(), "violations: {:?}", out.violations().collect::<Vec<_>>());
    }

    #[test]
    fn definite_metric_fails_signature() {
        let dim = 4;
        let g = DenseTensor::from_fn2(dim, LOWER2, |i, j| if i == j { 1.0 } else { 0.0 });
        let (_, flat_frame) = forge::flat_model(2).unwrap();
        let j = forge::flat_model(2).unwrap().0.complex_structure().clone();
        let s = NordenStructure::new(g, j).unwrap();
        let err = validate_strict(&s, &flat_frame, &Tolerances::default()).unwrap_err();
        assert_eq!(err.to_string(), "signature must be (n,n)");
    }

    #[test]
    fn assoc_metric_twice_negates() {
        let (s, _) = forge::flat_model(3).unwrap();
        let gt = associated_metric(&s).unwrap();
        // pairing with J twice: g(x, J(Jy)) = -g(x,y)
        let s2 = NordenStructure::new(gt, s.complex_structure().clone()).unwrap();
        let gtt = s2.assoc_metric();
        let neg = s.metric().scale(-1.0);
        assert!(gtt.residual(&neg).unwrap() < 1e-12);
    }

    #[test]
    fn associated_metric_matches_loop_oracle() {
        let (s, _) = forge::quasi_kahler_search(2, 7, 100).unwrap();
        let dim = s.dim();
        let g = s.metric();
        let j = s.complex_structure();
        let gt = s.assoc_metric();
        for i in 0..dim {
            for jj in 0..dim {
                let mut oracle = 0.0;
                for k in 0..dim {
                    oracle += g.at2(i, k) * j.at2(k, jj);
                }
                assert!((gt.at2(i, jj) - oracle).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bracket_matches_structure_constant_table() {
        let (s, f) = forge::quasi_kahler_search(2, 7, 100).unwrap();
        let dim = s.dim();
        let c = match &f {
            FrameModel::LieAlgebra(l) => l.structure_constants.clone(),
            _ => unreachable!(),
        };
        let e1 = DenseTensor::from_components(dim, &[Variance::Upper], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let e2 = DenseTensor::from_components(dim, &[Variance::Upper], vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        let b = bracket(&f, &e1, &e2).unwrap();
        for k in 0..dim {
            assert!((b.get(&[k]) - c.at3(k, 0, 1)).abs() < 1e-15);
        }
    }

    #[test]
    fn bracket_antisymmetric_and_abelian() {
        let (s, f) = forge::flat_model(2).unwrap();
        let dim = s.dim();
        let e1 = DenseTensor::from_components(dim, &[Variance::Upper], vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let out = bracket(&f, &e1, &e1).unwrap();
        assert_eq!(out.max_abs(), 0.0);
        // abelian: any pair brackets to zero
        let e2 = DenseTensor::from_components(dim, &[Variance::Upper], vec![0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(bracket(&f, &e1, &e2).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn model_file_round_trip() {
        let (s, f) = forge::quasi_kahler_search(2, 7, 100).unwrap();
        let file = ModelFile::from_instance(&s, &f, Some(Provenance { recipe: "quasi_kahler_search".into(), seed: 7, budget: 100 }));
        let json = file.to_json().unwrap();
        let back = ModelFile::from_json(&json).unwrap();
        assert_eq!(file, back);
        let (s2, f2) = back.into_instance().unwrap();
        assert!(s.metric().residual(s2.metric()).unwrap() < 1e-15);
        match (&f, &f2) {
            (FrameModel::LieAlgebra(a), FrameModel::LieAlgebra(b)) => {
                assert!(a.structure_constants.residual(&b.structure_constants).unwrap() < 1e-15);
            }
            _ => panic!("expected lie_algebra"),
        }
    }

    #[test]
    fn malformed_model_reports_field() {
        let text = r#"{ "kind": "lie_algebra", "dim": 4 }"#;
        let err = ModelFile::from_json(text).unwrap().into_instance().unwrap_err();
        assert!(err.to_string().contains("metric"));
    }
}
