//! Instance generation: flat Kähler models, random Norden structures,
//! quasi-Kähler Lie algebras, and best-effort searches for isotropic and
//! parallel-torsion instances.
//!
//! The quasi-Kähler search works inside a Jacobi-feasible linear family:
//! brackets whose lowered tensor `C_{ijk} = g([e_i,e_j], e_k)` is totally
//! antisymmetric on a J-invariant 4-dimensional block. On such blocks both
//! the Jacobi identity and the cyclic-sum membership condition hold for every
//! choice of the four block parameters, so the search reduces to seeded,
//! exactly-verifiable linear algebra; candidates are still validated against
//! the full cyclic-sum constraint system afterwards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NordenError, Result};
use crate::frame;
use crate::linalg;
use crate::model::{FrameModel, LieFrame, ModelFile, NordenStructure, Provenance};
use crate::tensor::{DenseTensor, LOWER2, MIXED11, ULL};
use crate::tol::Tolerances;

/// Recipe kinds understood by [`generate`] and the corpus manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RecipeKind {
    Flat,
    RandomNorden,
    QuasiKahlerSearch,
    IsotropicSearch,
    ParallelTorsionSearch,
}

impl RecipeKind {
    pub fn name(&self) -> &'static str {
        match self {
            RecipeKind::Flat => "flat",
            RecipeKind::RandomNorden => "random_norden",
            RecipeKind::QuasiKahlerSearch => "quasi_kahler_search",
            RecipeKind::IsotropicSearch => "isotropic_search",
            RecipeKind::ParallelTorsionSearch => "parallel_torsion_search",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "flat" => Some(RecipeKind::Flat),
            "random_norden" | "random" => Some(RecipeKind::RandomNorden),
            "quasi_kahler_search" | "quasi_kahler" | "qk" => Some(RecipeKind::QuasiKahlerSearch),
            "isotropic_search" | "isotropic" => Some(RecipeKind::IsotropicSearch),
            "parallel_torsion_search" | "parallel_torsion" => Some(RecipeKind::ParallelTorsionSearch),
            _ => None,
        }
    }
}

/// A named generation request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecipe {
    pub name: String,
    pub kind: RecipeKind,
    pub dim: usize,
    pub seed: u64,
    #[serde(default = "default_budget")]
    pub search_budget: u64,
}

fn default_budget() -> u64 {
    200
}

/// Outcome of a best-effort search.
#[derive(Debug)]
pub struct SearchResult {
    pub instance: Option<(NordenStructure, FrameModel)>,
    pub best_residual: f64,
}

fn rng_for(kind: RecipeKind, n: usize, seed: u64) -> ChaCha8Rng {
    let mixed = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add((n as u64) << 8)
        .wrapping_add(kind as u64 + 1);
    ChaCha8Rng::seed_from_u64(mixed)
}

/// Flat Kähler model: abelian algebra, `g = diag(+1 ×n, −1 ×n)`,
/// `J e_i = e_{n+i}`, `J e_{n+i} = −e_i`. Satisfies every axiom exactly and
/// has F = 0.
pub fn flat_model(n: usize) -> Result<(NordenStructure, FrameModel)> {
    if n == 0 {
        return Err(NordenError::OddDimension(0));
    }
    let dim = 2 * n;
    let g = DenseTensor::from_fn2(dim, LOWER2, |i, j| {
        if i != j {
            0.0
        } else if i < n {
            1.0
        } else {
            -1.0
        }
    });
    let j = flat_j(n);
    let c = DenseTensor::zeros(dim, &ULL)?;
    Ok((NordenStructure::new(g, j)?, FrameModel::LieAlgebra(LieFrame::new(c)?)))
}

fn flat_j(n: usize) -> DenseTensor {
    let dim = 2 * n;
    DenseTensor::from_fn2(dim, MIXED11, |i, j| {
        if i == j + n {
            1.0
        } else if i + n == j {
            -1.0
        } else {
            0.0
        }
    })
}

/// Random Norden structure: a seeded invertible basis change applied to the
/// flat model (preserving the axioms by congruence/conjugation) plus random
/// two-step nilpotent brackets, which satisfy the Jacobi identity by
/// construction. Rejection-sampled until validation passes and the instance
/// is generically non-quasi-Kähler.
pub fn random_norden(n: usize, seed: u64, budget: u64) -> Result<(NordenStructure, FrameModel)> {
    let dim = 2 * n;
    let mut rng = rng_for(RecipeKind::RandomNorden, n, seed);
    let (flat_s, _) = flat_model(n)?;
    let tols = Tolerances::default();
    for _ in 0..budget.max(1) {
        // basis change A = I + 0.35 R with a conditioning guard
        let a = DenseTensor::from_fn2(dim, MIXED11, |i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            base + 0.35 * (rng.gen::<f64>() * 2.0 - 1.0)
        });
        if !linalg::well_conditioned(&a, 0.25, 4.0) {
            continue;
        }
        let a_inv = match linalg::invert(&a) {
            Ok(m) => m,
            Err(_) => continue,
        };
        let g0 = flat_s.metric();
        let j0 = flat_s.complex_structure();
        let g = DenseTensor::from_fn2(dim, LOWER2, |i, j| {
            let mut sum = 0.0;
            for p in 0..dim {
                for q in 0..dim {
                    sum += a.at2(p, i) * g0.at2(p, q) * a.at2(q, j);
                }
            }
            sum
        });
        let j = DenseTensor::from_fn2(dim, MIXED11, |i, jj| {
            let mut sum = 0.0;
            for p in 0..dim {
                for q in 0..dim {
                    sum += a_inv.at2(i, p) * j0.at2(p, q) * a.at2(q, jj);
                }
            }
            sum
        });
        // two-step nilpotent brackets: non-center elements bracket into the center
        let mut center: Vec<usize> = (0..dim).collect();
        for i in (1..dim).rev() {
            let k = rng.gen_range(0..=i);
            center.swap(i, k);
        }
        center.truncate(n);
        center.sort_unstable();
        let is_center = |i: usize| center.binary_search(&i).is_ok();
        let mut c = DenseTensor::zeros(dim, &ULL)?;
        for i in 0..dim {
            for j2 in (i + 1)..dim {
                if is_center(i) || is_center(j2) {
                    continue;
                }
                for &k in &center {
                    let v = 0.6 * (rng.gen::<f64>() * 2.0 - 1.0);
                    c.set(&[k, i, j2], v);
                    c.set(&[k, j2, i], -v);
                }
            }
        }
        let structure = NordenStructure::new(g, j)?;
        let frame_model = FrameModel::LieAlgebra(LieFrame::new(c)?);
        let validation = crate::model::validate(&structure, &frame_model, &tols)?;
        if !validation.is_valid() {
            continue;
        }
        // reject the rare draws that land near the quasi-Kähler locus or have
        // vanishing F, so negatives stay genuinely negative
        let conn = match frame::levi_civita(&structure, &frame_model) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let nj = frame::nabla_j(&conn, &structure, &frame_model);
        let fund = match frame::fundamental_f(&nj, &structure) {
            Ok(f) => f,
            Err(_) => continue,
        };
        let cyc = frame::cyclic_sum3(&fund.f).max_abs();
        if fund.f.max_abs() < 0.05 || cyc < 1e-3 {
            continue;
        }
        return Ok((structure, frame_model));
    }
    Err(NordenError::GenerationFailed)
}

/// J-invariant 4-blocks available at half-dimension n: coordinate pairs
/// (a, b) with a < b < n; the block spans {e_a, e_b, e_{n+a}, e_{n+b}}.
fn blocks_for(n: usize) -> Vec<[usize; 4]> {
    let mut blocks = Vec::new();
    let mut t = 0;
    while t + 1 < n {
        blocks.push([t, t + 1, n + t, n + t + 1]);
        t += 2;
    }
    blocks
}

/// Basis of the Jacobi-feasible bracket family on one block: the four
/// totally antisymmetric lowered 3-forms on the block coordinates, raised
/// with the flat metric.
fn block_family_basis(n: usize, block: [usize; 4]) -> Vec<DenseTensor> {
    let dim = 2 * n;
    let local_metric = [1.0, 1.0, -1.0, -1.0];
    let mut basis = Vec::with_capacity(4);
    for omit in 0..4 {
        let trip: Vec<usize> = (0..4).filter(|&t| t != omit).collect();
        let (i, j, k) = (trip[0], trip[1], trip[2]);
        let mut lowered = vec![0.0f64; 64];
        let perms: [([usize; 3], f64); 6] = [
            ([i, j, k], 1.0),
            ([j, k, i], 1.0),
            ([k, i, j], 1.0),
            ([j, i, k], -1.0),
            ([i, k, j], -1.0),
            ([k, j, i], -1.0),
        ];
        for (p, s) in perms {
            lowered[(p[0] * 4 + p[1]) * 4 + p[2]] = s;
        }
        let mut c = DenseTensor::zeros(dim, &ULL).expect("even dim");
        for li in 0..4 {
            for lj in 0..4 {
                for lk in 0..4 {
                    let v = lowered[(li * 4 + lj) * 4 + lk];
                    if v != 0.0 {
                        // raise the last slot with the (diagonal) local metric
                        c.set(&[block[lk], block[li], block[lj]], v / local_metric[lk]);
                    }
                }
            }
        }
        basis.push(c);
    }
    basis
}

fn combine(basis: &[DenseTensor], coeffs: &[f64]) -> DenseTensor {
    let dim = basis[0].dim();
    let mut c = DenseTensor::zeros(dim, &ULL).expect("even dim");
    for (b, &x) in basis.iter().zip(coeffs) {
        if x != 0.0 {
            c = c.add(&b.scale(x)).expect("same shape");
        }
    }
    c
}

/// Free antisymmetric components (k, i, j) with i < j, and the constraint
/// matrix rows of the cyclic-sum membership condition over them: the columns
/// are the component directions, the rows the cyclic-sum entries. Used to
/// cross-check that search candidates lie in the constraint null space.
#[allow(clippy::type_complexity)]
pub fn membership_constraint_rows(n: usize) -> (Vec<(usize, usize, usize)>, Vec<Vec<f64>>) {
    let dim = 2 * n;
    let (s, _) = flat_model(n).expect("n >= 1");
    let free: Vec<(usize, usize, usize)> = (0..dim)
        .flat_map(|i| {
            (i + 1..dim).flat_map(move |j| (0..dim).map(move |k| (k, i, j)))
        })
        .collect();
    let mut rows: Vec<Vec<f64>> = vec![Vec::with_capacity(free.len()); dim * dim * dim];
    for &(k, i, j) in &free {
        let mut c = DenseTensor::zeros(dim, &ULL).expect("even dim");
        c.set(&[k, i, j], 1.0);
        c.set(&[k, j, i], -1.0);
        let frame_model = FrameModel::LieAlgebra(LieFrame::new(c).expect("rank 3"));
        let conn = frame::levi_civita_unchecked(&s, &frame_model).expect("koszul");
        let nj = frame::nabla_j(&conn, &s, &frame_model);
        let f = frame::lower_first_slot(&nj, s.metric());
        let cyc = frame::cyclic_sum3(&f);
        for (row, v) in rows.iter_mut().zip(cyc.components()) {
            row.push(*v);
        }
    }
    (free, rows)
}

fn family_candidate(n: usize, rng: &mut ChaCha8Rng) -> Option<DenseTensor> {
    let blocks = blocks_for(n);
    if blocks.is_empty() {
        return None;
    }
    let mut basis = Vec::new();
    for b in &blocks {
        basis.extend(block_family_basis(n, *b));
    }
    let coeffs: Vec<f64> = (0..basis.len()).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
    let norm: f64 = coeffs.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 0.3 {
        return None;
    }
    Some(combine(&basis, &coeffs))
}

fn instance_from_brackets(n: usize, c: DenseTensor) -> Result<(NordenStructure, FrameModel)> {
    let (s, _) = flat_model(n)?;
    let frame_model = FrameModel::LieAlgebra(LieFrame::new(c)?);
    Ok((s, frame_model))
}

fn quasi_kahler_residuals(s: &NordenStructure, f: &FrameModel) -> Result<(f64, f64, f64)> {
    let conn = frame::levi_civita(s, f)?;
    let nj = frame::nabla_j(&conn, s, f);
    let fund = frame::fundamental_f(&nj, s)?;
    let cyc = frame::cyclic_sum3(&fund.f).max_abs();
    let nrm = frame::square_norm_nabla_j(s, &nj);
    Ok((fund.f.max_abs(), cyc, nrm))
}

/// Searches for a quasi-Kähler (non-Kähler) instance: a seeded element of the
/// Jacobi-feasible bracket family, verified against the membership condition,
/// the Jacobi identity and the full structure validation.
pub fn quasi_kahler_search(n: usize, seed: u64, budget: u64) -> Result<(NordenStructure, FrameModel)> {
    let mut rng = rng_for(RecipeKind::QuasiKahlerSearch, n, seed);
    let tols = Tolerances::default();
    for _ in 0..budget.max(1) {
        let Some(c) = family_candidate(n, &mut rng) else {
            return Err(NordenError::NoW3InstanceFound);
        };
        let (s, f) = instance_from_brackets(n, c)?;
        if let FrameModel::LieAlgebra(l) = &f {
            if l.jacobi_residual() > tols.identity(l.structure_constants.max_abs().powi(2)) {
                continue;
            }
        }
        let (f_norm, cyc, _) = quasi_kahler_residuals(&s, &f)?;
        if f_norm < 0.05 || cyc > 1e-9 * (1.0 + f_norm) {
            continue;
        }
        let validation = crate::model::validate(&s, &f, &tols)?;
        if validation.is_valid() {
            return Ok((s, f));
        }
    }
    Err(NordenError::NoW3InstanceFound)
}

/// Searches for an isotropic-Kähler instance: ‖∇J‖ = 0 with ∇J ≠ 0.
///
/// On the bracket family ‖∇J‖ is a quadratic form of the parameters; the
/// search polarizes it numerically, eigendecomposes, and mixes positive- and
/// negative-eigenvalue directions into an exact isotropic vector, so the
/// emitted residual is at rounding level. Absence (a definite form) is a
/// valid outcome reported with the best residual achieved.
pub fn isotropic_search(n: usize, seed: u64, budget: u64) -> Result<SearchResult> {
    let mut rng = rng_for(RecipeKind::IsotropicSearch, n, seed);
    let blocks = blocks_for(n);
    if blocks.is_empty() {
        return Ok(SearchResult { instance: None, best_residual: f64::INFINITY });
    }
    let mut basis = Vec::new();
    for b in &blocks {
        basis.extend(block_family_basis(n, *b));
    }
    let m = basis.len();
    let q_of = |coeffs: &[f64]| -> Result<f64> {
        let (s, f) = instance_from_brackets(n, combine(&basis, coeffs))?;
        let conn = frame::levi_civita(&s, &f)?;
        let nj = frame::nabla_j(&conn, &s, &f);
        Ok(frame::square_norm_nabla_j(&s, &nj))
    };
    // polarize the quadratic form: M_ab = (q(ea+eb) - q(ea-eb)) / 4
    let mut mat = vec![vec![0.0f64; m]; m];
    for a in 0..m {
        for b in a..m {
            let mut plus = vec![0.0; m];
            plus[a] += 1.0;
            plus[b] += 1.0;
            let mut minus = vec![0.0; m];
            minus[a] += 1.0;
            minus[b] -= 1.0;
            let v = (q_of(&plus)? - q_of(&minus)?) / 4.0;
            mat[a][b] = v;
            mat[b][a] = v;
        }
    }
    let (vals, vecs) = linalg::sym_eigen(&mat);
    let pos: Vec<usize> = (0..m).filter(|&i| vals[i] > 1e-9).collect();
    let neg: Vec<usize> = (0..m).filter(|&i| vals[i] < -1e-9).collect();
    let mut best = f64::INFINITY;
    if pos.is_empty() || neg.is_empty() {
        // definite form on the family: record the best rayleigh quotient
        for v in &vals {
            best = best.min(v.abs());
        }
        return Ok(SearchResult { instance: None, best_residual: best });
    }
    let tols = Tolerances::default();
    for _ in 0..budget.max(1) {
        let p = pos[rng.gen_range(0..pos.len())];
        let q = neg[rng.gen_range(0..neg.len())];
        let sign = if rng.gen::<bool>() { 1.0 } else { -1.0 };
        let scale = 0.6 + 0.8 * rng.gen::<f64>();
        let coeffs: Vec<f64> = (0..m)
            .map(|i| scale * (vecs[p][i] / vals[p].sqrt() + sign * vecs[q][i] / (-vals[q]).sqrt()))
            .collect();
        let c = combine(&basis, &coeffs);
        let (s, f) = instance_from_brackets(n, c)?;
        let (f_norm, cyc, nrm) = quasi_kahler_residuals(&s, &f)?;
        best = best.min(nrm.abs());
        // exclude trivially isotropic (Kahler) candidates: need nabla J != 0
        if f_norm < 0.05 {
            continue;
        }
        if nrm.abs() <= 1e-8 && cyc <= 1e-9 * (1.0 + f_norm) {
            let validation = crate::model::validate(&s, &f, &tols)?;
            if validation.is_valid() {
                return Ok(SearchResult { instance: Some((s, f)), best_residual: nrm.abs() });
            }
        }
    }
    Ok(SearchResult { instance: None, best_residual: best })
}

/// Best-effort search for a parallel-torsion instance: minimizes the ratio
/// `max|∇′T| / max|T|` for the canonical connection over the bracket-family
/// sphere by seeded sampling plus compass refinement. Emits only when the
/// ratio drops below 1e-8; otherwise reports the best residual (an expected
/// outcome on this family).
pub fn parallel_torsion_search(n: usize, seed: u64, budget: u64) -> Result<SearchResult> {
    let mut rng = rng_for(RecipeKind::ParallelTorsionSearch, n, seed);
    let blocks = blocks_for(n);
    if blocks.is_empty() {
        return Ok(SearchResult { instance: None, best_residual: f64::INFINITY });
    }
    let mut basis = Vec::new();
    for b in &blocks {
        basis.extend(block_family_basis(n, *b));
    }
    let m = basis.len();
    let ratio_of = |coeffs: &[f64]| -> Result<f64> {
        let (s, f) = instance_from_brackets(n, combine(&basis, coeffs))?;
        let conn = frame::levi_civita(&s, &f)?;
        let nj = frame::nabla_j(&conn, &s, &f);
        let dc = crate::connection::canonical_connection(&s, &conn, &nj, false)?;
        let t_norm = dc.torsion_lower.max_abs();
        if t_norm < 1e-6 {
            return Ok(f64::INFINITY); // Kahler direction: excluded
        }
        let nabla_t = frame::cov_deriv3(&dc.gamma_prime, &dc.torsion_lower, None);
        Ok(nabla_t.max_abs() / t_norm)
    };
    let mut best = f64::INFINITY;
    let mut best_coeffs: Option<Vec<f64>> = None;
    let mut evals = 0u64;
    while evals < budget.max(1) {
        let mut x: Vec<f64> = (0..m).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
        let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm < 0.2 {
            continue;
        }
        for v in &mut x {
            *v /= norm;
        }
        let mut fx = ratio_of(&x)?;
        evals += 1;
        // compass refinement on the sphere
        let mut step = 0.25;
        while step > 1e-6 && evals < budget.max(1) {
            let mut improved = false;
            for d in 0..m {
                for sgn in [1.0, -1.0] {
                    let mut y = x.clone();
                    y[d] += sgn * step;
                    let ny: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
                    for v in &mut y {
                        *v /= ny;
                    }
                    let fy = ratio_of(&y)?;
                    evals += 1;
                    if fy < fx {
                        x = y;
                        fx = fy;
                        improved = true;
                    }
                    if evals >= budget.max(1) {
                        break;
                    }
                }
                if evals >= budget.max(1) {
                    break;
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        if fx < best {
            best = fx;
            best_coeffs = Some(x.clone());
        }
    }
    if best <= 1e-8 {
        if let Some(coeffs) = best_coeffs {
            let (s, f) = instance_from_brackets(n, combine(&basis, &coeffs))?;
            return Ok(SearchResult { instance: Some((s, f)), best_residual: best });
        }
    }
    Ok(SearchResult { instance: None, best_residual: best })
}

/// A generated instance plus its provenance and headline residuals.
pub struct Generated {
    pub structure: NordenStructure,
    pub frame: FrameModel,
    pub provenance: Provenance,
    /// For searches that may fail, the best residual achieved.
    pub search_residual: Option<f64>,
}

/// Runs a recipe. Search recipes return `Ok(None)` inside [`Generated`] terms
/// by yielding an error-free `None` — callers decide how to surface absence.
pub fn generate(recipe: &InstanceRecipe) -> Result<Option<Generated>> {
    if recipe.dim < 2 || !recipe.dim.is_multiple_of(2) {
        return Err(NordenError::OddDimension(recipe.dim));
    }
    let n = recipe.dim / 2;
    let provenance = Provenance {
        recipe: recipe.kind.name().to_string(),
        seed: recipe.seed,
        budget: recipe.search_budget,
    };
    let out = match recipe.kind {
        RecipeKind::Flat => {
            let (s, f) = flat_model(n)?;
            Some(Generated { structure: s, frame: f, provenance, search_residual: None })
        }
        RecipeKind::RandomNorden => {
            let (s, f) = random_norden(n, recipe.seed, recipe.search_budget)?;
            Some(Generated { structure: s, frame: f, provenance, search_residual: None })
        }
        RecipeKind::QuasiKahlerSearch => {
            let (s, f) = quasi_kahler_search(n, recipe.seed, recipe.search_budget)?;
            Some(Generated { structure: s, frame: f, provenance, search_residual: None })
        }
        RecipeKind::IsotropicSearch => {
            let res = isotropic_search(n, recipe.seed, recipe.search_budget)?;
            res.instance.map(|(s, f)| Generated {
                structure: s,
                frame: f,
                provenance,
                search_residual: Some(res.best_residual),
            })
        }
        RecipeKind::ParallelTorsionSearch => {
            let res = parallel_torsion_search(n, recipe.seed, recipe.search_budget)?;
            res.instance.map(|(s, f)| Generated {
                structure: s,
                frame: f,
                provenance,
                search_residual: Some(res.best_residual),
            })
        }
    };
    Ok(out)
}

// ---------------------------------------------------------------------------
// Corpus directory (model files + MANIFEST)
// ---------------------------------------------------------------------------

/// One corpus entry, as recorded in `MANIFEST`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub kind: RecipeKind,
    pub dim: usize,
    pub seed: u64,
    pub budget: u64,
    /// Headline residuals at generation time (cyclic membership, square norm).
    pub residuals: ManifestResiduals,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestResiduals {
    pub f_norm: f64,
    pub cyclic_sum: f64,
    pub square_norm_nabla_j: f64,
}

const MANIFEST_NAME: &str = "MANIFEST";

pub fn read_manifest(dir: &std::path::Path) -> Result<Vec<ManifestEntry>> {
    let path = dir.join(MANIFEST_NAME);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn write_manifest(dir: &std::path::Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut sorted = entries.to_vec();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let text = serde_json::to_string_pretty(&sorted)?;
    std::fs::write(dir.join(MANIFEST_NAME), text + "\n")?;
    Ok(())
}

/// Generates a recipe and writes `<dir>/<name>.json`, updating `MANIFEST`.
/// Returns `Ok(None)` when a search recipe finds nothing (no file written).
pub fn emit_into_corpus(dir: &std::path::Path, recipe: &InstanceRecipe) -> Result<Option<std::path::PathBuf>> {
    let Some(generated) = generate(recipe)? else {
        return Ok(None);
    };
    std::fs::create_dir_all(dir)?;
    let (f_norm, cyc, nrm) = quasi_kahler_residuals(&generated.structure, &generated.frame)?;
    let file = ModelFile::from_instance(&generated.structure, &generated.frame, Some(generated.provenance.clone()));
    let path = dir.join(format!("{}.json", recipe.name));
    std::fs::write(&path, file.to_json()? + "\n")?;
    let mut entries: Vec<ManifestEntry> =
        read_manifest(dir)?.into_iter().filter(|e| e.name != recipe.name).collect();
    entries.push(ManifestEntry {
        name: recipe.name.clone(),
        kind: recipe.kind,
        dim: recipe.dim,
        seed: recipe.seed,
        budget: recipe.search_budget,
        residuals: ManifestResiduals { f_norm, cyclic_sum: cyc, square_norm_nabla_j: nrm },
    });
    write_manifest(dir, &entries)?;
    Ok(Some(path))
}

/// Regenerates every model file recorded in `<dir>/MANIFEST` from its seed.
/// With unchanged seeds this reproduces the files byte-for-byte.
pub fn regenerate_corpus(dir: &std::path::Path) -> Result<Vec<std::path::PathBuf>> {
    let entries = read_manifest(dir)?;
    let mut written = Vec::new();
    for e in &entries {
        let recipe = InstanceRecipe {
            name: e.name.clone(),
            kind: e.kind,
            dim: e.dim,
            seed: e.seed,
            search_budget: e.budget,
        };
        if let Some(p) = emit_into_corpus(dir, &recipe)? {
            written.push(p);
        }
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_models_all_sizes() {
        for n in 1..=4 {
            let (s, f) = flat_model(n).unwrap();
            let v = crate::model::validate(&s, &f, &Tolerances::default()).unwrap();
            assert!(v.is_valid());
        }
    }

    #[test]
    fn flat_connections_coincide_at_any_n() {
        // n = 1: dim-2 model; all deformations vanish
        let (s, f) = flat_model(1).unwrap();
        let conn = frame::levi_civita(&s, &f).unwrap();
        let nj = frame::nabla_j(&conn, &s, &f);
        let dc = crate::connection::canonical_connection(&s, &conn, &nj, false).unwrap();
        assert_eq!(dc.q_lower.max_abs(), 0.0);
        // n = 3: scalar curvatures vanish
        let (s, f) = flat_model(3).unwrap();
        let conn = frame::levi_civita(&s, &f).unwrap();
        let curv = crate::curvature::curvature_levi_civita(&s, &f, &conn).unwrap();
        assert_eq!(curv.scalar, 0.0);
    }

    #[test]
    fn random_norden_validates_and_varies() {
        let (s1, f1) = random_norden(2, 1, 200).unwrap();
        let (s2, f2) = random_norden(2, 2, 200).unwrap();
        for (s, f) in [(&s1, &f1), (&s2, &f2)] {
            let v = crate::model::validate(s, f, &Tolerances::default()).unwrap();
            assert!(v.is_valid());
        }
        // distinct seeds give distinct fundamental tensors
        let fund = |s: &NordenStructure, f: &FrameModel| {
            let conn = frame::levi_civita(s, f).unwrap();
            let nj = frame::nabla_j(&conn, s, f);
            frame::fundamental_f(&nj, s).unwrap().f
        };
        let d = fund(&s1, &f1).residual(&fund(&s2, &f2)).unwrap();
        assert!(d > 1e-3, "corpus diversity: {d}");
    }

    #[test]
    fn quasi_kahler_search_produces_w3() {
        for (n, seed) in [(2usize, 1u64), (2, 9), (3, 4), (4, 2)] {
            let (s, f) = quasi_kahler_search(n, seed, 100).unwrap();
            let (f_norm, cyc, _) = quasi_kahler_residuals(&s, &f).unwrap();
            assert!(f_norm > 0.05);
            assert!(cyc < 1e-9 * (1.0 + f_norm));
            if let FrameModel::LieAlgebra(l) = &f {
                assert!(l.jacobi_residual() < 1e-12);
            }
        }
    }

    #[test]
    fn quasi_kahler_search_needs_dim_four() {
        // dimension 2 has no block family to draw from
        let err = quasi_kahler_search(1, 0, 10).unwrap_err();
        assert_eq!(err.to_string(), "no W3 instance found");
    }

    #[test]
    fn search_candidates_lie_in_constraint_null_space() {
        let n = 2;
        let (free, rows) = membership_constraint_rows(n);
        let (_, f) = quasi_kahler_search(n, 3, 100).unwrap();
        let c = match &f {
            FrameModel::LieAlgebra(l) => &l.structure_constants,
            _ => unreachable!(),
        };
        // A c = 0 for the constraint matrix assembled column-by-column
        let coeffs: Vec<f64> = free.iter().map(|&(k, i, j)| c.at3(k, i, j)).collect();
        let mut worst = 0.0f64;
        for row in &rows {
            let mut sum = 0.0;
            for (col, _) in free.iter().enumerate() {
                sum += row[col] * coeffs[col];
            }
            worst = worst.max(sum.abs());
        }
        assert!(worst < 1e-12, "candidate outside the membership null space: {worst}");
    }

    #[test]
    fn quasi_kahler_search_determinism() {
        let (s1, f1) = quasi_kahler_search(2, 5, 100).unwrap();
        let (s2, f2) = quasi_kahler_search(2, 5, 100).unwrap();
        let a = ModelFile::from_instance(&s1, &f1, None).to_json().unwrap();
        let b = ModelFile::from_instance(&s2, &f2, None).to_json().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn isotropic_search_finds_nontrivial_instance() {
        let res = isotropic_search(2, 11, 200).unwrap();
        let (s, f) = res.instance.expect("indefinite family has isotropic directions");
        let (f_norm, cyc, nrm) = quasi_kahler_residuals(&s, &f).unwrap();
        assert!(f_norm > 0.05, "must not be Kahler");
        assert!(cyc < 1e-8);
        assert!(nrm.abs() < 1e-8, "square norm should vanish: {nrm}");
        // flagged isotropic-Kahler without being Kahler
        let conn = frame::levi_civita(&s, &f).unwrap();
        let nj = frame::nabla_j(&conn, &s, &f);
        let fund = frame::fundamental_f(&nj, &s).unwrap();
        let flags = frame::class_membership(&fund, &s, &nj, &Tolerances::default());
        assert!(flags.is_isotropic_kahler && !flags.is_kahler_w0);
    }

    #[test]
    fn parallel_search_reports_best_residual() {
        let res = parallel_torsion_search(2, 1, 60).unwrap();
        if res.instance.is_none() {
            assert!(res.best_residual.is_finite());
            assert!(res.best_residual > 1e-8);
        }
    }

    #[test]
    fn corpus_emit_and_regenerate_identical() {
        let dir = tempfile::tempdir().unwrap();
        let recipes = vec![
            InstanceRecipe { name: "F4".into(), kind: RecipeKind::Flat, dim: 4, seed: 0, search_budget: 1 },
            InstanceRecipe { name: "QK4".into(), kind: RecipeKind::QuasiKahlerSearch, dim: 4, seed: 7, search_budget: 100 },
            InstanceRecipe { name: "R6".into(), kind: RecipeKind::RandomNorden, dim: 6, seed: 3, search_budget: 200 },
        ];
        for r in &recipes {
            emit_into_corpus(dir.path(), r).unwrap().expect("generated");
        }
        let before: Vec<(String, String)> = recipes
            .iter()
            .map(|r| {
                let p = dir.path().join(format!("{}.json", r.name));
                (r.name.clone(), std::fs::read_to_string(p).unwrap())
            })
            .collect();
        regenerate_corpus(dir.path()).unwrap();
        for (name, text) in before {
            let p = dir.path().join(format!("{name}.json"));
            assert_eq!(std::fs::read_to_string(p).unwrap(), text, "regeneration must be byte-identical");
        }
    }
}
