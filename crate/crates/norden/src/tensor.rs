//! Dense multi-index tensors over a fixed 2n-dimensional real vector space.
//!
//! Components are stored row-major in a flat `Vec<f64>`; each slot carries a
//! variance marker (`Upper` for vector slots, `Lower` for covector slots).
//!
//! Conventions used throughout the crate:
//! - (0,k) tensors take all-lower slots; `F[i][j][k]` means `F(e_i, e_j, e_k)`.
//! - The almost complex structure `J` is stored as a (1,1) tensor with slots
//!   `[Upper, Lower]`, so `J.get(&[a, j])` is the component `J^a_j` of `J e_j`.
//! - Pairing forms such as `g(Jx, y)` are produced by [`apply_j`] followed by
//!   [`contract`] (or [`raise_lower`] with the metric).

use crate::error::{NordenError, Result};

/// Index variance of one tensor slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Variance {
    Upper,
    Lower,
}

impl Variance {
    pub fn flipped(self) -> Self {
        match self {
            Variance::Upper => Variance::Lower,
            Variance::Lower => Variance::Upper,
        }
    }
}

/// Dense rank-r tensor with per-slot variance over a `dim`-dimensional space.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseTensor {
    dim: usize,
    variance: Vec<Variance>,
    components: Vec<f64>,
}

impl DenseTensor {
    /// All-zero tensor. `dim` must be even and at least 2.
    pub fn zeros(dim: usize, variance: &[Variance]) -> Result<Self> {
        if dim < 2 || !dim.is_multiple_of(2) {
            return Err(NordenError::OddDimension(dim));
        }
        let len = dim.pow(variance.len() as u32);
        Ok(Self {
            dim,
            variance: variance.to_vec(),
            components: vec![0.0; len],
        })
    }

    pub fn from_components(dim: usize, variance: &[Variance], components: Vec<f64>) -> Result<Self> {
        let mut t = Self::zeros(dim, variance)?;
        if components.len() != t.components.len() {
            return Err(NordenError::RankMismatch {
                expected: t.components.len(),
                got: components.len(),
            });
        }
        t.components = components;
        Ok(t)
    }

    /// Rank-2 tensor filled from a closure.
    pub fn from_fn2(dim: usize, variance: [Variance; 2], mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dim, &variance).expect("even dim");
        for i in 0..dim {
            for j in 0..dim {
                t.components[i * dim + j] = f(i, j);
            }
        }
        t
    }

    /// Rank-3 tensor filled from a closure.
    pub fn from_fn3(dim: usize, variance: [Variance; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zeros(dim, &variance).expect("even dim");
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    t.components[(i * dim + j) * dim + k] = f(i, j, k);
                }
            }
        }
        t
    }

    /// Rank-4 tensor filled from a closure.
    pub fn from_fn4(
        dim: usize,
        variance: [Variance; 4],
        mut f: impl FnMut(usize, usize, usize, usize) -> f64,
    ) -> Self {
        let mut t = Self::zeros(dim, &variance).expect("even dim");
        for i in 0..dim {
            for j in 0..dim {
                for k in 0..dim {
                    for l in 0..dim {
                        t.components[((i * dim + j) * dim + k) * dim + l] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rank(&self) -> usize {
        self.variance.len()
    }

    pub fn variance(&self) -> &[Variance] {
        &self.variance
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    fn flat_index(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.rank());
        let mut flat = 0;
        for &i in idx {
            debug_assert!(i < self.dim);
            flat = flat * self.dim + i;
        }
        flat
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        self.components[self.flat_index(idx)]
    }

    pub fn set(&mut self, idx: &[usize], value: f64) {
        let flat = self.flat_index(idx);
        self.components[flat] = value;
    }

    #[inline]
    pub fn at2(&self, i: usize, j: usize) -> f64 {
        debug_assert_eq!(self.rank(), 2);
        self.components[i * self.dim + j]
    }

    #[inline]
    pub fn at3(&self, i: usize, j: usize, k: usize) -> f64 {
        debug_assert_eq!(self.rank(), 3);
        self.components[(i * self.dim + j) * self.dim + k]
    }

    #[inline]
    pub fn at4(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        debug_assert_eq!(self.rank(), 4);
        self.components[((i * self.dim + j) * self.dim + k) * self.dim + l]
    }

    /// Largest absolute component (max-norm); 0 for the zero tensor.
    pub fn max_abs(&self) -> f64 {
        self.components.iter().fold(0.0, |m, &x| m.max(x.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            variance: self.variance.clone(),
            components: self.components.iter().map(|&x| s * x).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if self.dim != other.dim {
            return Err(NordenError::DimMismatch(self.dim, other.dim));
        }
        if self.variance != other.variance {
            return Err(NordenError::VarianceMismatch);
        }
        Ok(Self {
            dim: self.dim,
            variance: self.variance.clone(),
            components: self
                .components
                .iter()
                .zip(&other.components)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Max-norm of the difference, the residual used by every identity check.
    pub fn residual(&self, other: &Self) -> Result<f64> {
        Ok(self.sub(other)?.max_abs())
    }
}

/// Contracts `slot_a` of `a` with `slot_b` of `b`.
///
/// The two slots must have opposite variance and equal dimension. The result
/// keeps the remaining slots of `a` (in order) followed by those of `b`.
#[allow(clippy::needless_range_loop)] // index split across two tensors reads clearest with plain loops
pub fn contract(a: &DenseTensor, slot_a: usize, b: &DenseTensor, slot_b: usize) -> Result<DenseTensor> {
    if slot_a >= a.rank() {
        return Err(NordenError::SlotOutOfRange { slot: slot_a, rank: a.rank() });
    }
    if slot_b >= b.rank() {
        return Err(NordenError::SlotOutOfRange { slot: slot_b, rank: b.rank() });
    }
    if a.dim != b.dim {
        return Err(NordenError::DimMismatch(a.dim, b.dim));
    }
    if a.variance[slot_a] == b.variance[slot_b] {
        return Err(NordenError::VarianceMismatch);
    }
    let dim = a.dim;
    let mut variance: Vec<Variance> = Vec::with_capacity(a.rank() + b.rank() - 2);
    variance.extend(a.variance.iter().enumerate().filter(|(s, _)| *s != slot_a).map(|(_, &v)| v));
    variance.extend(b.variance.iter().enumerate().filter(|(s, _)| *s != slot_b).map(|(_, &v)| v));
    let mut out = DenseTensor::zeros(dim, &variance)?;

    let ra = a.rank();
    let rb = b.rank();
    let mut idx_a = vec![0usize; ra];
    let mut idx_b = vec![0usize; rb];
    let out_rank = ra + rb - 2;
    let mut out_idx = vec![0usize; out_rank];
    // iterate over all output indices and the summation index
    let total = dim.pow(out_rank as u32);
    for flat in 0..total {
        let mut rem = flat;
        for s in (0..out_rank).rev() {
            out_idx[s] = rem % dim;
            rem /= dim;
        }
        // split into a-part and b-part
        let mut pos = 0;
        for s in 0..ra {
            if s != slot_a {
                idx_a[s] = out_idx[pos];
                pos += 1;
            }
        }
        for s in 0..rb {
            if s != slot_b {
                idx_b[s] = out_idx[pos];
                pos += 1;
            }
        }
        let mut sum = 0.0;
        for m in 0..dim {
            idx_a[slot_a] = m;
            idx_b[slot_b] = m;
            sum += a.get(&idx_a) * b.get(&idx_b);
        }
        out.components[flat] = sum;
    }
    Ok(out)
}

/// Direction for [`raise_lower`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaiseLower {
    Raise,
    Lower,
}

/// Raises or lowers one slot of `t` with the metric.
///
/// `metric` is the rank-2 all-lower metric g; its inverse is computed
/// internally when raising. Applying `Raise` then `Lower` (or vice versa) on
/// the same slot returns the original tensor up to rounding.
pub fn raise_lower(
    t: &DenseTensor,
    slot: usize,
    metric: &DenseTensor,
    direction: RaiseLower,
) -> Result<DenseTensor> {
    if slot >= t.rank() {
        return Err(NordenError::SlotOutOfRange { slot, rank: t.rank() });
    }
    if metric.rank() != 2 {
        return Err(NordenError::RankMismatch { expected: 2, got: metric.rank() });
    }
    if metric.dim() != t.dim() {
        return Err(NordenError::DimMismatch(metric.dim(), t.dim()));
    }
    let dim = t.dim();
    let m = match direction {
        RaiseLower::Lower => {
            if t.variance[slot] != Variance::Upper {
                return Err(NordenError::VarianceMismatch);
            }
            metric.clone()
        }
        RaiseLower::Raise => {
            if t.variance[slot] != Variance::Lower {
                return Err(NordenError::VarianceMismatch);
            }
            crate::linalg::invert(metric)?
        }
    };
    let mut variance = t.variance.clone();
    variance[slot] = variance[slot].flipped();
    let mut out = DenseTensor::zeros(dim, &variance)?;
    let rank = t.rank();
    let mut idx = vec![0usize; rank];
    let total = dim.pow(rank as u32);
    for flat in 0..total {
        let mut rem = flat;
        for s in (0..rank).rev() {
            idx[s] = rem % dim;
            rem /= dim;
        }
        let target = idx[slot];
        let mut sum = 0.0;
        for k in 0..dim {
            idx[slot] = k;
            sum += m.at2(target, k) * t.get(&idx);
        }
        idx[slot] = target;
        out.components[flat] = sum;
    }
    Ok(out)
}

/// Precomposes one argument slot of `t` with the almost complex structure `J`.
///
/// For a lower (argument) slot the result is `t(..., Jx, ...)`, i.e. the slot
/// index is contracted against the upper index of `J`. For an upper slot the
/// result is the post-composition `J ∘ t` on that slot. Applying the operation
/// twice on the same slot negates the tensor, since `J² = -id`.
pub fn apply_j(t: &DenseTensor, slot: usize, j: &DenseTensor) -> Result<DenseTensor> {
    if slot >= t.rank() {
        return Err(NordenError::SlotOutOfRange { slot, rank: t.rank() });
    }
    if j.rank() != 2 {
        return Err(NordenError::RankMismatch { expected: 2, got: j.rank() });
    }
    if j.dim() != t.dim() {
        return Err(NordenError::DimMismatch(j.dim(), t.dim()));
    }
    let dim = t.dim();
    let mut out = DenseTensor::zeros(dim, &t.variance)?;
    let rank = t.rank();
    let mut idx = vec![0usize; rank];
    let total = dim.pow(rank as u32);
    for flat in 0..total {
        let mut rem = flat;
        for s in (0..rank).rev() {
            idx[s] = rem % dim;
            rem /= dim;
        }
        let target = idx[slot];
        let mut sum = 0.0;
        for m in 0..dim {
            idx[slot] = m;
            let jc = match t.variance[slot] {
                // argument slot: t(..., J e_target, ...) = J^m_target t(..., e_m, ...)
                Variance::Lower => j.at2(m, target),
                // output slot: (J t)^target = J^target_m t^m
                Variance::Upper => j.at2(target, m),
            };
            sum += jc * t.get(&idx);
        }
        idx[slot] = target;
        out.components[flat] = sum;
    }
    Ok(out)
}

pub const LOWER2: [Variance; 2] = [Variance::Lower, Variance::Lower];
pub const LOWER3: [Variance; 3] = [Variance::Lower; 3];
pub const LOWER4: [Variance; 4] = [Variance::Lower; 4];
/// Slot layout of J and other (1,1) tensors.
pub const MIXED11: [Variance; 2] = [Variance::Upper, Variance::Lower];
/// Slot layout of connection coefficients, structure constants and (1,2)
/// tensor fields such as `(∇_x J) y`: (upper, lower, lower).
pub const ULL: [Variance; 3] = [Variance::Upper, Variance::Lower, Variance::Lower];
