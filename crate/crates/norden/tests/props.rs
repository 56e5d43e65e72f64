//! Property tests for the tensor core and the projection machinery.

use norden::connection::torsion_projections;
use norden::tensor::{
    apply_j, contract, raise_lower, DenseTensor, RaiseLower, Variance, LOWER2, LOWER3, MIXED11,
};
use norden::{forge, model::ModelFile};
use proptest::prelude::*;

fn small_f64() -> impl Strategy<Value = f64> {
    (-1.0f64..1.0).prop_map(|x| (x * 64.0).round() / 64.0)
}

fn rank3(dim: usize, variance: [Variance; 3]) -> impl Strategy<Value = DenseTensor> {
    prop::collection::vec(small_f64(), dim * dim * dim)
        .prop_map(move |v| DenseTensor::from_components(dim, &variance, v).unwrap())
}

fn rank1(dim: usize, variance: Variance) -> impl Strategy<Value = DenseTensor> {
    prop::collection::vec(small_f64(), dim)
        .prop_map(move |v| DenseTensor::from_components(dim, &[variance], v).unwrap())
}

fn flat_metric(dim: usize) -> DenseTensor {
    let n = dim / 2;
    DenseTensor::from_fn2(dim, LOWER2, |i, j| {
        if i != j {
            0.0
        } else if i < n {
            1.0
        } else {
            -1.0
        }
    })
}

fn flat_j(dim: usize) -> DenseTensor {
    let n = dim / 2;
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

proptest! {
    #[test]
    fn contract_is_bilinear(
        a in rank3(4, [Variance::Lower, Variance::Upper, Variance::Lower]),
        b in rank3(4, [Variance::Lower, Variance::Upper, Variance::Lower]),
        v in rank1(4, Variance::Lower),
        alpha in small_f64(),
        beta in small_f64(),
    ) {
        let lhs = contract(&a.scale(alpha).add(&b.scale(beta)).unwrap(), 1, &v, 0).unwrap();
        let rhs = contract(&a, 1, &v, 0).unwrap().scale(alpha)
            .add(&contract(&b, 1, &v, 0).unwrap().scale(beta)).unwrap();
        prop_assert!(lhs.residual(&rhs).unwrap() <= 1e-12 * (1.0 + lhs.max_abs()));
    }

    #[test]
    fn raise_lower_is_an_involution(t in rank3(4, LOWER3), slot in 0usize..3) {
        let g = flat_metric(4);
        let up = raise_lower(&t, slot, &g, RaiseLower::Raise).unwrap();
        let back = raise_lower(&up, slot, &g, RaiseLower::Lower).unwrap();
        prop_assert!(back.residual(&t).unwrap() <= 1e-12 * (1.0 + t.max_abs()));
    }

    #[test]
    fn apply_j_squares_to_negation(t in rank3(4, LOWER3), slot in 0usize..3) {
        let j = flat_j(4);
        let twice = apply_j(&apply_j(&t, slot, &j).unwrap(), slot, &j).unwrap();
        prop_assert!(twice.residual(&t.scale(-1.0)).unwrap() <= 1e-12 * (1.0 + t.max_abs()));
    }

    #[test]
    fn projections_sum_to_any_antisymmetric_tensor(raw in rank3(4, LOWER3)) {
        // antisymmetrize the first two slots
        let t = DenseTensor::from_fn3(4, LOWER3, |i, j, k| 0.5 * (raw.at3(i, j, k) - raw.at3(j, i, k)));
        let (s, _) = forge::flat_model(2).unwrap();
        let proj = torsion_projections(&t, &s).unwrap();
        let sum = proj.p1.add(&proj.p2).unwrap().add(&proj.p3).unwrap().add(&proj.p4).unwrap();
        prop_assert!(sum.residual(&t).unwrap() <= 1e-12 * (1.0 + t.max_abs()));
    }

    #[test]
    fn model_files_round_trip(seed in 0u64..32) {
        let (s, f) = forge::random_norden(2, seed, 400).unwrap();
        let file = ModelFile::from_instance(&s, &f, None);
        let json = file.to_json().unwrap();
        let back = ModelFile::from_json(&json).unwrap();
        prop_assert_eq!(file, back);
    }
}
