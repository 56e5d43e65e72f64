//! Shared fixtures for the integration and acceptance suites.
#![allow(dead_code)] // each test binary uses a subset

use std::sync::OnceLock;

use norden::forge;
use norden::model::{ChartFrame, FrameModel, NordenStructure};
use norden::poly::{Monomial, Poly};

pub struct CorpusInstance {
    pub name: String,
    pub structure: NordenStructure,
    pub frame: FrameModel,
    pub quasi_kahler: bool,
}

/// A curved polynomial chart with block metric [[P, S], [S, -P]] and the
/// constant standard complex structure; a valid Norden instance at the
/// evaluation point and the whole stencil, generically not quasi-Kähler.
pub fn chart_instance() -> (NordenStructure, FrameModel) {
    let dim = 4;
    let z = Poly::zero;
    let c = |v: f64| Poly::constant(v, dim);
    let m = |v: f64, p: [u32; 4]| Poly { terms: vec![Monomial { c: v, p: p.to_vec() }] };
    let plus = |a: Poly, b: Poly| Poly { terms: a.terms.into_iter().chain(b.terms).collect() };
    let p11 = plus(c(1.0), m(1.0, [2, 0, 0, 0]));
    let p12 = m(0.3, [1, 1, 0, 0]);
    let p22 = plus(c(1.0), m(0.5, [0, 0, 0, 2]));
    let s11 = m(0.2, [0, 0, 1, 0]);
    let s12 = m(0.1, [0, 1, 0, 0]);
    let s22 = m(-0.15, [1, 0, 0, 0]);
    let metric = vec![
        vec![p11.clone(), p12.clone(), s11.clone(), s12.clone()],
        vec![p12.clone(), p22.clone(), s12.clone(), s22.clone()],
        vec![s11.clone(), s12.clone(), p11.negated(), p12.negated()],
        vec![s12.clone(), s22.clone(), p12.negated(), p22.negated()],
    ];
    let mut j_entries =
        vec![vec![z(), z(), z(), z()], vec![z(), z(), z(), z()], vec![z(), z(), z(), z()], vec![z(), z(), z(), z()]];
    j_entries[2][0] = c(1.0);
    j_entries[3][1] = c(1.0);
    j_entries[0][2] = c(-1.0);
    j_entries[1][3] = c(-1.0);
    let chart = ChartFrame { metric, j_entries, point: vec![0.1, -0.2, 0.15, 0.05], fd_step: 1e-5 };
    let s = chart.structure_at(&chart.point.clone()).unwrap();
    (s, FrameModel::Chart(chart))
}

/// The desk-scale corpus used by the acceptance suite: flats, random Norden
/// negatives in dims 4/6/8, quasi-Kähler positives in dims 4/6/8, one exact
/// isotropic instance and one polynomial chart. 50+ instances total.
pub fn corpus() -> &'static Vec<CorpusInstance> {
    static CORPUS: OnceLock<Vec<CorpusInstance>> = OnceLock::new();
    CORPUS.get_or_init(|| {
        let mut v = Vec::new();
        for n in [2usize, 3, 4] {
            let (s, f) = forge::flat_model(n).unwrap();
            v.push(CorpusInstance {
                name: format!("F{}", 2 * n),
                structure: s,
                frame: f,
                quasi_kahler: true, // Kahler belongs to every class
            });
        }
        for n in [2usize, 3, 4] {
            for seed in 0..14u64 {
                let (s, f) = forge::random_norden(n, seed, 400).unwrap();
                v.push(CorpusInstance {
                    name: format!("R{}_{}", 2 * n, seed),
                    structure: s,
                    frame: f,
                    quasi_kahler: false,
                });
            }
        }
        for (n, seeds) in [(2usize, [1u64, 2, 3]), (3, [1, 2, 3]), (4, [1, 2, 3])] {
            for seed in seeds {
                let (s, f) = forge::quasi_kahler_search(n, seed, 200).unwrap();
                v.push(CorpusInstance {
                    name: format!("QK{}_{}", 2 * n, seed),
                    structure: s,
                    frame: f,
                    quasi_kahler: true,
                });
            }
        }
        let iso = forge::isotropic_search(2, 11, 200).unwrap();
        if let Some((s, f)) = iso.instance {
            v.push(CorpusInstance { name: "ISO4".into(), structure: s, frame: f, quasi_kahler: true });
        }
        let (s, f) = chart_instance();
        v.push(CorpusInstance { name: "CH4".into(), structure: s, frame: f, quasi_kahler: false });
        v
    })
}
