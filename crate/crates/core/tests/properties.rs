use std::collections::BTreeSet;

use proptest::prelude::*;

use fairgate_core::data::{
    encode, recode_marital, ColumnKind, CsvOptions, Dataset, DesignMatrix, EncodeOptions, Feature, FeaturePartition,
    Schema, TargetSpec,
};
use fairgate_core::linalg::Matrix;
use fairgate_core::regress::{fit_logistic, fit_ols, FitConfig};
use fairgate_core::stats::{chi2_isf, chi2_sf};
use fairgate_core::wald::wald_statistic;

const MARITAL: [&str; 7] = [
    "Divorced",
    "Married-AF-spouse",
    "Married-civ-spouse",
    "Married-spouse-absent",
    "Never-married",
    "Separated",
    "Widowed",
];

fn schema() -> Schema {
    Schema::new(
        vec![
            Feature::numeric("n"),
            Feature::categorical("c", ["z", "a", "m", "b"]),
            Feature::categorical("marital-status", MARITAL),
            Feature::numeric("k"),
        ],
        Some(TargetSpec {
            label: "y".into(),
            positive: "1".into(),
        }),
    )
    .unwrap()
}

fn rows() -> impl Strategy<Value = Vec<(i32, usize, usize, i32, bool)>> {
    prop::collection::vec((-50i32..50, 0usize..4, 0usize..7, -5i32..5, any::<bool>()), 1..40)
}

fn dataset(rs: &[(i32, usize, usize, i32, bool)]) -> Dataset {
    let levels = ["z", "a", "m", "b"];
    let text: String = rs
        .iter()
        .map(|(n, c, m, k, y)| format!("{n}, {}, {}, {k}, {}\n", levels[*c], MARITAL[*m], u8::from(*y)))
        .collect();
    Dataset::parse_csv(schema(), &text, &CsvOptions::default()).unwrap()
}

fn well_conditioned(n: usize, seed: &[f64]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let t = i as f64;
            vec![1.0, (t * 0.37 + seed[0]).sin(), (t * 0.11 + seed[1]).cos(), ((t + seed[2]) * 0.05).tanh()]
        })
        .collect();
    let y = rows.iter().map(|r| r[1] - 0.5 * r[2] + 0.1 * (r[3] * 7.0).sin()).collect();
    (rows, y)
}

fn numeric_design(rows: &[Vec<f64>], y: &[f64]) -> DesignMatrix<f64> {
    let cols = (0..rows[0].len())
        .map(|j| fairgate_core::data::ColumnDescriptor::numeric(format!("x{j}")))
        .collect();
    DesignMatrix::new(Matrix::from_rows(rows).unwrap(), cols, y.to_vec()).unwrap()
}

proptest! {
    #[test]
    fn wald_symmetric_and_shift_invariant(
        b in -5.0f64..5.0, s in 0.01f64..2.0, z in -5.0f64..5.0, t in 0.01f64..2.0, c in -10.0f64..10.0
    ) {
        let w1 = wald_statistic(b, s, z, t).unwrap().unwrap();
        let w2 = wald_statistic(z, t, b, s).unwrap().unwrap();
        let w3 = wald_statistic(b + c, s, z + c, t).unwrap().unwrap();
        prop_assert!((w1 - w2).abs() <= 1e-12 * w1.max(1.0));
        prop_assert!((w1 - w3).abs() <= 1e-9 * w1.max(1.0));
    }

    #[test]
    fn chi2_sf_monotone(a in 0.0f64..60.0, d in 0.0f64..10.0) {
        let pa: f64 = chi2_sf(a, 1).unwrap();
        let pb: f64 = chi2_sf(a + d, 1).unwrap();
        prop_assert!(pb <= pa);
        prop_assert!((0.0..=1.0).contains(&pa));
    }

    #[test]
    fn p_rule_matches_quantile_rule(w in 0.0f64..20.0, alpha in 0.001f64..0.2) {
        let p: f64 = chi2_sf(w, 1).unwrap();
        let q = chi2_isf(alpha, 1).unwrap();
        // skip the measure-zero band where bisection resolution matters
        prop_assume!((w - q).abs() > 1e-9);
        prop_assert_eq!(p < alpha, w > q);
    }

    #[test]
    fn encoding_invariants(rs in rows()) {
        let d = dataset(&rs);
        let m: DesignMatrix<f64> = encode(&d, &EncodeOptions::default()).unwrap();
        // 1 + numeric + (levels - 1) per categorical
        prop_assert_eq!(m.cols(), 1 + 1 + 3 + 6 + 1);
        prop_assert_eq!(m.rows(), d.row_count());
        for feature in ["c", "marital-status"] {
            let idx: Vec<usize> = m.columns().iter().enumerate()
                .filter(|(_, c)| c.feature == feature).map(|(j, _)| j).collect();
            for i in 0..m.rows() {
                let s: f64 = idx.iter().map(|&j| m.x()[(i, j)]).sum();
                prop_assert!(s == 0.0 || s == 1.0);
            }
        }
        let again: DesignMatrix<f64> = encode(&dataset(&rs), &EncodeOptions::default()).unwrap();
        prop_assert_eq!(m, again);
    }

    #[test]
    fn select_then_encode_references_subset(rs in rows(), mask in prop::collection::vec(any::<bool>(), 4)) {
        let d = dataset(&rs);
        let labels: Vec<&str> = d.schema().labels().collect();
        let subset: Vec<&str> = labels.iter().zip(&mask).filter(|(_, k)| **k).map(|(l, _)| *l).collect();
        let s = d.select(&subset).unwrap();
        prop_assert_eq!(s.row_count(), d.row_count());
        let m: DesignMatrix<f64> = encode(&s, &EncodeOptions::default()).unwrap();
        for c in m.columns() {
            prop_assert!(c.kind == ColumnKind::Intercept || subset.contains(&c.feature.as_str()));
        }
        let r = recode_marital(&d).unwrap();
        prop_assert_eq!(r.row_count(), d.row_count());
    }

    #[test]
    fn partition_invariants(mask in prop::collection::vec(0u8..3, 1..12)) {
        let universe: Vec<String> = (0..mask.len()).map(|i| format!("f{i}")).collect();
        let sensitive: Vec<String> = universe.iter().zip(&mask).filter(|(_, m)| **m == 0).map(|(u, _)| u.clone()).collect();
        let mut p = FeaturePartition::new(universe.clone(), sensitive).unwrap();
        let protect: Vec<String> = universe.iter().zip(&mask).filter(|(_, m)| **m == 1).map(|(u, _)| u.clone()).collect();
        p.protect(&protect).unwrap();
        p.validate_against(universe.iter().map(String::as_str)).unwrap();
        let sens: BTreeSet<&String> = p.sensitive().iter().collect();
        prop_assert!(p.unprotected().iter().all(|l| !sens.contains(l)));
        prop_assert!(p.protected().iter().all(|l| !sens.contains(l)));
    }

    #[test]
    fn ols_normal_equations_and_order(seed in prop::collection::vec(-3.0f64..3.0, 3), n in 12usize..60, rot in 0usize..60) {
        let (rows, y) = well_conditioned(n, &seed);
        let f = fit_ols(&numeric_design(&rows, &y), &FitConfig::default()).unwrap();
        let x = Matrix::from_rows(&rows).unwrap();
        let lhs = x.weighted_gram(None).matvec(&f.coefficients).unwrap();
        let rhs = x.t_matvec(&y).unwrap();
        let scale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in lhs.iter().zip(&rhs) {
            prop_assert!((a - b).abs() <= 1e-8 * scale);
        }
        let k = rot % n;
        let rows2: Vec<Vec<f64>> = rows[k..].iter().chain(&rows[..k]).cloned().collect();
        let y2: Vec<f64> = y[k..].iter().chain(&y[..k]).cloned().collect();
        let g = fit_ols(&numeric_design(&rows2, &y2), &FitConfig::default()).unwrap();
        for (a, b) in f.coefficients.iter().zip(&g.coefficients) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn logistic_converged_gradient_small(seed in prop::collection::vec(-3.0f64..3.0, 3), n in 30usize..80) {
        let (rows, y) = well_conditioned(n, &seed);
        let labels: Vec<f64> = y.iter().enumerate().map(|(i, v)| if *v + 0.3 * ((i * 7 % 5) as f64 - 2.0) > 0.0 { 1.0 } else { 0.0 }).collect();
        prop_assume!(labels.iter().any(|v| *v == 1.0) && labels.iter().any(|v| *v == 0.0));
        let cfg = FitConfig::default();
        let f = fit_logistic(&numeric_design(&rows, &labels), &cfg).unwrap();
        if f.converged {
            prop_assert!(f.gradient_norm < cfg.tolerance);
        }
        prop_assert!(f.std_errors.iter().all(|s| *s >= 0.0));
    }
}
