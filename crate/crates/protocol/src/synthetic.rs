//! Small synthetic datasets with a numeric sensitive feature `s`, for
//! protocol tests and demos.

use fairgate_core::data::dataset::target;
use fairgate_core::data::{Dataset, EncodeOptions, Feature, Profile, Schema};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub const SENSITIVE: &str = "s";

#[derive(Clone, Debug)]
pub struct Synthetic {
    pub dataset: Dataset,
    pub profile: Profile,
    /// Features generated as functions of `s`.
    pub correlated: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub rows: usize,
    pub numeric: usize,
    /// Level count of the single categorical feature `c`; 0 for none.
    pub levels: usize,
    /// Indices of numeric features that load on `s`.
    pub correlated: Vec<usize>,
    /// Whether `c` depends on `s`.
    pub correlated_categorical: bool,
    /// Loading of correlated features on `s`.
    pub strength: f64,
}

impl SyntheticSpec {
    /// Independent uniform columns: nothing carries information about `s`.
    pub fn independent(rows: usize, numeric: usize) -> Self {
        SyntheticSpec { rows, numeric, levels: 0, correlated: Vec::new(), correlated_categorical: false, strength: 0.0 }
    }

    /// 2 to 5 numeric features, sometimes a categorical one, each
    /// correlated with `s` with probability one half.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, rows: usize) -> Self {
        let numeric = rng.random_range(2..=5);
        let levels = if rng.random_bool(0.5) { rng.random_range(2..=4) } else { 0 };
        SyntheticSpec {
            rows,
            numeric,
            levels,
            correlated: (0..numeric).filter(|_| rng.random_bool(0.5)).collect(),
            correlated_categorical: levels > 0 && rng.random_bool(0.5),
            strength: rng.random_range(0.2..2.0),
        }
    }

    pub fn generate(&self, seed: u64) -> Synthetic {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let mut features: Vec<Feature> = (0..self.numeric).map(|j| Feature::numeric(format!("x{j}"))).collect();
        if self.levels > 0 {
            features.push(Feature::categorical("c", (0..self.levels).map(|l| format!("L{l}"))));
        }
        let labels: Vec<String> = features.iter().map(|f| f.label.clone()).collect();
        features.push(Feature::numeric(SENSITIVE));
        let schema = Schema::new(features, Some(target("y", "1"))).expect("distinct labels");
        let weights: Vec<f64> = (0..self.numeric).map(|_| rng.random_range(-2.0..2.0)).collect();

        let mut records = Vec::with_capacity(self.rows);
        for i in 0..self.rows {
            let s: f64 = rng.random_range(-1.0..1.0);
            let mut rec = Vec::with_capacity(labels.len() + 2);
            let mut eta = 0.0;
            for (j, w) in weights.iter().enumerate() {
                let load = if self.correlated.contains(&j) { self.strength * s } else { 0.0 };
                let x = rng.random_range(-1.0..1.0) + load;
                eta += w * x;
                rec.push(x.to_string());
            }
            if self.levels > 0 {
                let l = if self.correlated_categorical && rng.random_bool(0.7) {
                    (((s + 1.0) / 2.0 * self.levels as f64) as usize).min(self.levels - 1)
                } else {
                    rng.random_range(0..self.levels)
                };
                eta += 0.5 * l as f64;
                rec.push(format!("L{l}"));
            }
            rec.push(s.to_string());
            let p = 1.0 / (1.0 + (-(eta + 2.0 * s)).exp());
            rec.push(if rng.random_bool(p) { "1" } else { "0" }.to_string());
            records.push((i + 1, rec));
        }
        let dataset = Dataset::from_records(schema, records).expect("well-formed records");
        let mut correlated: Vec<String> = self.correlated.iter().map(|j| format!("x{j}")).collect();
        if self.correlated_categorical {
            correlated.push("c".into());
        }
        let profile = Profile {
            name: "synthetic".into(),
            features: labels,
            sensitive: vec![SENSITIVE.into()],
            column_subset: None,
            row_limit: None,
            encode: EncodeOptions { strict: false, ..EncodeOptions::default() },
        };
        Synthetic { dataset, profile, correlated }
    }
}
