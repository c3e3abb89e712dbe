//! Small arithmetic circuits over slot vectors, evaluated either in the clear
//! or under encryption. Used to check the homomorphism property.

use rand::Rng;

use crate::error::Result;
use crate::keys::{Ciphertext, EvalKey, PlainVector};

#[derive(Clone, Debug, PartialEq)]
pub enum Gate {
    Input(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Mul(usize, usize),
    MulPlain(usize, Vec<f64>),
    AddPlain(usize, Vec<f64>),
    Rotate(usize, isize),
    InnerSum(usize, usize),
}

/// Gates in topological order; gate `i` may only reference gates `< i`.
/// The last gate is the output.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub inputs: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    /// Multiplicative depth of each gate.
    pub fn depths(&self) -> Vec<usize> {
        let mut d: Vec<usize> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let v = match g {
                Gate::Input(_) => 0,
                Gate::Add(a, b) | Gate::Sub(a, b) => d[*a].max(d[*b]),
                Gate::Mul(a, b) => d[*a].max(d[*b]) + 1,
                Gate::MulPlain(a, _) => d[*a] + 1,
                Gate::AddPlain(a, _) | Gate::Rotate(a, _) | Gate::InnerSum(a, _) => d[*a],
            };
            d.push(v);
        }
        d
    }

    pub fn depth(&self) -> usize {
        self.depths().last().copied().unwrap_or(0)
    }

    /// Plaintext interpreter over `slots`-long zero-padded vectors.
    pub fn eval_plain(&self, inputs: &[Vec<f64>], slots: usize) -> Vec<f64> {
        let pad = |v: &[f64]| {
            let mut v = v.to_vec();
            v.resize(slots, 0.0);
            v
        };
        let mut vals: Vec<Vec<f64>> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let v = match g {
                Gate::Input(i) => pad(&inputs[*i]),
                Gate::Add(a, b) => vals[*a].iter().zip(&vals[*b]).map(|(x, y)| x + y).collect(),
                Gate::Sub(a, b) => vals[*a].iter().zip(&vals[*b]).map(|(x, y)| x - y).collect(),
                Gate::Mul(a, b) => vals[*a].iter().zip(&vals[*b]).map(|(x, y)| x * y).collect(),
                Gate::MulPlain(a, m) => vals[*a].iter().zip(pad(m)).map(|(x, y)| x * y).collect(),
                Gate::AddPlain(a, m) => vals[*a].iter().zip(pad(m)).map(|(x, y)| x + y).collect(),
                Gate::Rotate(a, k) => {
                    let mut v = vals[*a].clone();
                    v.rotate_left(k.rem_euclid(slots as isize) as usize);
                    v
                }
                Gate::InnerSum(a, w) => {
                    let mut acc = vals[*a].clone();
                    let mut step = 1;
                    while step < *w {
                        let mut r = acc.clone();
                        r.rotate_left(step);
                        acc.iter_mut().zip(r).for_each(|(x, y)| *x += y);
                        step <<= 1;
                    }
                    acc
                }
            };
            vals.push(v);
        }
        vals.pop().unwrap_or_default()
    }

    pub fn eval_encrypted(&self, evk: &EvalKey, inputs: &[Ciphertext]) -> Result<Ciphertext> {
        let mut vals: Vec<Ciphertext> = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let v = match g {
                Gate::Input(i) => inputs[*i].clone(),
                Gate::Add(a, b) => evk.add(&vals[*a], &vals[*b])?,
                Gate::Sub(a, b) => evk.sub(&vals[*a], &vals[*b])?,
                Gate::Mul(a, b) => evk.mul(&vals[*a], &vals[*b])?,
                Gate::MulPlain(a, m) => evk.mul_plain(&vals[*a], &PlainVector::new(m.clone())?)?,
                Gate::AddPlain(a, m) => evk.add_plain(&vals[*a], &PlainVector::new(m.clone())?)?,
                Gate::Rotate(a, k) => evk.rotate(&vals[*a], *k)?,
                Gate::InnerSum(a, w) => evk.inner_sum(&vals[*a], *w)?,
            };
            vals.push(v);
        }
        Ok(vals.pop().expect("non-empty circuit"))
    }

    /// A random circuit on `inputs` vectors of length `len` whose output has
    /// depth at most `max_depth`. Constants lie in [-1, 1].
    pub fn random<R: Rng + ?Sized>(rng: &mut R, inputs: usize, len: usize, max_depth: usize, gates: usize) -> Circuit {
        let mut c = Circuit { inputs, gates: (0..inputs).map(Gate::Input).collect() };
        let mut depth: Vec<usize> = vec![0; inputs];
        let konst = |rng: &mut R| (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect::<Vec<f64>>();
        while c.gates.len() < inputs + gates {
            let n = c.gates.len();
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let gate = match rng.random_range(0..7u8) {
                0 => Gate::Add(a, b),
                1 => Gate::Sub(a, b),
                2 | 3 if depth[a].max(depth[b]) < max_depth => Gate::Mul(a, b),
                4 if depth[a] < max_depth => Gate::MulPlain(a, konst(rng)),
                5 => Gate::Rotate(a, rng.random_range(-(len as i64)..=len as i64) as isize),
                6 => Gate::InnerSum(a, 1 << rng.random_range(1..=3)),
                _ => Gate::AddPlain(a, konst(rng)),
            };
            let d = match &gate {
                Gate::Add(a, b) | Gate::Sub(a, b) => depth[*a].max(depth[*b]),
                Gate::Mul(a, b) => depth[*a].max(depth[*b]) + 1,
                Gate::MulPlain(a, _) => depth[*a] + 1,
                Gate::AddPlain(a, _) | Gate::Rotate(a, _) | Gate::InnerSum(a, _) => depth[*a],
                Gate::Input(_) => 0,
            };
            depth.push(d);
            c.gates.push(gate);
        }
        // make the deepest gate the output so depth is actually exercised
        let deepest = (0..depth.len()).max_by_key(|&i| (depth[i], i)).expect("non-empty");
        c.gates.truncate(deepest + 1);
        c
    }
}

/// `‖got - want‖∞ / ‖want‖∞`, with the denominator floored at `f64::MIN_POSITIVE`.
pub fn relative_error(got: &[f64], want: &[f64]) -> f64 {
    let num = got.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max);
    let den = want.iter().map(|w| w.abs()).fold(0.0, f64::max);
    num / den.max(f64::MIN_POSITIVE)
}

pub fn max_abs_error(got: &[f64], want: &[f64]) -> f64 {
    got.iter().zip(want).map(|(g, w)| (g - w).abs()).fold(0.0, f64::max)
}
