//! Residue-number-system CKKS-style scheme.
//!
//! Polynomials are stored as one row of `N` residues per modulus, always in
//! NTT form unless a function says otherwise. Key material lives over
//! `q_0 .. q_L` plus the special prime `P`; ciphertexts at level `l` over
//! `q_0 .. q_l`.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::context::Context;
use crate::error::{FheError, Result};

pub type Poly = Vec<Vec<u64>>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SecretPoly {
    pub small: Vec<i64>,
    pub ntt: Poly,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicPoly {
    pub b: Poly,
    pub a: Poly,
}

/// Key-switching key with one RNS digit per chain prime.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SwitchKey {
    pub b: Vec<Poly>,
    pub a: Vec<Poly>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EvalKeys {
    pub relin: SwitchKey,
    /// Left-rotation keys by power-of-two step.
    pub rotations: BTreeMap<usize, SwitchKey>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RlweCiphertext {
    pub c0: Poly,
    pub c1: Poly,
}

impl RlweCiphertext {
    pub fn level(&self) -> usize {
        self.c0.len() - 1
    }
}

// ---- sampling ------------------------------------------------------------

fn sample_uniform<R: Rng + ?Sized>(ctx: &Context, moduli: &[usize], rng: &mut R) -> Poly {
    moduli
        .iter()
        .map(|&i| {
            let q = ctx.q(i);
            (0..ctx.n).map(|_| rng.random_range(0..q)).collect()
        })
        .collect()
}

fn sample_gaussian<R: Rng + ?Sized>(ctx: &Context, rng: &mut R) -> Vec<i64> {
    let sigma = ctx.params.sigma;
    let normal = Normal::new(0.0, sigma).expect("validated sigma");
    let bound = (6.0 * sigma).ceil();
    (0..ctx.n)
        .map(|_| normal.sample(rng).round().clamp(-bound, bound) as i64)
        .collect()
}

fn sample_zo<R: Rng + ?Sized>(ctx: &Context, rng: &mut R) -> Vec<i64> {
    (0..ctx.n)
        .map(|_| match rng.random_range(0..4u8) {
            0 => -1,
            1 => 1,
            _ => 0,
        })
        .collect()
}

fn sample_sparse_ternary<R: Rng + ?Sized>(ctx: &Context, rng: &mut R) -> Vec<i64> {
    let mut s = vec![0i64; ctx.n];
    for i in sample(rng, ctx.n, ctx.params.hamming_weight) {
        s[i] = if rng.random_bool(0.5) { 1 } else { -1 };
    }
    s
}

// ---- polynomial helpers --------------------------------------------------

fn all_moduli(ctx: &Context) -> Vec<usize> {
    (0..=ctx.special_index()).collect()
}

fn chain(level: usize) -> Vec<usize> {
    (0..=level).collect()
}

fn small_to_ntt(ctx: &Context, small: &[i64], moduli: &[usize]) -> Poly {
    moduli
        .iter()
        .map(|&i| {
            let t = &ctx.tables[i];
            let mut row: Vec<u64> = small.iter().map(|&x| t.modulus.reduce_i64(x)).collect();
            t.forward(&mut row);
            row
        })
        .collect()
}

fn zip_rows(ctx: &Context, moduli: &[usize], a: &Poly, b: &Poly, f: impl Fn(&crate::arith::Modulus, u64, u64) -> u64) -> Poly {
    moduli
        .iter()
        .enumerate()
        .map(|(r, &i)| {
            let m = &ctx.tables[i].modulus;
            a[r].iter().zip(&b[r]).map(|(x, y)| f(m, *x, *y)).collect()
        })
        .collect()
}

fn add(ctx: &Context, moduli: &[usize], a: &Poly, b: &Poly) -> Poly {
    zip_rows(ctx, moduli, a, b, |m, x, y| m.add(x, y))
}

fn sub(ctx: &Context, moduli: &[usize], a: &Poly, b: &Poly) -> Poly {
    zip_rows(ctx, moduli, a, b, |m, x, y| m.sub(x, y))
}

fn mul(ctx: &Context, moduli: &[usize], a: &Poly, b: &Poly) -> Poly {
    zip_rows(ctx, moduli, a, b, |m, x, y| m.mul(x, y))
}

/// Divide by the modulus of the last row with rounding and drop it.
/// `moduli` names the rows of `p`; the last entry is removed.
fn divide_by_last(ctx: &Context, moduli: &[usize], mut p: Poly) -> Poly {
    let last_idx = *moduli.last().expect("at least two rows");
    let last_table = &ctx.tables[last_idx];
    let mut last = p.pop().expect("at least two rows");
    last_table.inverse(&mut last);
    let ql = last_table.modulus;
    for (r, &i) in moduli[..moduli.len() - 1].iter().enumerate() {
        let t = &ctx.tables[i];
        let m = &t.modulus;
        let mut lifted: Vec<u64> = last.iter().map(|&x| m.reduce_i64(ql.center(x))).collect();
        t.forward(&mut lifted);
        let inv = m.inv(m.reduce(ql.value()));
        for (x, y) in p[r].iter_mut().zip(&lifted) {
            *x = m.mul(m.sub(*x, *y), inv);
        }
    }
    p
}

fn automorphism_small(src: &[i64], g: usize) -> Vec<i64> {
    let n = src.len();
    let mut out = vec![0i64; n];
    for (i, &c) in src.iter().enumerate() {
        let j = i * g % (2 * n);
        if j < n {
            out[j] = c;
        } else {
            out[j - n] = -c;
        }
    }
    out
}

fn automorphism(ctx: &Context, moduli: &[usize], p: &Poly, g: usize) -> Poly {
    let n = ctx.n;
    moduli
        .iter()
        .enumerate()
        .map(|(r, &i)| {
            let t = &ctx.tables[i];
            let mut coeffs = p[r].clone();
            t.inverse(&mut coeffs);
            let mut out = vec![0u64; n];
            for (k, &c) in coeffs.iter().enumerate() {
                let j = k * g % (2 * n);
                if j < n {
                    out[j] = c;
                } else {
                    out[j - n] = t.modulus.neg(c);
                }
            }
            t.forward(&mut out);
            out
        })
        .collect()
}

/// Round scaled coefficients to residues over `q_0 .. q_level` (NTT form).
fn encode(ctx: &Context, values: &[f64], scale: f64, level: usize) -> Result<Poly> {
    let coeffs = ctx.encoder.embed(values, scale);
    let mut ints = Vec::with_capacity(coeffs.len());
    for c in coeffs {
        let r = c.round();
        if !(r.abs() < 4.6e18) {
            return Err(FheError::Overflow { scale_log2: scale.log2() });
        }
        ints.push(r as i64);
    }
    Ok(small_to_ntt(ctx, &ints, &chain(level)))
}

/// Balanced CRT reconstruction of each coefficient, as `f64`.
fn reconstruct(ctx: &Context, rows: &[Vec<u64>]) -> Vec<f64> {
    let l = rows.len() - 1;
    // pre[i][k] = prod_{j<k} q_j mod q_i
    let pre: Vec<Vec<u64>> = (0..=l)
        .map(|i| {
            let m = &ctx.tables[i].modulus;
            let mut v = vec![1u64; i + 1];
            for k in 1..=i {
                v[k] = m.mul(v[k - 1], m.reduce(ctx.q(k - 1)));
            }
            v
        })
        .collect();
    let inv: Vec<u64> = (0..=l).map(|i| ctx.tables[i].modulus.inv(pre[i][i])).collect();
    let mut digits = vec![0i64; l + 1];
    (0..ctx.n)
        .map(|c| {
            for i in 0..=l {
                let m = &ctx.tables[i].modulus;
                let mut acc = 0u64;
                for k in 0..i {
                    acc = m.add(acc, m.mul(m.reduce_i64(digits[k]), pre[i][k]));
                }
                digits[i] = m.center(m.mul(m.sub(rows[i][c], acc), inv[i]));
            }
            let mut x = digits[l] as f64;
            for i in (0..l).rev() {
                x = x * ctx.q(i) as f64 + digits[i] as f64;
            }
            x
        })
        .collect()
}

// ---- keys ----------------------------------------------------------------

pub fn gen_secret<R: Rng + ?Sized>(ctx: &Context, rng: &mut R) -> SecretPoly {
    let small = sample_sparse_ternary(ctx, rng);
    let ntt = small_to_ntt(ctx, &small, &all_moduli(ctx));
    SecretPoly { small, ntt }
}

pub fn gen_public<R: Rng + ?Sized>(ctx: &Context, s: &SecretPoly, rng: &mut R) -> PublicPoly {
    let moduli = all_moduli(ctx);
    let a = sample_uniform(ctx, &moduli, rng);
    let e = small_to_ntt(ctx, &sample_gaussian(ctx, rng), &moduli);
    let b = sub(ctx, &moduli, &e, &mul(ctx, &moduli, &a, &s.ntt));
    PublicPoly { b, a }
}

/// Key switching from `target` (NTT over all moduli) to `s`.
fn gen_switch_key<R: Rng + ?Sized>(ctx: &Context, s: &SecretPoly, target: &Poly, rng: &mut R) -> SwitchKey {
    let moduli = all_moduli(ctx);
    let sp = ctx.special_index();
    let p_value = ctx.q(sp);
    let mut bs = Vec::with_capacity(sp);
    let mut as_ = Vec::with_capacity(sp);
    for digit in 0..sp {
        let a = sample_uniform(ctx, &moduli, rng);
        let e = small_to_ntt(ctx, &sample_gaussian(ctx, rng), &moduli);
        let mut b = sub(ctx, &moduli, &e, &mul(ctx, &moduli, &a, &s.ntt));
        let m = &ctx.tables[digit].modulus;
        let p_mod = m.reduce(p_value);
        for (x, t) in b[digit].iter_mut().zip(&target[digit]) {
            *x = m.add(*x, m.mul(p_mod, *t));
        }
        bs.push(b);
        as_.push(a);
    }
    SwitchKey { b: bs, a: as_ }
}

pub fn gen_eval<R: Rng + ?Sized>(ctx: &Context, s: &SecretPoly, rng: &mut R) -> EvalKeys {
    let moduli = all_moduli(ctx);
    let s2 = mul(ctx, &moduli, &s.ntt, &s.ntt);
    let relin = gen_switch_key(ctx, s, &s2, rng);
    let mut rotations = BTreeMap::new();
    let mut step = 1;
    while step < ctx.slots() {
        let g = ctx.encoder.galois_element(step);
        let target = small_to_ntt(ctx, &automorphism_small(&s.small, g), &moduli);
        rotations.insert(step, gen_switch_key(ctx, s, &target, rng));
        step <<= 1;
    }
    EvalKeys { relin, rotations }
}

// ---- encryption ----------------------------------------------------------

pub fn encrypt<R: Rng + ?Sized>(ctx: &Context, pk: &PublicPoly, values: &[f64], rng: &mut R) -> Result<RlweCiphertext> {
    let top = ctx.max_level();
    let moduli = all_moduli(ctx);
    let m = encode(ctx, values, ctx.scales[top], top)?;
    let v = small_to_ntt(ctx, &sample_zo(ctx, rng), &moduli);
    let e0 = small_to_ntt(ctx, &sample_gaussian(ctx, rng), &moduli);
    let e1 = small_to_ntt(ctx, &sample_gaussian(ctx, rng), &moduli);
    let mut c0 = add(ctx, &moduli, &mul(ctx, &moduli, &v, &pk.b), &e0);
    let c1 = add(ctx, &moduli, &mul(ctx, &moduli, &v, &pk.a), &e1);
    // message enters as P·m so the noise shrinks by P when P is divided out
    let p_value = ctx.q(ctx.special_index());
    for (r, row) in c0.iter_mut().take(top + 1).enumerate() {
        let md = &ctx.tables[r].modulus;
        let p_mod = md.reduce(p_value);
        for (x, y) in row.iter_mut().zip(&m[r]) {
            *x = md.add(*x, md.mul(p_mod, *y));
        }
    }
    Ok(RlweCiphertext {
        c0: divide_by_last(ctx, &moduli, c0),
        c1: divide_by_last(ctx, &moduli, c1),
    })
}

pub fn decrypt(ctx: &Context, s: &SecretPoly, ct: &RlweCiphertext, scale: f64) -> Vec<f64> {
    let level = ct.level();
    let moduli = chain(level);
    let s_rows: Poly = s.ntt[..=level].to_vec();
    let mut m = add(ctx, &moduli, &ct.c0, &mul(ctx, &moduli, &ct.c1, &s_rows));
    for (r, row) in m.iter_mut().enumerate() {
        ctx.tables[r].inverse(row);
    }
    let coeffs: Vec<f64> = reconstruct(ctx, &m).into_iter().map(|x| x / scale).collect();
    ctx.encoder.project(&coeffs)
}

// ---- evaluation ----------------------------------------------------------

fn key_switch(ctx: &Context, d: &Poly, key: &SwitchKey) -> (Poly, Poly) {
    let level = d.len() - 1;
    let sp = ctx.special_index();
    let mut ext = chain(level);
    ext.push(sp);
    let mut acc0: Poly = vec![vec![0u64; ctx.n]; level + 2];
    let mut acc1 = acc0.clone();
    for digit in 0..=level {
        let qi = ctx.tables[digit].modulus;
        let mut coeffs = d[digit].clone();
        ctx.tables[digit].inverse(&mut coeffs);
        for (r, &i) in ext.iter().enumerate() {
            let lifted = if i == digit {
                d[digit].clone()
            } else {
                let t = &ctx.tables[i];
                let mut row: Vec<u64> = coeffs.iter().map(|&x| t.modulus.reduce_i64(qi.center(x))).collect();
                t.forward(&mut row);
                row
            };
            let m = &ctx.tables[i].modulus;
            let (kb, ka) = (&key.b[digit][i], &key.a[digit][i]);
            for (((x0, x1), y), (zb, za)) in acc0[r].iter_mut().zip(acc1[r].iter_mut()).zip(&lifted).zip(kb.iter().zip(ka)) {
                *x0 = m.add(*x0, m.mul(*y, *zb));
                *x1 = m.add(*x1, m.mul(*y, *za));
            }
        }
    }
    (divide_by_last(ctx, &ext, acc0), divide_by_last(ctx, &ext, acc1))
}

pub fn add_ct(ctx: &Context, a: &RlweCiphertext, b: &RlweCiphertext) -> RlweCiphertext {
    let moduli = chain(a.level());
    RlweCiphertext {
        c0: add(ctx, &moduli, &a.c0, &b.c0),
        c1: add(ctx, &moduli, &a.c1, &b.c1),
    }
}

pub fn sub_ct(ctx: &Context, a: &RlweCiphertext, b: &RlweCiphertext) -> RlweCiphertext {
    let moduli = chain(a.level());
    RlweCiphertext {
        c0: sub(ctx, &moduli, &a.c0, &b.c0),
        c1: sub(ctx, &moduli, &a.c1, &b.c1),
    }
}

pub fn add_plain(ctx: &Context, a: &RlweCiphertext, values: &[f64], scale: f64) -> Result<RlweCiphertext> {
    let moduli = chain(a.level());
    let m = encode(ctx, values, scale, a.level())?;
    Ok(RlweCiphertext {
        c0: add(ctx, &moduli, &a.c0, &m),
        c1: a.c1.clone(),
    })
}

fn rescale(ctx: &Context, ct: RlweCiphertext) -> RlweCiphertext {
    let moduli = chain(ct.level());
    RlweCiphertext {
        c0: divide_by_last(ctx, &moduli, ct.c0),
        c1: divide_by_last(ctx, &moduli, ct.c1),
    }
}

/// Tensor, relinearize, rescale. Both operands at the same level `>= 1`.
pub fn mul_ct(ctx: &Context, keys: &EvalKeys, a: &RlweCiphertext, b: &RlweCiphertext) -> RlweCiphertext {
    let moduli = chain(a.level());
    let d0 = mul(ctx, &moduli, &a.c0, &b.c0);
    let d1 = add(ctx, &moduli, &mul(ctx, &moduli, &a.c0, &b.c1), &mul(ctx, &moduli, &a.c1, &b.c0));
    let d2 = mul(ctx, &moduli, &a.c1, &b.c1);
    let (k0, k1) = key_switch(ctx, &d2, &keys.relin);
    rescale(
        ctx,
        RlweCiphertext {
            c0: add(ctx, &moduli, &d0, &k0),
            c1: add(ctx, &moduli, &d1, &k1),
        },
    )
}

/// Multiply by an encoded plaintext at `plain_scale`, then rescale.
pub fn mul_plain(ctx: &Context, a: &RlweCiphertext, values: &[f64], plain_scale: f64) -> Result<RlweCiphertext> {
    let moduli = chain(a.level());
    let m = encode(ctx, values, plain_scale, a.level())?;
    Ok(rescale(
        ctx,
        RlweCiphertext {
            c0: mul(ctx, &moduli, &a.c0, &m),
            c1: mul(ctx, &moduli, &a.c1, &m),
        },
    ))
}

/// Move down to `target < level`: drop primes to `target + 1`, multiply by
/// the integer `factor` and rescale once.
pub fn descend(ctx: &Context, a: &RlweCiphertext, target: usize, factor: u64) -> RlweCiphertext {
    let moduli = chain(target + 1);
    let scale_rows = |p: &Poly| -> Poly {
        moduli
            .iter()
            .map(|&i| {
                let m = &ctx.tables[i].modulus;
                let f = m.reduce(factor);
                p[i].iter().map(|&x| m.mul(x, f)).collect()
            })
            .collect()
    };
    rescale(
        ctx,
        RlweCiphertext {
            c0: scale_rows(&a.c0),
            c1: scale_rows(&a.c1),
        },
    )
}

/// Left rotation by a power-of-two step with its key.
fn rotate_pow2(ctx: &Context, keys: &EvalKeys, a: &RlweCiphertext, step: usize) -> Result<RlweCiphertext> {
    let key = keys.rotations.get(&step).ok_or(FheError::MissingRotationKey(step))?;
    let g = ctx.encoder.galois_element(step);
    let moduli = chain(a.level());
    let c0 = automorphism(ctx, &moduli, &a.c0, g);
    let c1 = automorphism(ctx, &moduli, &a.c1, g);
    let (k0, k1) = key_switch(ctx, &c1, key);
    Ok(RlweCiphertext {
        c0: add(ctx, &moduli, &c0, &k0),
        c1: k1,
    })
}

/// Left rotation by `steps in 0..slots`, composed from power-of-two keys.
pub fn rotate(ctx: &Context, keys: &EvalKeys, a: &RlweCiphertext, steps: usize) -> Result<RlweCiphertext> {
    let mut out = a.clone();
    let mut bit = 1;
    while bit < ctx.slots() {
        if steps & bit != 0 {
            out = rotate_pow2(ctx, keys, &out, bit)?;
        }
        bit <<= 1;
    }
    Ok(out)
}
