use std::fmt;

use sha2::{Digest, Sha256};

use crate::arith::{is_prime, ntt_primes};
use crate::error::{FheError, Result};

/// How the ciphertext modulus chain is specified.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ModulusChain {
    /// Bit sizes `q_0 .. q_L`; NTT-friendly primes are searched for.
    Bits(Vec<u32>),
    /// Explicit primes `q_0 .. q_L`, checked for NTT-friendliness.
    Primes(Vec<u64>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FheParams {
    pub ring_degree: usize,
    pub level_count: usize,
    pub scale_bits: u32,
    pub modulus_chain: ModulusChain,
    /// Bit size of the auxiliary prime used for key switching and encryption.
    pub special_bits: u32,
    pub seed: u64,
    /// Hamming weight of the sparse ternary secret.
    pub hamming_weight: usize,
    /// Standard deviation of the error distribution.
    pub sigma: f64,
}

impl Default for FheParams {
    fn default() -> Self {
        Self::preset("default").expect("built-in preset")
    }
}

impl FheParams {
    pub const PRESETS: [&'static str; 2] = ["default", "small"];

    /// Named parameter sets. `default` is N = 4096, `small` is N = 1024;
    /// both use six 30-bit levels over a 40-bit base prime.
    pub fn preset(name: &str) -> Result<Self> {
        let ring_degree = match name {
            "default" => 4096,
            "small" => 1024,
            other => return Err(FheError::InvalidParams(format!("unknown preset '{other}'"))),
        };
        Ok(FheParams {
            ring_degree,
            level_count: 6,
            scale_bits: 30,
            modulus_chain: ModulusChain::Bits(vec![40, 30, 30, 30, 30, 30, 30]),
            special_bits: 60,
            seed: 0x5eed,
            hamming_weight: 64,
            sigma: 3.2,
        })
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn slot_count(&self) -> usize {
        self.ring_degree / 2
    }

    /// Validate and resolve the chain into `(q_0..q_L, special prime)`.
    pub fn resolve_primes(&self) -> Result<(Vec<u64>, u64)> {
        let n = self.ring_degree;
        if !n.is_power_of_two() || !(1 << 10..=1 << 14).contains(&n) {
            return Err(FheError::InvalidParams(format!("ring degree {n} is not a power of two in 2^10..2^14")));
        }
        if self.level_count < 1 {
            return Err(FheError::InvalidParams("level_count must be at least 1".into()));
        }
        if !(10..=50).contains(&self.scale_bits) {
            return Err(FheError::InvalidParams(format!("scale_bits {} outside 10..=50", self.scale_bits)));
        }
        if self.hamming_weight == 0 || self.hamming_weight > n {
            return Err(FheError::InvalidParams("hamming weight must lie in 1..=ring_degree".into()));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(FheError::InvalidParams("sigma must be positive".into()));
        }
        let two_n = 2 * n as u64;
        let primes = match &self.modulus_chain {
            ModulusChain::Bits(bits) => {
                self.check_len(bits.len())?;
                if let Some(b) = bits.iter().find(|b| !(20..=60).contains(*b)) {
                    return Err(FheError::InvalidParams(format!("prime size {b} bits outside 20..=60")));
                }
                let mut out = vec![0u64; bits.len()];
                let mut used = Vec::new();
                let mut sizes: Vec<u32> = bits.clone();
                sizes.sort_unstable();
                sizes.dedup();
                for size in sizes {
                    let slots: Vec<usize> = (0..bits.len()).filter(|&i| bits[i] == size).collect();
                    let found = ntt_primes(size, two_n, slots.len(), &used);
                    for (i, p) in slots.into_iter().zip(found) {
                        out[i] = p;
                        used.push(p);
                    }
                }
                out
            }
            ModulusChain::Primes(ps) => {
                self.check_len(ps.len())?;
                for (i, &p) in ps.iter().enumerate() {
                    if p >= 1 << 61 || !is_prime(p) {
                        return Err(FheError::InvalidParams(format!("q_{i} = {p} is not a prime below 2^61")));
                    }
                    if p % two_n != 1 {
                        return Err(FheError::InvalidParams(format!("q_{i} = {p} is not 1 mod {two_n}")));
                    }
                    if ps[..i].contains(&p) {
                        return Err(FheError::InvalidParams(format!("q_{i} = {p} repeats")));
                    }
                }
                ps.clone()
            }
        };
        let q0_bits = 64 - primes[0].leading_zeros();
        if q0_bits <= self.scale_bits + 1 {
            return Err(FheError::InvalidParams("q_0 must exceed the scale by at least two bits".into()));
        }
        let max_bits = primes.iter().map(|p| 64 - p.leading_zeros()).max().unwrap_or(0);
        if !(max_bits..=60).contains(&self.special_bits) {
            return Err(FheError::InvalidParams(format!(
                "special prime needs between {max_bits} and 60 bits, got {}",
                self.special_bits
            )));
        }
        let special = ntt_primes(self.special_bits, two_n, 1, &primes)[0];
        Ok((primes, special))
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.level_count + 1 {
            return Err(FheError::InvalidParams(format!(
                "modulus chain has {len} primes, level_count {} needs {}",
                self.level_count,
                self.level_count + 1
            )));
        }
        Ok(())
    }

    /// SHA-256 over the canonical text form.
    pub fn digest(&self) -> [u8; 32] {
        Sha256::digest(self.to_string().as_bytes()).into()
    }

    /// Parse the `key=value;...` form produced by `Display`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut p = FheParams::default();
        let bad = |k: &str, v: &str| FheError::InvalidParams(format!("bad value '{v}' for {k}"));
        for part in text.split(';').map(str::trim).filter(|s| !s.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| FheError::InvalidParams(format!("expected key=value, got '{part}'")))?;
            let list = || -> Result<Vec<u64>> { v.split(',').map(|x| x.trim().parse().map_err(|_| bad(k, v))).collect() };
            match k.trim() {
                "ring_degree" => p.ring_degree = v.parse().map_err(|_| bad(k, v))?,
                "level_count" => p.level_count = v.parse().map_err(|_| bad(k, v))?,
                "scale_bits" => p.scale_bits = v.parse().map_err(|_| bad(k, v))?,
                "chain_bits" => p.modulus_chain = ModulusChain::Bits(list()?.into_iter().map(|b| b as u32).collect()),
                "chain_primes" => p.modulus_chain = ModulusChain::Primes(list()?),
                "special_bits" => p.special_bits = v.parse().map_err(|_| bad(k, v))?,
                "seed" => p.seed = v.parse().map_err(|_| bad(k, v))?,
                "hamming_weight" => p.hamming_weight = v.parse().map_err(|_| bad(k, v))?,
                "sigma" => p.sigma = v.parse().map_err(|_| bad(k, v))?,
                other => return Err(FheError::InvalidParams(format!("unknown key '{other}'"))),
            }
        }
        Ok(p)
    }
}

impl fmt::Display for FheParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |xs: Vec<String>| xs.join(",");
        let chain = match &self.modulus_chain {
            ModulusChain::Bits(b) => format!("chain_bits={}", join(b.iter().map(u32::to_string).collect())),
            ModulusChain::Primes(p) => format!("chain_primes={}", join(p.iter().map(u64::to_string).collect())),
        };
        write!(
            f,
            "ring_degree={};level_count={};scale_bits={};{chain};special_bits={};seed={};hamming_weight={};sigma={}",
            self.ring_degree, self.level_count, self.scale_bits, self.special_bits, self.seed, self.hamming_weight, self.sigma
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_resolves() {
        let p = FheParams::default();
        assert_eq!(p.slot_count(), 2048);
        let (qs, sp) = p.resolve_primes().unwrap();
        assert_eq!(qs.len(), 7);
        assert_eq!(64 - qs[0].leading_zeros(), 41);
        assert!(qs.iter().chain([&sp]).all(|q| q % 8192 == 1));
        assert!(sp > 1 << 59);
    }

    #[test]
    fn rejects_bad_chains() {
        let mut p = FheParams::default();
        p.modulus_chain = ModulusChain::Primes(vec![1_099_511_922_689, 1_073_750_017, 1_073_741_827, 3, 5, 7, 11]);
        assert!(matches!(p.resolve_primes(), Err(FheError::InvalidParams(_))));
        p.modulus_chain = ModulusChain::Bits(vec![40, 30]);
        assert!(p.resolve_primes().is_err());
        p = FheParams::default();
        p.ring_degree = 512;
        assert!(p.resolve_primes().is_err());
    }

    #[test]
    fn text_round_trip() {
        let p = FheParams::preset("small").unwrap().with_seed(99);
        assert_eq!(FheParams::parse(&p.to_string()).unwrap(), p);
        assert_ne!(p.digest(), FheParams::default().digest());
    }
}
