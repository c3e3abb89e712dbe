use crate::encoding::Encoder;
use crate::error::Result;
use crate::ntt::NttTable;
use crate::params::FheParams;

/// Precomputed tables shared by every key and ciphertext of one parameter set.
#[derive(Debug)]
pub struct Context {
    pub params: FheParams,
    pub n: usize,
    /// `q_0 .. q_L`, then the special prime at index `L + 1`.
    pub tables: Vec<NttTable>,
    pub encoder: Encoder,
    /// Canonical scale at each level. The top level uses `2^scale_bits`;
    /// below it `Δ_{l-1} = Δ_l^2 / q_l`, which is exactly what a product of two
    /// level-`l` ciphertexts carries after rescaling.
    pub scales: Vec<f64>,
    pub digest: [u8; 32],
}

impl Context {
    pub fn new(params: &FheParams) -> Result<Self> {
        let (primes, special) = params.resolve_primes()?;
        let n = params.ring_degree;
        let tables = primes
            .iter()
            .chain(std::iter::once(&special))
            .map(|&q| NttTable::new(q, n))
            .collect();
        let top = params.level_count;
        let mut scales = vec![0.0; top + 1];
        scales[top] = (params.scale_bits as f64).exp2();
        for l in (1..=top).rev() {
            scales[l - 1] = scales[l] * scales[l] / primes[l] as f64;
        }
        Ok(Context {
            params: params.clone(),
            n,
            tables,
            encoder: Encoder::new(n),
            scales,
            digest: params.digest(),
        })
    }

    pub fn max_level(&self) -> usize {
        self.params.level_count
    }

    pub fn slots(&self) -> usize {
        self.n / 2
    }

    pub fn special_index(&self) -> usize {
        self.params.level_count + 1
    }

    pub fn q(&self, i: usize) -> u64 {
        self.tables[i].modulus.value()
    }
}
