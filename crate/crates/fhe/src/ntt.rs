//! Negacyclic number-theoretic transform over `Z_q[X]/(X^N + 1)`.

use crate::arith::{primitive_root, Modulus};

#[derive(Clone, Debug)]
pub struct NttTable {
    pub modulus: Modulus,
    n: usize,
    // ψ^bitrev(k) and ψ^-bitrev(k), each with its Shoup companion
    psi: Vec<(u64, u64)>,
    psi_inv: Vec<(u64, u64)>,
    n_inv: (u64, u64),
}

fn bit_reverse(x: usize, bits: u32) -> usize {
    if bits == 0 {
        0
    } else {
        x.reverse_bits() >> (usize::BITS - bits)
    }
}

impl NttTable {
    pub fn new(q: u64, n: usize) -> Self {
        let m = Modulus::new(q);
        let psi = primitive_root(q, 2 * n as u64);
        let psi_inv = m.inv(psi);
        let bits = n.trailing_zeros();
        let mut fwd = vec![(0, 0); n];
        let mut inv = vec![(0, 0); n];
        for (k, (f, i)) in fwd.iter_mut().zip(inv.iter_mut()).enumerate() {
            let e = bit_reverse(k, bits) as u64;
            let w = m.pow(psi, e);
            let wi = m.pow(psi_inv, e);
            *f = (w, m.shoup(w));
            *i = (wi, m.shoup(wi));
        }
        let ni = m.inv(n as u64);
        NttTable {
            modulus: m,
            n,
            psi: fwd,
            psi_inv: inv,
            n_inv: (ni, m.shoup(ni)),
        }
    }

    pub fn forward(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let q = self.modulus;
        let mut t = self.n;
        let mut m = 1;
        while m < self.n {
            t >>= 1;
            for (i, block) in a.chunks_exact_mut(2 * t).enumerate() {
                let (w, ws) = self.psi[m + i];
                let (lo, hi) = block.split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let u = *x;
                    let v = q.mul_shoup(*y, w, ws);
                    *x = q.add(u, v);
                    *y = q.sub(u, v);
                }
            }
            m <<= 1;
        }
    }

    pub fn inverse(&self, a: &mut [u64]) {
        debug_assert_eq!(a.len(), self.n);
        let q = self.modulus;
        let mut t = 1;
        let mut m = self.n;
        while m > 1 {
            let h = m >> 1;
            for (i, block) in a.chunks_exact_mut(2 * t).enumerate() {
                let (w, ws) = self.psi_inv[h + i];
                let (lo, hi) = block.split_at_mut(t);
                for (x, y) in lo.iter_mut().zip(hi.iter_mut()) {
                    let (u, v) = (*x, *y);
                    *x = q.add(u, v);
                    *y = q.mul_shoup(q.sub(u, v), w, ws);
                }
            }
            t <<= 1;
            m = h;
        }
        let (ni, nis) = self.n_inv;
        for x in a.iter_mut() {
            *x = q.mul_shoup(*x, ni, nis);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ntt_primes;

    fn schoolbook(a: &[u64], b: &[u64], q: &Modulus) -> Vec<u64> {
        let n = a.len();
        let mut out = vec![0u64; n];
        for i in 0..n {
            for j in 0..n {
                let p = q.mul(a[i], b[j]);
                let k = i + j;
                if k < n {
                    out[k] = q.add(out[k], p);
                } else {
                    out[k - n] = q.sub(out[k - n], p);
                }
            }
        }
        out
    }

    #[test]
    fn negacyclic_product_matches_schoolbook() {
        let n = 64;
        let q = ntt_primes(30, 2 * n as u64, 1, &[])[0];
        let table = NttTable::new(q, n);
        let m = table.modulus;
        let a: Vec<u64> = (0..n as u64).map(|i| (i * 7919 + 3) % q).collect();
        let b: Vec<u64> = (0..n as u64).map(|i| (i * i * 104_729 + 11) % q).collect();
        let expect = schoolbook(&a, &b, &m);
        let (mut fa, mut fb) = (a.clone(), b.clone());
        table.forward(&mut fa);
        table.forward(&mut fb);
        let mut c: Vec<u64> = fa.iter().zip(&fb).map(|(x, y)| m.mul(*x, *y)).collect();
        table.inverse(&mut c);
        assert_eq!(c, expect);
        table.inverse(&mut fa);
        assert_eq!(fa, a);
    }
}
