//! Canonical-embedding encoder: packs `N/2` complex slots into a real
//! polynomial of degree `< N`. Slot `j` sits at the root `ζ^(5^j)`, so the
//! ring automorphism `X -> X^(5^k)` rotates slots left by `k`.

use std::f64::consts::PI;

use num_complex::Complex64;

#[derive(Clone, Debug)]
pub struct Encoder {
    n: usize,
    rot_group: Vec<usize>,
    ksi: Vec<Complex64>,
}

fn bit_reverse_in_place(v: &mut [Complex64]) {
    let n = v.len();
    let mut j = 0;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            v.swap(i, j);
        }
    }
}

impl Encoder {
    pub fn new(n: usize) -> Self {
        let m = 2 * n;
        let mut rot_group = Vec::with_capacity(n / 2);
        let mut g = 1usize;
        for _ in 0..n / 2 {
            rot_group.push(g);
            g = g * 5 % m;
        }
        let ksi = (0..=m)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64))
            .collect();
        Encoder { n, rot_group, ksi }
    }

    pub fn slots(&self) -> usize {
        self.n / 2
    }

    /// Galois element for a left rotation by `steps`.
    pub fn galois_element(&self, steps: usize) -> usize {
        self.rot_group[steps % self.slots()]
    }

    fn fft_special(&self, v: &mut [Complex64]) {
        let size = v.len();
        let m = 2 * self.n;
        bit_reverse_in_place(v);
        let mut len = 2;
        while len <= size {
            let lenh = len >> 1;
            let lenq = len << 2;
            let gap = m / lenq;
            for i in (0..size).step_by(len) {
                for j in 0..lenh {
                    let idx = (self.rot_group[j] % lenq) * gap;
                    let u = v[i + j];
                    let w = v[i + j + lenh] * self.ksi[idx];
                    v[i + j] = u + w;
                    v[i + j + lenh] = u - w;
                }
            }
            len <<= 1;
        }
    }

    fn fft_special_inv(&self, v: &mut [Complex64]) {
        let size = v.len();
        let m = 2 * self.n;
        let mut len = size;
        while len >= 2 {
            let lenh = len >> 1;
            let lenq = len << 2;
            let gap = m / lenq;
            for i in (0..size).step_by(len) {
                for j in 0..lenh {
                    let idx = (lenq - (self.rot_group[j] % lenq)) * gap;
                    let u = v[i + j] + v[i + j + lenh];
                    let w = (v[i + j] - v[i + j + lenh]) * self.ksi[idx];
                    v[i + j] = u;
                    v[i + j + lenh] = w;
                }
            }
            len >>= 1;
        }
        bit_reverse_in_place(v);
        let inv = 1.0 / size as f64;
        for x in v.iter_mut() {
            *x *= inv;
        }
    }

    /// Real slot values to (unrounded) coefficients scaled by `scale`.
    pub fn embed(&self, values: &[f64], scale: f64) -> Vec<f64> {
        let half = self.slots();
        let mut v: Vec<Complex64> = (0..half)
            .map(|i| Complex64::new(values.get(i).copied().unwrap_or(0.0), 0.0))
            .collect();
        self.fft_special_inv(&mut v);
        let mut coeffs = vec![0.0; self.n];
        for (j, z) in v.iter().enumerate() {
            coeffs[j] = z.re * scale;
            coeffs[j + half] = z.im * scale;
        }
        coeffs
    }

    /// Coefficients (already divided by the scale) back to real slot values.
    pub fn project(&self, coeffs: &[f64]) -> Vec<f64> {
        let half = self.slots();
        let mut v: Vec<Complex64> = (0..half).map(|j| Complex64::new(coeffs[j], coeffs[j + half])).collect();
        self.fft_special(&mut v);
        v.into_iter().map(|z| z.re).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embed_then_project_is_identity() {
        let e = Encoder::new(64);
        let vals: Vec<f64> = (0..32).map(|i| (i as f64 * 0.7).sin()).collect();
        let back = e.project(&e.embed(&vals, 1.0));
        for (a, b) in vals.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn coefficients_are_real_evaluations() {
        // decoding slot j must equal evaluating the polynomial at ζ^(5^j)
        let n = 16;
        let e = Encoder::new(n);
        let coeffs: Vec<f64> = (0..n).map(|i| i as f64 - 3.5).collect();
        let slots = e.project(&coeffs);
        for (j, s) in slots.iter().enumerate() {
            let root = e.rot_group[j];
            let val: Complex64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| *c * Complex64::from_polar(1.0, PI * (root * k) as f64 / n as f64))
                .sum();
            assert!((val.re - s).abs() < 1e-9, "slot {j}");
        }
    }
}
