//! Word-sized modular arithmetic.

/// An odd modulus below 2^62 with Barrett constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Modulus {
    q: u64,
    /// floor(2^128 / q) as (low, high) words.
    ratio: (u64, u64),
}

impl Modulus {
    pub fn new(q: u64) -> Self {
        assert!(q > 1 && q < (1 << 62), "modulus out of range");
        // 2^128 / q computed by long division on 64-bit halves
        let hi = u128::MAX / q as u128;
        // u128::MAX = 2^128 - 1, so floor((2^128 - 1) / q) equals floor(2^128 / q)
        // unless q divides 2^128, impossible for odd q > 1.
        Modulus {
            q,
            ratio: (hi as u64, (hi >> 64) as u64),
        }
    }

    #[inline]
    pub fn value(&self) -> u64 {
        self.q
    }

    /// Reduce a 128-bit value.
    #[inline]
    pub fn reduce_u128(&self, x: u128) -> u64 {
        let lo = x as u64;
        let hi = (x >> 64) as u64;
        let (r0, r1) = self.ratio;
        // floor(x * ratio / 2^128), computed to within one
        let carry = ((lo as u128 * r0 as u128) >> 64) as u64;
        let t = lo as u128 * r1 as u128;
        let (t_lo, c1) = (t as u64).overflowing_add(carry);
        let tmp3 = ((t >> 64) as u64).wrapping_add(c1 as u64);
        let t2 = hi as u128 * r0 as u128;
        let (_, c2) = t_lo.overflowing_add(t2 as u64);
        let carry2 = ((t2 >> 64) as u64).wrapping_add(c2 as u64);
        let quot = hi.wrapping_mul(r1).wrapping_add(tmp3).wrapping_add(carry2);
        let r = lo.wrapping_sub(quot.wrapping_mul(self.q));
        // branch-free conditional subtraction: min picks the in-range value
        r.min(r.wrapping_sub(self.q))
    }

    #[inline]
    pub fn reduce(&self, x: u64) -> u64 {
        if x >= self.q {
            self.reduce_u128(x as u128)
        } else {
            x
        }
    }

    #[inline]
    pub fn reduce_i64(&self, x: i64) -> u64 {
        if x >= 0 {
            self.reduce(x as u64)
        } else {
            self.neg(self.reduce(x.unsigned_abs()))
        }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        s.min(s.wrapping_sub(self.q))
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        let d = a.wrapping_sub(b);
        d.min(d.wrapping_add(self.q))
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.q - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        self.reduce_u128(a as u128 * b as u128)
    }

    /// Shoup companion of a fixed multiplicand: floor(w * 2^64 / q).
    #[inline]
    pub fn shoup(&self, w: u64) -> u64 {
        (((w as u128) << 64) / self.q as u128) as u64
    }

    /// `a * w mod q` given `w_shoup = shoup(w)`.
    #[inline]
    pub fn mul_shoup(&self, a: u64, w: u64, w_shoup: u64) -> u64 {
        let quot = ((a as u128 * w_shoup as u128) >> 64) as u64;
        let r = a.wrapping_mul(w).wrapping_sub(quot.wrapping_mul(self.q));
        r.min(r.wrapping_sub(self.q))
    }

    pub fn pow(&self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1u64;
        base = self.reduce(base);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Inverse of a unit (q prime).
    pub fn inv(&self, a: u64) -> u64 {
        debug_assert!(a % self.q != 0);
        self.pow(a, self.q - 2)
    }

    /// Symmetric representative in (-q/2, q/2].
    #[inline]
    pub fn center(&self, a: u64) -> i64 {
        if a > self.q / 2 {
            a as i64 - self.q as i64
        } else {
            a as i64
        }
    }
}

fn mul_mod(a: u64, b: u64, m: u64) -> u64 {
    (a as u128 * b as u128 % m as u128) as u64
}

fn pow_mod(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc = 1u64 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_mod(acc, b, m);
        }
        b = mul_mod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin for 64-bit integers.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const WITNESSES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for p in WITNESSES {
        if n % p == 0 {
            return n == p;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d % 2 == 0 {
        d /= 2;
        r += 1;
    }
    'outer: for a in WITNESSES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..r {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'outer;
            }
        }
        return false;
    }
    true
}

/// Primes `≡ 1 (mod 2n)` close to `2^bits`, alternating above and below the
/// power of two so that repeated rescaling keeps the scale near it.
pub fn ntt_primes(bits: u32, two_n: u64, count: usize, exclude: &[u64]) -> Vec<u64> {
    let target = 1u64 << bits;
    let mut above = target + 1;
    let mut below = target - two_n + 1;
    let mut out = Vec::with_capacity(count);
    let mut take_above = true;
    while out.len() < count {
        let candidate = if take_above {
            loop {
                if is_prime(above) && !exclude.contains(&above) && !out.contains(&above) {
                    break above;
                }
                above += two_n;
            }
        } else {
            loop {
                if is_prime(below) && !exclude.contains(&below) && !out.contains(&below) {
                    break below;
                }
                below -= two_n;
            }
        };
        out.push(candidate);
        take_above = !take_above;
    }
    out
}

/// A primitive `order`-th root of unity modulo prime `q` (order | q - 1).
pub fn primitive_root(q: u64, order: u64) -> u64 {
    assert_eq!((q - 1) % order, 0);
    let m = Modulus::new(q);
    let cofactor = (q - 1) / order;
    for g in 2..q {
        let w = m.pow(g, cofactor);
        // order is a power of two: w is primitive iff w^(order/2) = -1
        if m.pow(w, order / 2) == q - 1 {
            return w;
        }
    }
    unreachable!("a prime has a primitive root")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barrett_matches_remainder() {
        let mut x = 0x9E37_79B9_7F4A_7C15u64;
        for q in [97u64, (1 << 30) + 12289, 1_152_921_504_606_830_593, (1u64 << 61) - 1] {
            let m = Modulus::new(q);
            for _ in 0..2000 {
                x ^= x << 13;
                x ^= x >> 7;
                x ^= x << 17;
                let a = x % q;
                let b = x.rotate_left(17) % q;
                assert_eq!(m.mul(a, b), mul_mod(a, b, q));
                let w = x.rotate_left(5) % q;
                assert_eq!(m.mul_shoup(a, w, m.shoup(w)), mul_mod(a, w, q));
            }
        }
    }

    #[test]
    fn primes_are_ntt_friendly() {
        let ps = ntt_primes(30, 8192, 6, &[]);
        assert_eq!(ps.len(), 6);
        for p in &ps {
            assert!(is_prime(*p));
            assert_eq!(p % 8192, 1);
        }
        assert!(ps[0] > 1 << 30 && ps[1] < 1 << 30);
        let r = primitive_root(ps[0], 8192);
        let m = Modulus::new(ps[0]);
        assert_eq!(m.pow(r, 8192), 1);
        assert_eq!(m.pow(r, 4096), ps[0] - 1);
    }

    #[test]
    fn primality() {
        assert!(is_prime(2_305_843_009_213_693_951));
        assert!(!is_prime(3_215_031_751));
        assert!(!is_prime(1));
    }
}
