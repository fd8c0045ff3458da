//! Number-theoretic transforms over primes `p = c·2^23 + 1 < 2^31` in
//! Montgomery form, and Garner reconstruction of signed big integers from
//! their residues.

use std::sync::OnceLock;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::ToPrimitive;

use crate::arithmetic::factorize;

/// Largest supported transform length is `2^MAX_LOG`.
pub const MAX_LOG: u32 = 23;

#[derive(Debug, Clone, Copy)]
pub struct NttPrime {
    pub p: u32,
    /// `-p^{-1} mod 2^32`.
    neg_inv: u32,
    /// `2^64 mod p`, used to enter Montgomery form.
    r2: u32,
    /// Generator of the full multiplicative group.
    pub generator: u32,
}

impl NttPrime {
    fn new(p: u32) -> Self {
        // Newton iteration for p^{-1} mod 2^32.
        let mut inv: u32 = 1;
        for _ in 0..5 {
            inv = inv.wrapping_mul(2u32.wrapping_sub(p.wrapping_mul(inv)));
        }
        let r = (1u128 << 64) % p as u128;
        let generator = primitive_root(p);
        NttPrime {
            p,
            neg_inv: inv.wrapping_neg(),
            r2: r as u32,
            generator,
        }
    }

    #[inline(always)]
    fn reduce(&self, t: u64) -> u32 {
        let m = (t as u32).wrapping_mul(self.neg_inv);
        let u = ((t + m as u64 * self.p as u64) >> 32) as u32;
        if u >= self.p {
            u - self.p
        } else {
            u
        }
    }

    #[inline(always)]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.reduce(a as u64 * b as u64)
    }

    #[inline(always)]
    pub fn add(&self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.p {
            s - self.p
        } else {
            s
        }
    }

    #[inline(always)]
    pub fn sub(&self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.p - b
        }
    }

    /// Plain residue to Montgomery form.
    #[inline(always)]
    pub fn to_mont(&self, a: u32) -> u32 {
        self.mul(a % self.p, self.r2)
    }

    /// Montgomery form to plain residue.
    #[inline(always)]
    pub fn from_mont(&self, a: u32) -> u32 {
        self.reduce(a as u64)
    }

    /// Signed integer to Montgomery form.
    pub fn from_i64(&self, v: i64) -> u32 {
        let r = v.rem_euclid(self.p as i64) as u32;
        self.to_mont(r)
    }

    pub fn from_bigint(&self, v: &BigInt) -> u32 {
        let r = v.mod_floor_u32(self.p);
        self.to_mont(r)
    }

    /// `base^exp` on Montgomery representatives.
    pub fn pow(&self, mut base: u32, mut exp: u64) -> u32 {
        let mut acc = self.to_mont(1);
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    fn roots(&self, log: u32, invert: bool) -> Vec<u32> {
        // roots[i] = w^i for i < n/2, w a primitive n-th root of unity.
        let n = 1usize << log;
        let g = self.to_mont(self.generator);
        let mut w = self.pow(g, (self.p as u64 - 1) >> log);
        if invert {
            w = self.pow(w, self.p as u64 - 2);
        }
        let mut out = Vec::with_capacity(n / 2);
        let mut cur = self.to_mont(1);
        for _ in 0..n / 2 {
            out.push(cur);
            cur = self.mul(cur, w);
        }
        out
    }

    fn check_len(n: usize) -> u32 {
        assert!(n.is_power_of_two());
        let log = n.trailing_zeros();
        assert!(log <= MAX_LOG, "transform length 2^{log} unsupported");
        log
    }

    /// Decimation-in-frequency transform: natural order in, bit-reversed
    /// order out. Entries are Montgomery representatives.
    pub fn forward(&self, a: &mut [u32]) {
        let n = a.len();
        let log = Self::check_len(n);
        if n == 1 {
            return;
        }
        let base = self.roots(log, false);
        let mut stage = Vec::with_capacity(n / 2);
        let mut len = n;
        while len >= 2 {
            let half = len / 2;
            let w: &[u32] = if half == n / 2 {
                &base
            } else {
                stage.clear();
                stage.extend(base.iter().step_by(n / len).take(half));
                &stage
            };
            for block in a.chunks_exact_mut(len) {
                let (lo, hi) = block.split_at_mut(half);
                for ((x, y), &r) in lo.iter_mut().zip(hi.iter_mut()).zip(w) {
                    let (u, v) = (*x, *y);
                    *x = self.add(u, v);
                    *y = self.mul(self.sub(u, v), r);
                }
            }
            len /= 2;
        }
    }

    /// Decimation-in-time inverse of [`forward`](Self::forward) without the
    /// `1/n` scaling: bit-reversed order in, natural order out.
    pub fn inverse_unscaled(&self, a: &mut [u32]) {
        let n = a.len();
        let log = Self::check_len(n);
        if n == 1 {
            return;
        }
        let base = self.roots(log, true);
        let mut stage = Vec::with_capacity(n / 2);
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let w: &[u32] = if half == n / 2 {
                &base
            } else {
                stage.clear();
                stage.extend(base.iter().step_by(n / len).take(half));
                &stage
            };
            for block in a.chunks_exact_mut(len) {
                let (lo, hi) = block.split_at_mut(half);
                for ((x, y), &r) in lo.iter_mut().zip(hi.iter_mut()).zip(w) {
                    let u = *x;
                    let v = self.mul(*y, r);
                    *x = self.add(u, v);
                    *y = self.sub(u, v);
                }
            }
            len <<= 1;
        }
    }

    fn inv_len(&self, n: usize) -> u32 {
        self.pow(self.to_mont(n as u32 % self.p), self.p as u64 - 2)
    }

    /// Truncated product of two Montgomery-form series, keeping `out_len` terms.
    pub fn multiply(&self, a: &[u32], b: &[u32], out_len: usize) -> Vec<u32> {
        let a = &a[..a.len().min(out_len)];
        let b = &b[..b.len().min(out_len)];
        if a.is_empty() || b.is_empty() {
            return vec![0; out_len];
        }
        let full = a.len() + b.len() - 1;
        if a.len().min(b.len()) <= 32 {
            let mut out = vec![0u32; out_len];
            for (i, &x) in a.iter().enumerate() {
                if x == 0 {
                    continue;
                }
                for (j, &y) in b.iter().enumerate().take(out_len - i) {
                    out[i + j] = self.add(out[i + j], self.mul(x, y));
                }
            }
            return out;
        }
        let size = full.next_power_of_two();
        let mut fa = vec![0u32; size];
        fa[..a.len()].copy_from_slice(a);
        self.forward(&mut fa);
        let inv_n = self.inv_len(size);
        if std::ptr::eq(a, b) {
            for x in fa.iter_mut() {
                *x = self.mul(self.mul(*x, *x), inv_n);
            }
        } else {
            let mut fb = vec![0u32; size];
            fb[..b.len()].copy_from_slice(b);
            self.forward(&mut fb);
            for (x, y) in fa.iter_mut().zip(&fb) {
                *x = self.mul(self.mul(*x, *y), inv_n);
            }
        }
        self.inverse_unscaled(&mut fa);
        fa.truncate(out_len);
        fa.resize(out_len, 0);
        fa
    }

    pub fn square(&self, a: &[u32], out_len: usize) -> Vec<u32> {
        self.multiply(a, a, out_len)
    }
}

trait ModFloorU32 {
    fn mod_floor_u32(&self, p: u32) -> u32;
}

impl ModFloorU32 for BigInt {
    fn mod_floor_u32(&self, p: u32) -> u32 {
        let r = (self.magnitude() % p).to_u32().expect("residue fits");
        if self.sign() == Sign::Minus && r != 0 {
            p - r
        } else {
            r
        }
    }
}

fn primitive_root(p: u32) -> u32 {
    let phi = p as u64 - 1;
    let factors: Vec<u64> = factorize(phi).into_iter().map(|(q, _)| q).collect();
    let pow = |mut b: u64, mut e: u64| {
        let mut acc = 1u64;
        b %= p as u64;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b % p as u64;
            }
            b = b * b % p as u64;
            e >>= 1;
        }
        acc
    };
    (2..p as u64)
        .find(|&g| factors.iter().all(|&q| pow(g, phi / q) != 1))
        .expect("prime has a primitive root") as u32
}

static PRIMES: OnceLock<Vec<NttPrime>> = OnceLock::new();

/// NTT-friendly primes `c·2^23 + 1 < 2^31`, largest first.
pub fn ntt_primes() -> &'static [NttPrime] {
    PRIMES.get_or_init(|| {
        let mut out = Vec::new();
        let mut c: u64 = (1u64 << 31) >> MAX_LOG;
        while c > 1 {
            c -= 1;
            let p = (c << MAX_LOG) + 1;
            if p < (1 << 31) && crate::arithmetic::is_prime(p) {
                out.push(NttPrime::new(p as u32));
            }
        }
        out
    })
}

/// Smallest prefix of [`ntt_primes`] whose product exceeds `2·bound + 1`,
/// so that signed values with `|v| <= bound` are recovered uniquely.
pub fn primes_for_bound(bound: &BigUint) -> &'static [NttPrime] {
    let target: BigUint = bound * 2u32 + 1u32;
    let all = ntt_primes();
    let mut prod = BigUint::from(1u32);
    for (i, pr) in all.iter().enumerate() {
        prod *= pr.p;
        if prod > target {
            return &all[..=i];
        }
    }
    panic!("coefficient bound needs more than {} NTT primes", all.len());
}

const MAX_CRT: usize = 32;

/// Garner mixed-radix reconstruction into the symmetric range `(-M/2, M/2]`.
pub struct Crt {
    primes: Vec<u32>,
    /// inv[i][j] = p_j^{-1} mod p_i for j < i.
    inv: Vec<Vec<u64>>,
    modulus: BigUint,
}

impl Crt {
    pub fn new(primes: &[NttPrime]) -> Self {
        let ps: Vec<u32> = primes.iter().map(|p| p.p).collect();
        let mut inv = Vec::with_capacity(ps.len());
        for (i, &pi) in ps.iter().enumerate() {
            let row = ps[..i]
                .iter()
                .map(|&pj| modinv(pj as u64 % pi as u64, pi as u64))
                .collect();
            inv.push(row);
        }
        let mut acc = BigUint::from(1u32);
        for &p in &ps {
            acc *= p;
        }
        Crt {
            primes: ps,
            inv,
            modulus: acc,
        }
    }

    /// Reconstruct from plain (non-Montgomery) residues.
    pub fn reconstruct(&self, residues: &[u32]) -> BigInt {
        debug_assert_eq!(residues.len(), self.primes.len());
        let k = self.primes.len();
        assert!(k <= MAX_CRT, "at most {MAX_CRT} moduli");
        let mut digits = [0u64; MAX_CRT];
        for i in 0..k {
            let p = self.primes[i] as u64;
            let mut x = residues[i] as u64 % p;
            for j in 0..i {
                x = (x + p - digits[j] % p) % p * self.inv[i][j] % p;
            }
            digits[i] = x;
        }
        let mut value = BigUint::from(digits[k - 1]);
        for i in (0..k - 1).rev() {
            value *= self.primes[i];
            value += digits[i];
        }
        if &value * 2u32 > self.modulus {
            BigInt::from_biguint(Sign::Minus, &self.modulus - value)
        } else {
            BigInt::from_biguint(Sign::Plus, value)
        }
    }
}

fn modinv(a: u64, p: u64) -> u64 {
    let (mut t, mut new_t) = (0i64, 1i64);
    let (mut r, mut new_r) = (p as i64, a as i64);
    while new_r != 0 {
        let q = r / new_r;
        (t, new_t) = (new_t, t - q * new_t);
        (r, new_r) = (new_r, r - q * new_r);
    }
    assert_eq!(r, 1, "not invertible");
    t.rem_euclid(p as i64) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn primes_have_expected_shape() {
        let ps = ntt_primes();
        assert!(ps.len() >= 16, "only {} primes", ps.len());
        for pr in ps {
            assert_eq!((pr.p - 1) % (1 << MAX_LOG), 0);
        }
        assert!(ps.iter().any(|pr| pr.p == 998_244_353));
    }

    #[test]
    fn montgomery_roundtrip() {
        let pr = ntt_primes()[0];
        for v in [0u32, 1, 2, 12345, pr.p - 1] {
            assert_eq!(pr.from_mont(pr.to_mont(v)), v);
        }
        let a = pr.to_mont(123_456_789 % pr.p);
        let b = pr.to_mont(987_654_321 % pr.p);
        let expect = (123_456_789u64 % pr.p as u64) * (987_654_321u64 % pr.p as u64) % pr.p as u64;
        assert_eq!(pr.from_mont(pr.mul(a, b)) as u64, expect);
    }

    #[test]
    fn ntt_product_matches_schoolbook() {
        let pr = ntt_primes()[3];
        let a: Vec<u32> = (0..300).map(|i| pr.from_i64(i * i - 7 * i + 3)).collect();
        let b: Vec<u32> = (0..200).map(|i| pr.from_i64(5 - 3 * i)).collect();
        let fast = pr.multiply(&a, &b, 400);
        let mut slow = vec![0i128; 400];
        for i in 0..300i128 {
            for j in 0..200i128 {
                if (i + j) < 400 {
                    slow[(i + j) as usize] += (i * i - 7 * i + 3) * (5 - 3 * j);
                }
            }
        }
        for (f, s) in fast.iter().zip(&slow) {
            assert_eq!(pr.from_mont(*f) as i128, s.rem_euclid(pr.p as i128));
        }
    }

    #[test]
    fn crt_recovers_signed_values() {
        let ps = &ntt_primes()[..4];
        let crt = Crt::new(ps);
        for v in [
            BigInt::from(0),
            BigInt::from(-1),
            BigInt::from(7) << 100u32,
            -(BigInt::from(123_456_789_123u64) << 60u32),
        ] {
            let residues: Vec<u32> = ps.iter().map(|pr| v.mod_floor_u32(pr.p)).collect();
            assert_eq!(crt.reconstruct(&residues), v);
        }
    }
}
