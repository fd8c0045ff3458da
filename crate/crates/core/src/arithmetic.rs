//! Elementary arithmetic functions, divisor-moment statistics and the exact
//! Hecke-relation checks on eigenvalue tables.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::par;
use crate::qmodforms::EigenTable;

/// Primes are sieved up to this bound once per process.
pub const SIEVE_LIMIT: u64 = 10_000_000;

static PRIMES: OnceLock<Vec<u32>> = OnceLock::new();

/// All primes below [`SIEVE_LIMIT`], ascending.
pub fn primes() -> &'static [u32] {
    PRIMES.get_or_init(|| primes_up_to(SIEVE_LIMIT as usize))
}

/// Sieve of Eratosthenes.
pub fn primes_up_to(limit: usize) -> Vec<u32> {
    if limit < 2 {
        return Vec::new();
    }
    let mut composite = vec![false; limit + 1];
    let mut out = Vec::with_capacity(limit / 10);
    for i in 2..=limit {
        if !composite[i] {
            out.push(i as u32);
            let mut j = i * i;
            while j <= limit {
                composite[j] = true;
                j += i;
            }
        }
    }
    out
}

/// Prime factorization by trial division, as `(p, e)` pairs with ascending `p`.
///
/// Exact for `n < SIEVE_LIMIT²`.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    assert!(n >= 1, "factorize(0)");
    assert!(
        (n as u128) < (SIEVE_LIMIT as u128) * (SIEVE_LIMIT as u128),
        "factorize: {n} beyond trial-division range"
    );
    let mut out = Vec::new();
    for &p in primes() {
        let p = p as u64;
        if p * p > n {
            break;
        }
        if n % p == 0 {
            let mut e = 0;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n) == [(n, 1)]
}

/// Number of divisors.
pub fn tau(n: u64) -> u64 {
    factorize(n).iter().map(|&(_, e)| e as u64 + 1).product()
}

/// Möbius function.
pub fn mobius(n: u64) -> i8 {
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len() % 2 == 0 {
        1
    } else {
        -1
    }
}

/// All divisors of `n` in ascending order.
pub fn divisors(n: u64) -> Vec<u64> {
    let mut ds = vec![1u64];
    for (p, e) in factorize(n) {
        let len = ds.len();
        let mut pk = 1;
        for _ in 0..e {
            pk *= p;
            for i in 0..len {
                ds.push(ds[i] * pk);
            }
        }
    }
    ds.sort_unstable();
    ds
}

/// `σ_k(n) = Σ_{d|n} d^k` for all `n < len`, computed by a divisor sieve.
pub fn sigma_table(k: u32, len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); len];
    for d in 1..len {
        let dk = BigInt::from(d).pow(k);
        let mut m = d;
        while m < len {
            out[m] += &dk;
            m += d;
        }
    }
    out
}

/// Mean of `τ(n)^l` over the short interval `(X, X+Y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShortIntervalMomentReport {
    pub x: u64,
    pub y: u64,
    pub l: u32,
    pub mean: f64,
    /// `(log X)^(2^l - 1)`.
    pub bound: f64,
    pub ratio: f64,
}

pub fn shiu_moment(x: u64, y: u64, l: u32) -> Result<ShortIntervalMomentReport> {
    if y < 2 || y > x {
        return Err(LabError::invalid(format!(
            "need 2 <= Y <= X, got X={x}, Y={y}"
        )));
    }
    if l == 0 || l > 6 {
        return Err(LabError::invalid("moment order l must lie in 1..=6"));
    }
    let partial: Vec<u128> = par::map_chunks(y as usize, 4096, |r| {
        r.map(|i| (tau(x + 1 + i as u64) as u128).pow(l)).sum()
    });
    let total: u128 = partial.into_iter().sum();
    let mean = total as f64 / y as f64;
    let bound = (x as f64).ln().powi((1i32 << l) - 1);
    Ok(ShortIntervalMomentReport {
        x,
        y,
        l,
        mean,
        bound,
        ratio: mean / bound,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeligneReport {
    pub checked: u64,
    pub max_ratio: f64,
    pub argmax: u64,
    pub violation: bool,
}

/// Largest `|λ(n)| / τ(n)` over the table.
pub fn deligne_check(table: &EigenTable) -> DeligneReport {
    let nmax = table.nmax();
    let chunks: Vec<(f64, u64)> = par::map_chunks(nmax as usize, 8192, |r| {
        let mut best = (f64::NEG_INFINITY, 0);
        for i in r {
            let n = i as u64 + 1;
            let ratio = table.lambda(n).abs() / tau(n) as f64;
            if ratio > best.0 {
                best = (ratio, n);
            }
        }
        best
    });
    let (max_ratio, argmax) =
        chunks
            .into_iter()
            .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    DeligneReport {
        checked: nmax,
        max_ratio,
        argmax,
        violation: max_ratio > 1.0,
    }
}

/// `λ(m)² = Σ_{d|m} λ(d²)`, checked exactly in integer form:
/// `a(m)² = Σ_{d|m} (m/d)^{k-1} a(d²)`.
pub fn convolution_check(table: &EigenTable, m: u64) -> Result<bool> {
    let need = m
        .checked_mul(m)
        .ok_or_else(|| LabError::invalid("m too large"))?;
    if need > table.nmax() {
        return Err(LabError::range(
            "convolution check needs m^2 <= nmax",
            need,
            table.nmax(),
        ));
    }
    let k1 = table.weight() - 1;
    let lhs = table.raw(m) * table.raw(m);
    let mut rhs = BigInt::zero();
    for d in divisors(m) {
        rhs += BigInt::from(m / d).pow(k1) * table.raw(d * d);
    }
    Ok(lhs == rhs)
}

/// `λ(m)λ(n) = Σ_{d|(m,n)} λ(mn/d²)`, checked exactly in integer form:
/// `a(m)a(n) = Σ_{d|(m,n)} d^{k-1} a(mn/d²)`.
pub fn hecke_relation_check(table: &EigenTable, m: u64, n: u64) -> Result<bool> {
    let mn = m
        .checked_mul(n)
        .ok_or_else(|| LabError::invalid("mn overflows"))?;
    if mn > table.nmax() || m == 0 || n == 0 {
        return Err(LabError::range(
            "Hecke relation needs 1 <= mn <= nmax",
            mn,
            table.nmax(),
        ));
    }
    let k1 = table.weight() - 1;
    let lhs = table.raw(m) * table.raw(n);
    let g = m.gcd(&n);
    let rhs = if g == 1 {
        table.raw(mn).clone()
    } else {
        let mut acc = BigInt::zero();
        for d in divisors(g) {
            acc += BigInt::from(d).pow(k1) * table.raw(mn / (d * d));
        }
        acc
    };
    Ok(lhs == rhs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentitySuiteReport {
    pub weight: u32,
    pub nmax: u64,
    pub hecke_pairs: u64,
    pub hecke_failures: Vec<(u64, u64)>,
    pub convolution_checks: u64,
    pub convolution_failures: Vec<u64>,
    pub prime_power_checks: u64,
    pub prime_power_failures: Vec<(u64, u32)>,
}

impl IdentitySuiteReport {
    pub fn passed(&self) -> bool {
        self.hecke_failures.is_empty()
            && self.convolution_failures.is_empty()
            && self.prime_power_failures.is_empty()
    }
}

/// Exhaustive exact check of the Hecke relation for every pair `mn <= nmax`,
/// the convolution identity for every `m² <= nmax`, and the prime-power
/// recursion `a(p^{e+1}) = a(p)a(p^e) - p^{k-1} a(p^{e-1})`.
pub fn identity_suite(table: &EigenTable) -> IdentitySuiteReport {
    let nmax = table.nmax();
    let per_m: Vec<(u64, Vec<(u64, u64)>)> = par::map_indexed(nmax as usize, |i| {
        let m = i as u64 + 1;
        let mut fails = Vec::new();
        let mut count = 0;
        // m <= n keeps each unordered pair once; the relation is symmetric.
        for n in m..=nmax / m {
            count += 1;
            if !hecke_relation_check(table, m, n).unwrap_or(false) {
                fails.push((m, n));
            }
        }
        (count, fails)
    });
    let hecke_pairs = per_m.iter().map(|(c, _)| c).sum();
    let hecke_failures = per_m.into_iter().flat_map(|(_, f)| f).collect();

    let mut convolution_checks = 0;
    let mut convolution_failures = Vec::new();
    let mut m = 1;
    while m * m <= nmax {
        convolution_checks += 1;
        if !convolution_check(table, m).unwrap_or(false) {
            convolution_failures.push(m);
        }
        m += 1;
    }

    let k1 = table.weight() - 1;
    let mut prime_power_checks = 0;
    let mut prime_power_failures = Vec::new();
    for &p in primes() {
        let p = p as u64;
        if p * p > nmax {
            break;
        }
        let pk1 = BigInt::from(p).pow(k1);
        let (mut lo, mut mid, mut e) = (1u64, p, 1u32);
        while mid.saturating_mul(p) <= nmax {
            let hi = mid * p;
            prime_power_checks += 1;
            let expect = table.raw(p) * table.raw(mid) - &pk1 * table.raw(lo);
            if &expect != table.raw(hi) {
                prime_power_failures.push((p, e + 1));
            }
            lo = mid;
            mid = hi;
            e += 1;
        }
    }

    IdentitySuiteReport {
        weight: table.weight(),
        nmax,
        hecke_pairs,
        hecke_failures,
        convolution_checks,
        convolution_failures,
        prime_power_checks,
        prime_power_failures,
    }
}
