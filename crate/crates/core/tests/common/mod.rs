#![allow(dead_code)]

use num_bigint::BigInt;

/// Naive divisor power sum.
pub fn sigma(n: u64, k: u32) -> BigInt {
    let mut s = BigInt::from(0);
    for d in 1..=n {
        if n % d == 0 {
            s += BigInt::from(d).pow(k);
        }
    }
    s
}

/// Coefficients of `q ∏(1 − qⁿ)²⁴` for `q¹..q^len`, from the logarithmic
/// derivative recurrence `n c(n) = −24 Σ_{j<=n} σ(j) c(n − j)`.
pub fn delta_product(len: usize) -> Vec<BigInt> {
    let sig: Vec<i64> = (0..len as u64)
        .map(|j| {
            if j == 0 {
                0
            } else {
                (1..=j).filter(|d| j % d == 0).sum::<u64>() as i64
            }
        })
        .collect();
    let mut c = vec![BigInt::from(1)];
    for n in 1..len {
        let mut acc = BigInt::from(0);
        for j in 1..=n {
            acc += &c[n - j] * sig[j];
        }
        acc *= -24;
        assert!((&acc % n as i64) == BigInt::from(0));
        c.push(acc / n as i64);
    }
    c
}

pub fn eisenstein_naive(k: u32, len: usize) -> Vec<BigInt> {
    let c: i64 = match k {
        4 => 240,
        6 => -504,
        _ => panic!("only E4 and E6"),
    };
    (0..len as u64)
        .map(|n| {
            if n == 0 {
                BigInt::from(1)
            } else {
                sigma(n, k - 1) * c
            }
        })
        .collect()
}

pub fn mul_naive(a: &[BigInt], b: &[BigInt], len: usize) -> Vec<BigInt> {
    let mut out = vec![BigInt::from(0); len];
    for (i, x) in a.iter().enumerate().take(len) {
        for (j, y) in b.iter().enumerate().take(len - i) {
            out[i + j] += x * y;
        }
    }
    out
}

/// The normalised eigenform of a one-dimensional cusp space as a product
/// `Δ E4^a E6^b`, returned as `a(1..=len)`.
pub fn eigenform_product(k: u32, len: usize) -> Vec<BigInt> {
    let (a, b) = match k {
        12 => (0, 0),
        16 => (1, 0),
        18 => (0, 1),
        20 => (2, 0),
        22 => (1, 1),
        26 => (2, 1),
        _ => panic!("weight {k} not one-dimensional"),
    };
    let mut f = delta_product(len);
    let e4 = eisenstein_naive(4, len);
    let e6 = eisenstein_naive(6, len);
    for _ in 0..a {
        f = mul_naive(&f, &e4, len);
    }
    for _ in 0..b {
        f = mul_naive(&f, &e6, len);
    }
    f
}
