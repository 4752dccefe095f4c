//! Log-factorials and exact binomials shared by the rotation and 3j code.

use num_bigint::BigInt;
use std::sync::OnceLock;

const TABLE_LEN: usize = 171;

fn table() -> &'static [f64; TABLE_LEN] {
    static TABLE: OnceLock<[f64; TABLE_LEN]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = [0.0; TABLE_LEN];
        let mut fact = 1.0_f64;
        for (n, slot) in out.iter_mut().enumerate().skip(1) {
            fact *= n as f64;
            *slot = fact.ln();
        }
        out
    })
}

/// `ln(n!)`. Exact-product logs up to 170, Stirling series above.
pub fn ln_factorial(n: usize) -> f64 {
    if n < TABLE_LEN {
        return table()[n];
    }
    let x = (n + 1) as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // ln Γ(x) asymptotic expansion
    let series = inv
        * (1.0 / 12.0
            - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 * (1.0 / 1680.0 - inv2 / 1188.0))));
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + series
}

/// Exact binomial coefficient; zero outside `0 <= k <= n`.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if k < 0 || n < 0 || k > n {
        return BigInt::from(0);
    }
    let k = k.min(n - k);
    let mut acc = BigInt::from(1);
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Natural log of `|x|` for a nonzero big integer, without overflowing f64.
pub fn ln_abs_bigint(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        let v: f64 = num_traits::ToPrimitive::to_f64(x).unwrap_or(f64::INFINITY);
        return v.abs().ln();
    }
    let shift = bits - 64;
    let top: BigInt = x >> shift;
    let v: f64 = num_traits::ToPrimitive::to_f64(&top).unwrap_or(f64::INFINITY);
    v.abs().ln() + shift as f64 * std::f64::consts::LN_2
}
