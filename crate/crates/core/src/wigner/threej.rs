//! Wigner 3j symbols from the Racah single sum.
//!
//! Arguments are doubled so half-integers stay integral: `tj = 2j`, `tm = 2m`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::lnfact::{ln_abs_bigint, ln_factorial};

/// `(j1 j2 j3; m1 m2 m3)` with doubled arguments. Zero when a selection rule
/// fails.
pub fn wigner_3j(tj1: i64, tj2: i64, tj3: i64, tm1: i64, tm2: i64, tm3: i64) -> f64 {
    if !selection_rules(tj1, tj2, tj3, tm1, tm2, tm3) {
        return 0.0;
    }
    // everything below is an integer once halved
    let j1j2mj3 = (tj1 + tj2 - tj3) / 2;
    let j1mj2j3 = (tj1 - tj2 + tj3) / 2;
    let mj1j2j3 = (-tj1 + tj2 + tj3) / 2;
    let jsum1 = (tj1 + tj2 + tj3) / 2 + 1;
    let j1pm1 = (tj1 + tm1) / 2;
    let j1mm1 = (tj1 - tm1) / 2;
    let j2pm2 = (tj2 + tm2) / 2;
    let j2mm2 = (tj2 - tm2) / 2;
    let j3pm3 = (tj3 + tm3) / 2;
    let j3mm3 = (tj3 - tm3) / 2;
    // (j3 - j2 + m1), (j3 - j1 - m2)
    let a = (tj3 - tj2 + tm1) / 2;
    let b = (tj3 - tj1 - tm2) / 2;

    let t_min = 0.max(-a).max(-b);
    let t_max = j1j2mj3.min(j1mm1).min(j2pm2);
    if t_min > t_max {
        return 0.0;
    }

    let lf = |n: i64| ln_factorial(n as usize);
    let ln_pref = 0.5
        * (lf(j1j2mj3) + lf(j1mj2j3) + lf(mj1j2j3) - lf(jsum1)
            + lf(j1pm1)
            + lf(j1mm1)
            + lf(j2pm2)
            + lf(j2mm2)
            + lf(j3pm3)
            + lf(j3mm3));
    // (-1)^(j1 - j2 - m3)
    let phase_exp = (tj1 - tj2 - tm3) / 2;
    let phase = if phase_exp.rem_euclid(2) == 1 { -1.0 } else { 1.0 };

    let ln_denom =
        |t: i64| lf(t) + lf(a + t) + lf(b + t) + lf(j1j2mj3 - t) + lf(j1mm1 - t) + lf(j2pm2 - t);

    let (mut sum, mut comp, mut abs_sum) = (0.0f64, 0.0f64, 0.0f64);
    for t in t_min..=t_max {
        let sign = if t % 2 == 1 { -1.0 } else { 1.0 };
        let term = sign * (ln_pref - ln_denom(t)).exp();
        abs_sum += term.abs();
        let s = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - s) + term;
        } else {
            comp += (term - s) + sum;
        }
        sum = s;
    }
    if abs_sum < 50.0 {
        return phase * (sum + comp);
    }

    // exact rational sum of 1/denominators, prefactor applied in log space
    let fact = factorials((jsum1 + 1) as usize);
    let f = |n: i64| &fact[n as usize];
    let mut exact = BigRational::zero();
    for t in t_min..=t_max {
        let den = f(t) * f(a + t) * f(b + t) * f(j1j2mj3 - t) * f(j1mm1 - t) * f(j2pm2 - t);
        let num = if t % 2 == 1 { -BigInt::one() } else { BigInt::one() };
        exact += BigRational::new(num, den);
    }
    if exact.is_zero() {
        return 0.0;
    }
    let ln_mag = ln_pref + ln_abs_bigint(exact.numer()) - ln_abs_bigint(exact.denom());
    let sign = if exact.is_negative() { -1.0 } else { 1.0 };
    phase * sign * ln_mag.exp()
}

fn factorials(max: usize) -> Vec<BigInt> {
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = BigInt::one();
    out.push(acc.clone());
    for n in 1..=max {
        acc *= n;
        out.push(acc.clone());
    }
    out
}

fn selection_rules(tj1: i64, tj2: i64, tj3: i64, tm1: i64, tm2: i64, tm3: i64) -> bool {
    let pairs = [(tj1, tm1), (tj2, tm2), (tj3, tm3)];
    if pairs
        .iter()
        .any(|&(tj, tm)| tj < 0 || tm.abs() > tj || (tj + tm) % 2 != 0)
    {
        return false;
    }
    if tm1 + tm2 + tm3 != 0 {
        return false;
    }
    if (tj1 + tj2 + tj3) % 2 != 0 {
        return false;
    }
    tj3 >= (tj1 - tj2).abs() && tj3 <= tj1 + tj2
}
