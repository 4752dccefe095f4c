//! Spherical harmonics with the Condon-Shortley phase.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

/// Fully normalized associated Legendre values `Pbar_l^m(x)` for
/// `0 <= m <= l <= l_max`, so that `Y_lm = Pbar_l^m(cos theta) e^{i m phi}`.
#[derive(Clone, Debug)]
pub struct LegendreTable {
    l_max: usize,
    values: Vec<f64>,
}

impl LegendreTable {
    pub fn new(l_max: usize, x: f64) -> Self {
        let mut values = vec![0.0; (l_max + 1) * (l_max + 2) / 2];
        let idx = |l: usize, m: usize| l * (l + 1) / 2 + m;
        let sin = (1.0 - x * x).max(0.0).sqrt();
        let mut diag = 1.0 / (4.0 * PI).sqrt();
        for m in 0..=l_max {
            if m > 0 {
                diag *= -((2 * m + 1) as f64 / (2 * m) as f64).sqrt() * sin;
            }
            values[idx(m, m)] = diag;
            if m < l_max {
                values[idx(m + 1, m)] = ((2 * m + 3) as f64).sqrt() * x * diag;
            }
            for l in (m + 2)..=l_max {
                let (lf, mf) = (l as f64, m as f64);
                let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
                let lm1 = lf - 1.0;
                let b = ((lm1 * lm1 - mf * mf) / (4.0 * lm1 * lm1 - 1.0)).sqrt();
                values[idx(l, m)] = a * (x * values[idx(l - 1, m)] - b * values[idx(l - 2, m)]);
            }
        }
        Self { l_max, values }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    #[inline]
    pub fn get(&self, l: usize, m: usize) -> f64 {
        self.values[l * (l + 1) / 2 + m]
    }
}

/// `Y_kq(theta, phi)`, `|q| <= k`.
pub fn spherical_harmonic(k: usize, q: i64, theta: f64, phi: f64) -> C64 {
    let m = q.unsigned_abs() as usize;
    assert!(m <= k, "spherical_harmonic: |q| = {m} exceeds k = {k}");
    let table = LegendreTable::new(k, theta.cos());
    let y = table.get(k, m) * C64::from_polar(1.0, m as f64 * phi);
    if q >= 0 {
        y
    } else if m % 2 == 1 {
        -y.conj()
    } else {
        y.conj()
    }
}
