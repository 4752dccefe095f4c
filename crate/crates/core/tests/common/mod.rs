//! Independent brute-force references: dense matrix exponentials, explicit
//! tensor-product operators and Clebsch-Gordan coefficients by lowering.
#![allow(dead_code)]

use std::collections::HashMap;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

pub type M = DMatrix<C64>;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// `exp(A)` by Taylor series with scaling and squaring.
pub fn expm(a: &M) -> M {
    // induced 1-norm; scale to below 1/2 and square as little as possible
    let norm = (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(1e-300, f64::max);
    let squarings = (norm.log2() + 1.0).ceil().max(0.0) as u32;
    let scaled = a / c(2f64.powi(squarings as i32));
    let dim = a.nrows();
    let mut term = M::identity(dim, dim);
    let mut sum = M::identity(dim, dim);
    for j in 1..60 {
        term = &term * &scaled / c(j as f64);
        sum += &term;
        if term.iter().map(|z| z.norm()).sum::<f64>() < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp(-i t H)`.
pub fn propagator(h: &M, t: f64) -> M {
    expm(&(h * C64::new(0.0, -t)))
}

pub fn kron(a: &M, b: &M) -> M {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    M::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// `(S^+, S^-, S^x, S^y, S^z)` on `N+1` Fock states, built from their matrix elements.
pub struct Ops {
    pub sp: M,
    pub sm: M,
    pub sx: M,
    pub sy: M,
    pub sz: M,
}

pub fn ops(n: usize) -> Ops {
    let dim = n + 1;
    let sp = M::from_fn(dim, dim, |r, col| {
        if r == col + 1 {
            c((((n - col) * (col + 1)) as f64).sqrt())
        } else {
            c(0.0)
        }
    });
    let sm = sp.adjoint();
    let sz = M::from_fn(dim, dim, |r, col| if r == col { c(2.0 * r as f64 - n as f64) } else { c(0.0) });
    let sx = &sp + &sm;
    let sy = (&sp - &sm) * C64::new(0.0, -1.0);
    Ops { sp, sm, sx, sy, sz }
}

/// `U(theta, phi) = exp(-i S^z phi/2) exp(-i S^y theta/2)` by exponentiation.
pub fn rotation(n: usize, theta: f64, phi: f64) -> M {
    let o = ops(n);
    propagator(&o.sz, phi / 2.0) * propagator(&o.sy, theta / 2.0)
}

/// Joint-space run of the whole protocol with explicit tensor products.
pub struct JointRun {
    /// Joint state after squeezing and frame rotation, index `kA (N+1) + kB`.
    pub joint: Vec<C64>,
    /// `(P_k, Bob's normalized state or None)` for every outcome.
    pub outcomes: Vec<(f64, Option<Vec<C64>>)>,
}

/// Squeezed resource at `tau` (or the spin-EPR state when `tau` is `None`)
/// followed by Alice's rotation, Fock measurement and Bob's correction.
pub fn joint_protocol(n: usize, tau: Option<f64>, theta: f64, phi: f64) -> JointRun {
    let dim = n + 1;
    let o = ops(n);
    let id = M::identity(dim, dim);
    let joint = match tau {
        Some(tau) => {
            let h = kron(&o.sp, &o.sp) + kron(&o.sm, &o.sm);
            let mut start = vec![c(0.0); dim * dim];
            start[n * dim + n] = c(1.0);
            let evolved = propagator(&h, tau) * nalgebra::DVector::from_vec(start);
            let frame = propagator(&(kron(&o.sz, &id) + kron(&id, &o.sz)), -std::f64::consts::PI / 8.0);
            (frame * evolved).iter().copied().collect::<Vec<_>>()
        }
        None => {
            let mut v = vec![c(0.0); dim * dim];
            for k in 0..dim {
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                v[k * dim + k] = c(sign / (dim as f64).sqrt());
            }
            v
        }
    };
    // exp(i S^y theta/2) exp(i S^z (pi - phi)/2) on A
    let alice = propagator(&o.sy, -theta / 2.0) * propagator(&o.sz, -(std::f64::consts::PI - phi) / 2.0);
    let rotated = kron(&alice, &id) * nalgebra::DVector::from_vec(joint.clone());
    let correction = propagator(&o.sz, std::f64::consts::PI / 2.0);
    let outcomes = (0..dim)
        .map(|k| {
            let mut bob = nalgebra::DVector::from_fn(dim, |kb, _| rotated[k * dim + kb]);
            if 2 * k < n {
                bob = &correction * bob;
            }
            let p: f64 = bob.iter().map(|z| z.norm_sqr()).sum();
            if p < 1e-14 {
                (0.0, None)
            } else {
                let s = p.sqrt();
                (p, Some(bob.iter().map(|z| z / s).collect()))
            }
        })
        .collect();
    JointRun { joint, outcomes }
}

pub fn expectation(op: &M, v: &[C64]) -> C64 {
    let x = nalgebra::DVector::from_vec(v.to_vec());
    (x.adjoint() * op * &x)[(0, 0)]
}

/// `|<a|b>|` for normalized vectors.
pub fn overlap(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum::<C64>().norm()
}

/// Clebsch-Gordan table `<j1 m1 j2 m2 | J M>` with doubled arguments, built
/// by lowering from stretched states and Gram-Schmidt, Condon-Shortley phase.
pub struct ClebschGordan {
    tj1: i64,
    tj2: i64,
    states: HashMap<(i64, i64), Vec<f64>>,
}

impl ClebschGordan {
    pub fn new(tj1: i64, tj2: i64) -> Self {
        let d2 = (tj2 + 1) as usize;
        let dim = (tj1 + 1) as usize * d2;
        let idx = |tm1: i64, tm2: i64| ((tj1 - tm1) / 2) as usize * d2 + ((tj2 - tm2) / 2) as usize;
        let lower = |v: &[f64]| {
            let mut out = vec![0.0; dim];
            for tm1 in (-tj1..=tj1).step_by(2) {
                for tm2 in (-tj2..=tj2).step_by(2) {
                    let a = v[idx(tm1, tm2)];
                    if a == 0.0 {
                        continue;
                    }
                    if tm1 > -tj1 {
                        let f = (((tj1 + tm1) * (tj1 - tm1 + 2)) as f64 / 4.0).sqrt();
                        out[idx(tm1 - 2, tm2)] += f * a;
                    }
                    if tm2 > -tj2 {
                        let f = (((tj2 + tm2) * (tj2 - tm2 + 2)) as f64 / 4.0).sqrt();
                        out[idx(tm1, tm2 - 2)] += f * a;
                    }
                }
            }
            out
        };
        let mut states: HashMap<(i64, i64), Vec<f64>> = HashMap::new();
        let mut tjj = tj1 + tj2;
        while tjj >= (tj1 - tj2).abs() {
            // top state of this J: orthogonal to every higher-J state with M = J
            let mut top = vec![0.0; dim];
            let mut basis = Vec::new();
            for tm1 in (-tj1..=tj1).step_by(2) {
                let tm2 = tjj - tm1;
                if tm2.abs() <= tj2 {
                    basis.push(idx(tm1, tm2));
                }
            }
            for (n, &b) in basis.iter().enumerate() {
                // incommensurate weights so the seed is never parallel to a higher-J state
                top[b] = (2.0 + n as f64).sqrt() + 0.1 * (n * n) as f64;
            }
            // two passes: the first can cancel most of the seed
            for _ in 0..2 {
                let mut higher = tjj + 2;
                while higher <= tj1 + tj2 {
                    let v = &states[&(higher, tjj)];
                    let dot: f64 = v.iter().zip(&top).map(|(a, b)| a * b).sum();
                    for (t, a) in top.iter_mut().zip(v) {
                        *t -= dot * a;
                    }
                    higher += 2;
                }
            }
            let norm = top.iter().map(|x| x * x).sum::<f64>().sqrt();
            let lead = top[idx(tj1, tjj - tj1)];
            let sign = if lead < 0.0 { -1.0 } else { 1.0 };
            for t in top.iter_mut() {
                *t *= sign / norm;
            }
            let mut tm = tjj;
            let mut state = top;
            loop {
                states.insert((tjj, tm), state.clone());
                if tm == -tjj {
                    break;
                }
                let next = lower(&state);
                let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
                state = next.into_iter().map(|x| x / norm).collect();
                tm -= 2;
            }
            tjj -= 2;
        }
        Self { tj1, tj2, states }
    }

    pub fn get(&self, tm1: i64, tm2: i64, tjj: i64, tmm: i64) -> f64 {
        if tm1 + tm2 != tmm || tm1.abs() > self.tj1 || tm2.abs() > self.tj2 {
            return 0.0;
        }
        match self.states.get(&(tjj, tmm)) {
            Some(v) => {
                let d2 = (self.tj2 + 1) as usize;
                v[((self.tj1 - tm1) / 2) as usize * d2 + ((self.tj2 - tm2) / 2) as usize]
            }
            None => 0.0,
        }
    }

    /// `(j1 j2 j3; m1 m2 m3) = (-1)^(j1 - j2 - m3) <j1 m1 j2 m2 | j3 -m3> / sqrt(2 j3 + 1)`.
    pub fn three_j(&self, tj3: i64, tm1: i64, tm2: i64, tm3: i64) -> f64 {
        let e = (self.tj1 - self.tj2 - tm3) / 2;
        let phase = if e.rem_euclid(2) == 1 { -1.0 } else { 1.0 };
        phase * self.get(tm1, tm2, tj3, -tm3) / ((tj3 + 1) as f64).sqrt()
    }
}
