//! Local-truncation oracle: every quantity is a power series in `h`
//! truncated after `h^4`, built directly from the stage definitions.
#![allow(dead_code)]

use std::ops::{Add, Mul, Neg, Sub};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rbfrk::jet::Jet3;
use rbfrk::tableau::{Kernel, MethodSpec};

pub const DEG: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ser(pub [f64; DEG + 1]);

impl Ser {
    pub fn constant(c: f64) -> Self {
        let mut s = [0.0; DEG + 1];
        s[0] = c;
        Ser(s)
    }

    pub fn h() -> Self {
        let mut s = [0.0; DEG + 1];
        s[1] = 1.0;
        Ser(s)
    }

    pub fn scale(self, k: f64) -> Self {
        Ser(self.0.map(|x| k * x))
    }

    /// `int_0^h s(x) dx`.
    pub fn integrate(self) -> Self {
        let mut out = [0.0; DEG + 1];
        for k in 0..DEG {
            out[k + 1] = self.0[k] / (k + 1) as f64;
        }
        Ser(out)
    }

    pub fn powi(self, n: u32) -> Self {
        (0..n).fold(Ser::constant(1.0), |acc, _| acc * self)
    }

    /// `sqrt(1 + x)` for `x` without constant term.
    pub fn sqrt_one_plus(x: Ser) -> Ser {
        Ser::constant(1.0) + x.scale(0.5) - (x * x).scale(1.0 / 8.0) + (x * x * x).scale(1.0 / 16.0)
    }

    /// `1 / sqrt(1 + x)` for `x` without constant term.
    pub fn rsqrt_one_plus(x: Ser) -> Ser {
        Ser::constant(1.0) - x.scale(0.5) + (x * x).scale(3.0 / 8.0) - (x * x * x).scale(5.0 / 16.0)
    }
}

impl Add for Ser {
    type Output = Ser;
    fn add(self, o: Ser) -> Ser {
        let mut s = self.0;
        for (a, b) in s.iter_mut().zip(o.0) {
            *a += b;
        }
        Ser(s)
    }
}

impl Sub for Ser {
    type Output = Ser;
    fn sub(self, o: Ser) -> Ser {
        self + (-o)
    }
}

impl Neg for Ser {
    type Output = Ser;
    fn neg(self) -> Ser {
        self.scale(-1.0)
    }
}

impl Mul for Ser {
    type Output = Ser;
    fn mul(self, o: Ser) -> Ser {
        let mut s = [0.0; DEG + 1];
        for i in 0..=DEG {
            for j in 0..=DEG - i {
                s[i + j] += self.0[i] * o.0[j];
            }
        }
        Ser(s)
    }
}

/// Cubic Taylor polynomial of `f` about `(t0, u0)` from its jet.
pub struct TaylorRhs {
    /// `coef[i][j]` multiplies `dt^i du^j`.
    coef: [[f64; 4]; 4],
}

impl TaylorRhs {
    pub fn new(j: &Jet3) -> Self {
        let mut c = [[0.0; 4]; 4];
        c[0][0] = j.f;
        c[1][0] = j.f_t;
        c[0][1] = j.f_u;
        c[2][0] = j.f_tt / 2.0;
        c[1][1] = j.f_tu;
        c[0][2] = j.f_uu / 2.0;
        c[3][0] = j.f_ttt / 6.0;
        c[2][1] = j.f_ttu / 2.0;
        c[1][2] = j.f_tuu / 2.0;
        c[0][3] = j.f_uuu / 6.0;
        TaylorRhs { coef: c }
    }

    /// `f(t0 + dt, u0 + du)` with `dt`, `du` series without constant terms.
    pub fn eval(&self, dt: Ser, du: Ser) -> Ser {
        let mut out = Ser::constant(0.0);
        for i in 0..4 {
            for j in 0..4 - i {
                if self.coef[i][j] != 0.0 {
                    out = out + (dt.powi(i as u32) * du.powi(j as u32)).scale(self.coef[i][j]);
                }
            }
        }
        out
    }
}

/// `u(t0 + h) - u0` by Picard iteration.
pub fn exact_increment(rhs: &TaylorRhs) -> Ser {
    let mut du = Ser::constant(0.0);
    for _ in 0..=DEG {
        du = rhs.eval(Ser::h(), du).integrate();
    }
    du
}

/// `v_{n+1} - u_n` of `method` with stage-2 shape `e2` and stage-3 shape `e3`.
pub fn method_increment(method: &MethodSpec, rhs: &TaylorRhs, u0: f64, e2: f64, e3: f64) -> Ser {
    let tab = method.tableau.to_numeric();
    let h = Ser::h();
    let eps = [0.0, e2, e3];
    let mut k = Vec::with_capacity(tab.stages);
    for i in 0..tab.stages {
        let mut drift = Ser::constant(0.0);
        for (j, kj) in k.iter().enumerate() {
            drift = drift + (h * *kj).scale(tab.a[i][j]);
        }
        let x = (h * h).scale(eps[i] * tab.c[i] * tab.c[i]);
        let u = Ser::constant(u0);
        let y = match method.kernel() {
            Kernel::None => u + drift,
            Kernel::Mq => (u + drift) * Ser::sqrt_one_plus(x),
            Kernel::Imq => Ser::sqrt_one_plus(x) * drift + u * Ser::rsqrt_one_plus(x),
        };
        k.push(rhs.eval(h.scale(tab.c[i]), y - u));
    }
    let mut inc = Ser::constant(0.0);
    for (i, ki) in k.iter().enumerate() {
        inc = inc + (h * *ki).scale(tab.b[i]);
    }
    inc
}

/// Shape parameter `eps2^2` that cancels the leading truncation coefficient,
/// found by solving the affine dependence on `eps2^2` (stage 3 follows
/// `ratio`). Also returns the largest lower-order coefficient mismatch and
/// the slope of the cancelled coefficient.
pub fn oracle_shape(method: &MethodSpec, jet: &Jet3, u0: f64, ratio: f64) -> (f64, f64, f64) {
    let rhs = TaylorRhs::new(jet);
    let exact = exact_increment(&rhs);
    let p = method.stages(); // leading coefficient: h^(p+1)
    let lead = p + 1;
    let tau = |e2: f64| method_increment(method, &rhs, u0, e2, ratio * e2) - exact;
    let (t0, t1) = (tau(0.0), tau(1.0));
    let lower = (1..lead).map(|k| t0.0[k].abs().max(t1.0[k].abs())).fold(0.0, f64::max);
    let slope = t1.0[lead] - t0.0[lead];
    (-t0.0[lead] / slope, lower, slope)
}

/// Random jet with entries in `[-1, 1]` and a state with `|u0| in [0.5, 2]`.
pub fn random_jets(seed: u64, count: usize) -> Vec<(Jet3, f64)> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let e: [f64; 10] = std::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            let mag = rng.gen_range(0.5..2.0);
            let u0 = if rng.gen_bool(0.5) { mag } else { -mag };
            (Jet3::from_entries(e), u0)
        })
        .collect()
}
