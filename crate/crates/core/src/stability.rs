//! Amplification factors `R(z)` on `u' = lambda u` and stability-region rasters.
//!
//! Two evaluation modes:
//!
//! * `Polynomial` evaluates the closed-form polynomials as printed,
//!   including their radicals (principal branch, cut along the negative real
//!   radicand axis).
//! * `Exact` runs one step of the actual method with complex
//!   arithmetic at `u_n = 1`, `h = 1`, `lambda = z`, with the shape parameters
//!   taken from the linear jet. A stage that divides by a zero radical makes
//!   the cell unstable.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::classical::run_stages;
use crate::error::{Error, Result};
use crate::jet::Jet3;
use crate::rbf::{radicands, shape_for};
use crate::tableau::{lookup, Kernel, MethodSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum AmplificationMode {
    Polynomial,
    Exact,
}

impl AmplificationMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exact" => Ok(AmplificationMode::Exact),
            "polynomial" | "printed" => Ok(AmplificationMode::Polynomial),
            other => Err(Error::InvalidParameter(format!(
                "unknown amplification mode `{other}` (expected exact or polynomial)"
            ))),
        }
    }
}

/// Published amplification formulas.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Formula {
    Rk2,
    Rk3,
    Rk4,
    MqRk2,
    ImqRk2,
    MqRk3I,
    MqRk3II,
    MqRk3III,
    ImqRk3I,
    ImqRk3II,
    ImqRk3III,
    ImqRk3IV,
}

impl Formula {
    pub fn id(&self) -> &'static str {
        match self {
            Formula::Rk2 => "rk2",
            Formula::Rk3 => "rk3",
            Formula::Rk4 => "rk4",
            Formula::MqRk2 => "mq-rk2",
            Formula::ImqRk2 => "imq-rk2",
            Formula::MqRk3I => "mq-rk3-i",
            Formula::MqRk3II => "mq-rk3-ii",
            Formula::MqRk3III => "mq-rk3-iii",
            Formula::ImqRk3I => "imq-rk3-i",
            Formula::ImqRk3II => "imq-rk3-ii",
            Formula::ImqRk3III => "imq-rk3-iii",
            Formula::ImqRk3IV => "imq-rk3-iv",
        }
    }

    /// Printed forms that are not consistent with their method (a constant
    /// term mixed with `z^2` terms, an unclosed parenthesis, or mismatched
    /// radicands). They are kept verbatim for comparison only.
    pub fn is_flagged(&self) -> bool {
        matches!(
            self,
            Formula::MqRk3I
                | Formula::MqRk3II
                | Formula::MqRk3III
                | Formula::ImqRk3I
                | Formula::ImqRk3II
                | Formula::ImqRk3III
                | Formula::ImqRk3IV
        )
    }

    fn for_method(name: &str) -> Result<Formula> {
        Ok(match name {
            "rk2" => Formula::Rk2,
            "rk4" => Formula::Rk4,
            "mq-rk2" => Formula::MqRk2,
            "imq-rk2" => Formula::ImqRk2,
            "mq-rk3-i" => Formula::MqRk3I,
            "mq-rk3-ii" => Formula::MqRk3II,
            "mq-rk3-iii" => Formula::MqRk3III,
            "imq-rk3-i" => Formula::ImqRk3I,
            "imq-rk3-ii" => Formula::ImqRk3II,
            "imq-rk3-iii" => Formula::ImqRk3III,
            "imq-rk3-iv" => Formula::ImqRk3IV,
            n if lookup(n).map(|m| !m.is_rbf() && m.stages() == 3).unwrap_or(false) => Formula::Rk3,
            n => return Err(Error::UnknownMethod(n.to_string())),
        })
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        let one = Complex64::new(1.0, 0.0);
        let sq = |w: Complex64| w.sqrt();
        let z2 = z * z;
        match self {
            Formula::Rk2 => one + z + z2 / 2.0,
            Formula::Rk3 => one + z + z2 / 2.0 + z2 * z / 6.0,
            Formula::Rk4 => one + z + z2 / 2.0 + z2 * z / 6.0 + z2 * z2 / 24.0,
            Formula::MqRk2 => one + z + z2 / 2.0 + z2 * z / 6.0 + z2 * z2 / 9.0,
            Formula::ImqRk2 => {
                let s = sq(one - 4.0 * z2 / 9.0);
                one + z / 4.0 + 0.5 * z2 * s + 0.75 * z / s
            }
            Formula::MqRk3I => {
                // the printed `(1 + z/3 sqrt(..)` is closed before the bracket
                let s = sq(one + z2 / 3.0);
                one + z / 10.0
                    + z / 2.0 * s
                    + 0.4 * (2.0 * z - 5.0 / 12.0 * z2 + 5.0 * z2 / 4.0 * (one + z / 3.0 * s))
            }
            Formula::MqRk3II => {
                let s = sq(one + z2 / 3.0);
                one + 2.0 * z / 9.0
                    + z / 2.0 * (one + z / 3.0) * s
                    + 0.4 * (2.0 * z + 0.75 * (z2 + z2 / 3.0) * s)
            }
            Formula::MqRk3III => {
                let s = sq(one + z2 / 3.0);
                one + z / 6.0 + (z + z2) * s / 6.0 + 4.0 * z / 3.0 + z2 / 6.0 + (z + z2) * s / 6.0
            }
            Formula::ImqRk3I => {
                let a = sq(one - z2 / 4.0);
                let b = sq(one + z2);
                one + z / 6.0
                    + 2.0 / 3.0 * (z2 * a + z / a)
                    + (z * b * (2.0 * z2 * a - z + 2.0 * z / a) + z / b) / 6.0
            }
            Formula::ImqRk3II => {
                let a = sq(one - z2 / 9.0);
                let b = sq(one + 5.0 / 36.0 * z2);
                one + z / 10.0
                    + 0.5 * (z2 * a + z / a)
                    + 0.4 * (z * b * (-5.0 / 12.0 * z + 5.0 * z / 4.0 * (z * a + one / a)) + z / b)
            }
            Formula::ImqRk3III => {
                let a = sq(one - z2);
                let b = sq(one + z2 / 4.0);
                one + z / 6.0
                    + (z2 * a + one / a) / 6.0
                    + 2.0 / 3.0 * (z * b * (z / 4.0 + z * a + z / a) + z / b)
            }
            Formula::ImqRk3IV => {
                let a = sq(one - z2 / 5.0);
                let b = sq(one - 4.0 * z2 / 15.0);
                let c = sq(one - 4.0 * z2 / 5.0);
                let d = sq(one + 4.0 * z2 / 15.0);
                one + 2.0 * z / 9.0
                    + (z2 * a + z / a) / 3.0
                    + 4.0 / 9.0 * (z * b * (0.75 * z2 * c + z / a) + z / d)
            }
        }
    }
}

/// A method together with the way its amplification factor is evaluated.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmplificationSpec {
    pub method: String,
    pub mode: AmplificationMode,
    pub formula: Formula,
}

/// Methods with an amplification factor: the catalog plus classical `rk4`.
pub fn stability_methods() -> Vec<String> {
    let mut v: Vec<String> = crate::tableau::catalog().iter().map(|m| m.name.clone()).collect();
    v.push("rk4".into());
    v
}

impl AmplificationSpec {
    pub fn new(method: &str, mode: AmplificationMode) -> Result<Self> {
        let name = method.trim().to_ascii_lowercase();
        let formula = Formula::for_method(&name)?;
        Ok(AmplificationSpec { method: name, mode, formula })
    }

    pub fn exact(method: &str) -> Result<Self> {
        Self::new(method, AmplificationMode::Exact)
    }

    pub fn polynomial(method: &str) -> Result<Self> {
        Self::new(method, AmplificationMode::Polynomial)
    }
}

fn rk4_exact(z: Complex64) -> Complex64 {
    let one = Complex64::new(1.0, 0.0);
    let k1 = z;
    let k2 = z * (one + k1 / 2.0);
    let k3 = z * (one + k2 / 2.0);
    let k4 = z * (one + k3);
    one + (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0
}

fn exact_step(method: &MethodSpec, z: Complex64) -> Result<Complex64> {
    let one = Complex64::new(1.0, 0.0);
    let tab = method.tableau.to_numeric();
    let rho = match method.kernel() {
        Kernel::None => [one; 3],
        _ => {
            let jet = Jet3::linear(z, one);
            // a degenerate shape formula falls back to the classical step
            let (e2, e3) = shape_for(method, &jet, one).unwrap_or((Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)));
            radicands(&tab, e2, e3, 1.0)
        }
    };
    Ok(run_stages(&tab, method.kernel(), rho, |_, u| z * u, 0.0, one, 1.0)?.value)
}

/// `R(z)`. Non-finite values (a stage dividing by a zero radical) are errors.
pub fn amplification(spec: &AmplificationSpec, z: Complex64) -> Result<Complex64> {
    if !z.is_finite() {
        return Err(Error::InvalidParameter(format!("z must be finite, got {z}")));
    }
    let r = match (spec.mode, spec.formula) {
        (AmplificationMode::Polynomial, f) => f.eval(z),
        (AmplificationMode::Exact, Formula::Rk4) => rk4_exact(z),
        (AmplificationMode::Exact, _) => exact_step(lookup(&spec.method)?, z)?,
    };
    if r.is_finite() {
        Ok(r)
    } else {
        Err(Error::NonFiniteStage { stage: 0 })
    }
}

/// `|R(z)|`, with `+inf` where the amplification is undefined.
pub fn abs_amplification(spec: &AmplificationSpec, z: Complex64) -> f64 {
    amplification(spec, z).map(|r| r.norm()).unwrap_or(f64::INFINITY)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|x| x.is_finite())
            && re_min < re_max
            && im_min < im_max;
        if !ok {
            return Err(Error::InvalidRaster(format!(
                "window must satisfy re_min < re_max and im_min < im_max, got [{re_min}, {re_max}] x [{im_min}, {im_max}]"
            )));
        }
        Ok(Window { re_min, re_max, im_min, im_max })
    }

    /// Parse `re_min,re_max,im_min,im_max`.
    pub fn parse(s: &str) -> Result<Self> {
        let v: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidRaster(format!("bad window `{s}`: {e}")))?;
        match v[..] {
            [a, b, c, d] => Window::new(a, b, c, d),
            _ => Err(Error::InvalidRaster(format!("window needs four numbers, got `{s}`"))),
        }
    }
}

/// Parse `NxM` (re cells by im cells).
pub fn parse_resolution(s: &str) -> Result<(usize, usize)> {
    let bad = || Error::InvalidRaster(format!("resolution must look like 400x400, got `{s}`"));
    let (a, b) = s.trim().split_once(['x', 'X']).ok_or_else(bad)?;
    let n_re = a.trim().parse().map_err(|_| bad())?;
    let n_im = b.trim().parse().map_err(|_| bad())?;
    Ok((n_re, n_im))
}

/// `|R|` sampled at cell centres. Row `j` has imaginary part `im(j)`,
/// increasing with `j`; `values[j * n_re + i]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilityRaster {
    pub method: String,
    pub mode: AmplificationMode,
    pub window: Window,
    pub n_re: usize,
    pub n_im: usize,
    pub values: Vec<f64>,
    pub inside: Vec<bool>,
}

/// Centre of cell `k` of `n` on `[a, b]`, written around the midpoint so that
/// windows symmetric about zero give exactly mirrored centres.
fn centre(a: f64, b: f64, n: usize, k: usize) -> f64 {
    let mid = 0.5 * (a + b);
    let d = (b - a) / n as f64;
    mid + (k as f64 - 0.5 * (n as f64 - 1.0)) * d
}

impl StabilityRaster {
    pub fn re(&self, i: usize) -> f64 {
        centre(self.window.re_min, self.window.re_max, self.n_re, i)
    }

    pub fn im(&self, j: usize) -> f64 {
        centre(self.window.im_min, self.window.im_max, self.n_im, j)
    }

    pub fn cell_width(&self) -> f64 {
        (self.window.re_max - self.window.re_min) / self.n_re as f64
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.n_re + i]
    }

    pub fn is_inside(&self, i: usize, j: usize) -> bool {
        self.inside[j * self.n_re + i]
    }

    pub fn inside_fraction(&self) -> f64 {
        self.inside.iter().filter(|&&b| b).count() as f64 / self.inside.len() as f64
    }

    /// Inside cells with at least one outside 4-neighbour.
    pub fn boundary_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.n_im {
            for i in 0..self.n_re {
                if !self.is_inside(i, j) {
                    continue;
                }
                let nb = [
                    (i > 0).then(|| (i - 1, j)),
                    (i + 1 < self.n_re).then(|| (i + 1, j)),
                    (j > 0).then(|| (i, j - 1)),
                    (j + 1 < self.n_im).then(|| (i, j + 1)),
                ];
                if nb.iter().flatten().any(|&(a, b)| !self.is_inside(a, b)) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Smallest and largest real part of inside cells on the row nearest the
    /// real axis.
    pub fn real_axis_extent(&self) -> Option<(f64, f64)> {
        let j = (0..self.n_im).min_by(|&a, &b| self.im(a).abs().total_cmp(&self.im(b).abs()))?;
        let xs: Vec<f64> = (0..self.n_re).filter(|&i| self.is_inside(i, j)).map(|i| self.re(i)).collect();
        Some((*xs.first()?, *xs.last()?))
    }

    /// Binary greyscale image, top row = largest imaginary part, `|R|`
    /// clipped to `[0, 2]` and scaled to `0..=255`.
    pub fn write_pgm(&self, w: &mut impl Write) -> io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.n_re, self.n_im)?;
        let mut buf = Vec::with_capacity(self.values.len());
        for j in (0..self.n_im).rev() {
            for i in 0..self.n_re {
                let v = self.value(i, j);
                let g = if v.is_finite() { (v.clamp(0.0, 2.0) / 2.0 * 255.0).round() as u8 } else { 255 };
                buf.push(g);
            }
        }
        w.write_all(&buf)
    }

    pub fn write_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "re,im,abs_r,inside")?;
        for j in 0..self.n_im {
            for i in 0..self.n_re {
                writeln!(w, "{},{},{},{}", self.re(i), self.im(j), self.value(i, j), self.is_inside(i, j) as u8)?;
            }
        }
        Ok(())
    }

    pub fn write_boundary_csv(&self, w: &mut impl Write) -> io::Result<()> {
        writeln!(w, "re,im")?;
        for (i, j) in self.boundary_cells() {
            writeln!(w, "{},{}", self.re(i), self.im(j))?;
        }
        Ok(())
    }
}

pub fn raster(spec: &AmplificationSpec, window: Window, resolution: (usize, usize)) -> Result<StabilityRaster> {
    let (n_re, n_im) = resolution;
    if n_re < 2 || n_im < 2 {
        return Err(Error::InvalidRaster(format!("resolution must be at least 2x2, got {n_re}x{n_im}")));
    }
    let mut r = StabilityRaster {
        method: spec.method.clone(),
        mode: spec.mode,
        window,
        n_re,
        n_im,
        values: Vec::new(),
        inside: Vec::new(),
    };
    let rows: Vec<Vec<f64>> = (0..n_im)
        .into_par_iter()
        .map(|j| {
            let y = r.im(j);
            (0..n_re).map(|i| abs_amplification(spec, Complex64::new(r.re(i), y))).collect()
        })
        .collect();
    r.values = rows.concat();
    r.inside = r.values.iter().map(|&v| v <= 1.0).collect();
    Ok(r)
}

fn bisect(spec: &AmplificationSpec, mut a_in: f64, mut b_out: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a_in + b_out);
        if m == a_in || m == b_out {
            break;
        }
        if abs_amplification(spec, Complex64::new(m, 0.0)) <= 1.0 {
            a_in = m;
        } else {
            b_out = m;
        }
    }
    a_in
}

/// Interval `[x_l, x_r]` of the real axis around the origin where
/// `|R(x)| <= 1`, by scanning outwards in steps of `1e-3` up to `|x| = 20`
/// and bisecting the first crossing.
pub fn real_stability_interval(spec: &AmplificationSpec) -> (f64, f64) {
    let step = 1e-3;
    let side = |dir: f64| {
        let mut last_in = 0.0;
        for k in 1..=20_000 {
            let x = dir * k as f64 * step;
            if abs_amplification(spec, Complex64::new(x, 0.0)) > 1.0 {
                return bisect(spec, last_in, x);
            }
            last_in = x;
        }
        last_in
    };
    (side(-1.0), side(1.0))
}
