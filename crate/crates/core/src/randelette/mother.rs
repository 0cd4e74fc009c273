//! Compactly supported bump functions equal to one on a plateau.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The C¹ ramp: `t²/2` on `[0,1)`, `1 − (t−2)²/2` on `[1,2)`, `1` beyond.
pub fn phi_c1_eval(t: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else if t < 1.0 {
        0.5 * t * t
    } else if t < 2.0 {
        1.0 - 0.5 * (t - 2.0) * (t - 2.0)
    } else {
        1.0
    }
}

/// Support length shared by every mother.
pub const SUPPORT: f64 = 12.0;

/// Highest supported smoothness class; higher orders lose accuracy in the
/// monomial expansion of the B-spline pieces.
pub const MAX_SMOOTHNESS: u32 = 8;

/// One polynomial piece on `[lo, hi)`, evaluated as `p(sign·(t − anchor))`
/// with ascending coefficients.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Piece {
    lo: f64,
    hi: f64,
    anchor: f64,
    sign: f64,
    coeffs: Vec<f64>,
}

impl Piece {
    fn eval(&self, t: f64, order: u32) -> f64 {
        let s = self.sign * (t - self.anchor);
        let order = order as usize;
        let mut value = 0.0;
        for r in (order..self.coeffs.len()).rev() {
            let falling = ((r - order + 1)..=r).fold(1.0, |acc, f| acc * f as f64);
            value = value * s + self.coeffs[r] * falling;
        }
        if order % 2 == 1 {
            self.sign * value
        } else {
            value
        }
    }
}

/// Piecewise-polynomial bump on `[0, 12]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MotherFunction {
    smoothness: u32,
    pieces: Vec<Piece>,
    plateau: (f64, f64),
    derivative_bound: f64,
}

impl MotherFunction {
    pub fn smoothness(&self) -> u32 {
        self.smoothness
    }

    pub fn support(&self) -> f64 {
        SUPPORT
    }

    pub fn plateau(&self) -> (f64, f64) {
        self.plateau
    }

    /// Interior breakpoints, including the plateau ends.
    pub fn breakpoints(&self) -> Vec<f64> {
        self.pieces.iter().skip(1).map(|p| p.lo).collect()
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.derivative(t, 0)
    }

    /// Analytic derivative of the given order (one-sided from the right at
    /// breakpoints).
    pub fn derivative(&self, t: f64, order: u32) -> f64 {
        if !(t > 0.0 && t < SUPPORT) {
            return 0.0;
        }
        if self.is_plateau(t) {
            return if order == 0 { 1.0 } else { 0.0 };
        }
        let i = self.pieces.partition_point(|p| p.lo <= t).saturating_sub(1);
        self.pieces[i].eval(t, order)
    }

    /// `sup |Φ'|`.
    pub fn derivative_bound(&self) -> f64 {
        self.derivative_bound
    }

    /// `‖Φ‖_{C¹} = max(sup|Φ|, sup|Φ'|)`.
    pub fn c1_norm(&self) -> f64 {
        self.derivative_bound.max(1.0)
    }

    pub fn is_plateau(&self, t: f64) -> bool {
        t >= self.plateau.0 && t <= self.plateau.1
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn factorial(n: u32) -> f64 {
    (1..=n).fold(1.0, |acc, i| acc * i as f64)
}

/// Pieces of the cumulative integral of the cardinal B-spline of order
/// `n` (degree `n−1`, support `[0, n]`), each in its local variable.
fn cumulative_bspline(n: u32) -> Vec<Vec<f64>> {
    let p = n - 1;
    let mut out: Vec<Vec<f64>> = Vec::new();
    let mut offset = 0.0;
    for i in 0..n {
        // B_n(s + i) = (1/p!) Σ_{j≤i} (−1)^j C(n,j) (s + i − j)^p
        let mut b = vec![0.0; p as usize + 1];
        for j in 0..=i {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            let w = sign * binomial(n, j) / factorial(p);
            let a = (i - j) as f64;
            for r in 0..=p {
                b[r as usize] += w * binomial(p, r) * a.powi((p - r) as i32);
            }
        }
        let mut q = vec![offset];
        q.extend(b.iter().enumerate().map(|(r, c)| c / (r + 1) as f64));
        offset = q.iter().sum();
        out.push(q);
    }
    // total mass is one up to rounding
    let total = offset;
    for q in &mut out {
        for c in q.iter_mut() {
            *c /= total;
        }
    }
    out
}

/// Bump of smoothness class `M` with support `[0, 12]`.
///
/// `M = 1` is `φ(t)φ(12 − t)` with plateau `[2, 10]`. For `M ≥ 2` the ramp
/// is the integrated B-spline of order `M + 1` stretched over `[0, 3]`, so
/// the plateau is the middle half `[3, 9]`.
pub fn make_mother(m: u32) -> Result<MotherFunction> {
    if m < 1 || m > MAX_SMOOTHNESS {
        return Err(Error::param("M", format!("smoothness must lie in 1..={MAX_SMOOTHNESS}")));
    }
    let n = m + 1;
    let width = if m == 1 { 2.0 } else { 3.0 };
    let h = width / n as f64;
    let scale = 1.0 / h;
    let ramp: Vec<Vec<f64>> = cumulative_bspline(n)
        .into_iter()
        .map(|q| q.iter().enumerate().map(|(r, c)| c * scale.powi(r as i32)).collect())
        .collect();

    let mut pieces = Vec::new();
    for (i, q) in ramp.iter().enumerate() {
        let lo = i as f64 * h;
        pieces.push(Piece { lo, hi: lo + h, anchor: lo, sign: 1.0, coeffs: q.clone() });
    }
    pieces.push(Piece {
        lo: width,
        hi: SUPPORT - width,
        anchor: width,
        sign: 1.0,
        coeffs: vec![1.0],
    });
    for (i, q) in ramp.iter().enumerate().rev() {
        let a = i as f64 * h;
        pieces.push(Piece {
            lo: SUPPORT - a - h,
            hi: SUPPORT - a,
            anchor: SUPPORT - a,
            sign: -1.0,
            coeffs: q.clone(),
        });
    }
    // the B-spline peaks at its midpoint, so sup|Φ'| is the ramp slope there
    let mid = width / 2.0;
    let derivative_bound = pieces
        .iter()
        .filter(|p| p.lo <= mid + 1e-12)
        .last()
        .map(|p| p.eval(mid, 1).abs())
        .unwrap_or(0.0);
    Ok(MotherFunction {
        smoothness: m,
        pieces,
        plateau: (width, SUPPORT - width),
        derivative_bound,
    })
}
