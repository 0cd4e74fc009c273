//! `(ℓ, q, S)`-subharmonic functions on a cube and the radial-descent bound.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{max_norm_dist, Cube, Site};

/// Site values on a cube in lexicographic order.
#[derive(Debug, Clone, PartialEq)]
pub struct CubeFunction<'a> {
    pub cube: &'a Cube,
    pub values: &'a [f64],
}

impl<'a> CubeFunction<'a> {
    pub fn new(cube: &'a Cube, values: &'a [f64]) -> Result<Self> {
        if values.len() != cube.site_count() {
            return Err(Error::DimensionMismatch { expected: cube.site_count(), got: values.len() });
        }
        Ok(Self { cube, values })
    }

    /// `M(f, □) = max |f|`.
    pub fn sup(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).fold(0.0, f64::max)
    }

    fn ball_max(&self, x: &[i64], radius: u64) -> f64 {
        let sites = self.cube.sites();
        sites
            .iter()
            .zip(self.values)
            .filter(|(y, _)| max_norm_dist(x, y) <= radius)
            .map(|(_, v)| v.abs())
            .fold(0.0, f64::max)
    }
}

/// Distance from `x` to the inner boundary of the cube.
fn depth(cube: &Cube, x: &[i64]) -> u64 {
    cube.radius - max_norm_dist(x, &cube.center)
}

/// `r(x) = min{r ≥ ℓ+1 : Λ_{r+ℓ}(x) \ Λ_{r−ℓ}(x) ⊂ R}`, restricted to
/// annuli that still meet the cube (an empty annulus would make the
/// condition vacuous and the bound global).
pub fn return_radius(cube: &Cube, singular: &HashSet<Site>, x: &[i64], ell: u64) -> Option<u64> {
    let sites = cube.sites();
    let reach = sites.iter().map(|y| max_norm_dist(x, y)).max().unwrap_or(0);
    (ell + 1..).take_while(|r| r - ell < reach).find(|&r| {
        sites.iter().all(|y| {
            let dist = max_norm_dist(x, y);
            dist + ell <= r || dist > r + ell || !singular.contains(y)
        })
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubharmonicReport {
    pub ok: bool,
    /// Sites where the defining inequality fails.
    pub violations: Vec<Site>,
}

/// Pointwise check of `(ℓ, q, S)`-subharmonicity.
///
/// Off `S`, every site at depth `≥ ℓ` must satisfy
/// `|f(u)| ≤ q max_{‖y−u‖ ≤ ℓ+1} |f(y)|`; on `S` the ball radius is
/// `r(x) + ℓ` and sites without a return radius are unconstrained.
pub fn subharmonic_check(f: &CubeFunction, ell: u64, q: f64, singular: &HashSet<Site>) -> Result<SubharmonicReport> {
    if ell < 1 {
        return Err(Error::param("ell", "must be at least 1"));
    }
    if !(q > 0.0) {
        return Err(Error::param("q", "must be positive"));
    }
    let mut violations = Vec::new();
    for (x, v) in f.cube.sites().iter().zip(f.values) {
        if depth(f.cube, x) < ell {
            continue;
        }
        let radius = if singular.contains(x) {
            match return_radius(f.cube, singular, x, ell) {
                Some(r) => r + ell,
                None => continue,
            }
        } else {
            ell + 1
        };
        if v.abs() > q * f.ball_max(x, radius) {
            violations.push(x.clone());
        }
    }
    Ok(SubharmonicReport { ok: violations.is_empty(), violations })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialDescent {
    /// `Σ diam Q_i` with `diam □_r = 2r`.
    pub w: f64,
    /// `max(0, ⌊(L − W)/ℓ⌋)`.
    pub exponent: u64,
    pub sup: f64,
    pub bound: f64,
    pub value: f64,
    pub holds: bool,
    /// `⌊(L + 1)/(ℓ + 1)⌋`: the number of descent steps that a ball of
    /// radius `ℓ + 1` always permits when `S` is empty.
    pub guaranteed_exponent: u64,
}

/// `|f(u)| ≤ q^{⌊(L − W)/ℓ⌋} M(f, □)` at the cube center.
pub fn radial_descent_bound(f: &CubeFunction, ell: u64, q: f64, cover: &[Cube]) -> Result<RadialDescent> {
    if ell < 1 {
        return Err(Error::param("ell", "must be at least 1"));
    }
    if !(q > 0.0) {
        return Err(Error::param("q", "must be positive"));
    }
    let w: f64 = cover.iter().map(|c| 2.0 * c.radius as f64).sum();
    let l = f.cube.radius as f64;
    let exponent = if l > w { ((l - w) / ell as f64).floor() as u64 } else { 0 };
    let sup = f.sup();
    let bound = q.powf(exponent as f64) * sup;
    let centre = f.cube.index_of(&f.cube.center).expect("center is inside");
    let value = f.values[centre].abs();
    Ok(RadialDescent {
        w,
        exponent,
        sup,
        bound,
        value,
        holds: value <= bound * (1.0 + 1e-12),
        guaranteed_exponent: (f.cube.radius + 1) / (ell + 1),
    })
}
