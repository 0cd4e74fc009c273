//! Lattice cubes in `Z^d` (max-norm balls), their boundaries, the scale
//! schedule `L_k`, `δ_k`, `r_k`, and disjoint sub-cube packing.

use serde::{Deserialize, Serialize};

use crate::dynamics::TorusPoint;
use crate::error::{Error, Result};

pub type Site = Vec<i64>;

/// `□_L(u) = {x ∈ Z^d : ‖x − u‖_∞ ≤ L}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cube {
    pub center: Site,
    pub radius: u64,
}

impl Cube {
    pub fn new(center: Site, radius: u64) -> Result<Self> {
        if center.is_empty() {
            return Err(Error::param("d", "lattice dimension must be at least 1"));
        }
        Ok(Self { center, radius })
    }

    /// Cube centered at the origin.
    pub fn centered(d: usize, radius: u64) -> Self {
        Self { center: vec![0; d.max(1)], radius }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn side(&self) -> usize {
        2 * self.radius as usize + 1
    }

    pub fn site_count(&self) -> usize {
        self.side().pow(self.dim() as u32)
    }

    pub fn contains(&self, x: &[i64]) -> bool {
        x.len() == self.dim() && max_norm_dist(x, &self.center) <= self.radius
    }

    pub fn contains_cube(&self, other: &Cube) -> bool {
        other.dim() == self.dim()
            && max_norm_dist(&other.center, &self.center) + other.radius <= self.radius
    }

    pub fn is_disjoint(&self, other: &Cube) -> bool {
        max_norm_dist(&self.center, &other.center) > self.radius + other.radius
    }

    /// Lexicographic index (first coordinate most significant).
    pub fn index_of(&self, x: &[i64]) -> Option<usize> {
        if !self.contains(x) {
            return None;
        }
        let side = self.side();
        let r = self.radius as i64;
        Some(x.iter().zip(&self.center).fold(0usize, |acc, (xi, ci)| {
            acc * side + (xi - ci + r) as usize
        }))
    }

    pub fn site_at(&self, mut index: usize) -> Site {
        let side = self.side();
        let r = self.radius as i64;
        let mut x = vec![0i64; self.dim()];
        for i in (0..self.dim()).rev() {
            x[i] = self.center[i] - r + (index % side) as i64;
            index /= side;
        }
        x
    }

    /// All sites in lexicographic order.
    pub fn sites(&self) -> Vec<Site> {
        (0..self.site_count()).map(|i| self.site_at(i)).collect()
    }

    /// Sites with `‖x − u‖ = L`.
    pub fn inner_boundary(&self) -> Vec<Site> {
        self.sites()
            .into_iter()
            .filter(|x| max_norm_dist(x, &self.center) == self.radius)
            .collect()
    }

    /// Nearest-neighbour pairs `(x, y)` with `x` in the inner boundary and
    /// `y` outside the cube.
    pub fn boundary(&self) -> Vec<(Site, Site)> {
        let mut pairs = Vec::new();
        for x in self.inner_boundary() {
            for i in 0..self.dim() {
                for step in [-1i64, 1] {
                    let mut y = x.clone();
                    y[i] += step;
                    if !self.contains(&y) {
                        pairs.push((x.clone(), y));
                    }
                }
            }
        }
        pairs
    }

    /// Sites at max-norm distance at most `r` from the center.
    pub fn core(&self, r: u64) -> Vec<Site> {
        self.sites()
            .into_iter()
            .filter(|x| max_norm_dist(x, &self.center) <= r)
            .collect()
    }
}

pub fn max_norm_dist(a: &[i64], b: &[i64]) -> u64 {
    a.iter().zip(b).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0)
}

/// MSA constants: `L_k = ⌊L_{k−1}^{3/2}⌋ + 1`, `δ_k = g^{−1/2} e^{−4√L_k}`,
/// `r_k = δ_k^{1+1/(2ν)}`, `J_ν = ν + 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub l0: u64,
    pub g: f64,
}

impl ScaleSchedule {
    pub const ALPHA: f64 = 1.5;
    pub const A: f64 = 0.5;
    pub const B: f64 = 0.5;

    pub fn new(l0: u64, g: f64) -> Result<Self> {
        if l0 <= 2 {
            return Err(Error::param("l0", "initial scale must exceed 2"));
        }
        if !(g >= 0.0) || !g.is_finite() {
            return Err(Error::param("g", "coupling must be finite and non-negative"));
        }
        Ok(Self { l0, g })
    }

    /// `L_k`, with `L_{−1} = 0`.
    pub fn scale(&self, k: i64) -> Result<u64> {
        if k < -1 {
            return Err(Error::param("k", "scale index must be ≥ −1"));
        }
        if k == -1 {
            return Ok(0);
        }
        let mut l = self.l0;
        for _ in 0..k {
            l = next_scale(l).ok_or_else(|| Error::param("k", "scale overflows 64 bits"))?;
        }
        Ok(l)
    }

    pub fn delta(&self, k: i64) -> Result<f64> {
        let l = self.scale(k)?;
        Ok(self.g.powf(-Self::A) * (-4.0 * (l as f64).powf(Self::B)).exp())
    }

    /// `g δ_k = g^{1/2} e^{−4√L_k}`; zero at `g = 0`.
    pub fn resonance_threshold(&self, k: i64) -> Result<f64> {
        let l = self.scale(k)?;
        Ok(self.g.powf(1.0 - Self::A) * (-4.0 * (l as f64).powf(Self::B)).exp())
    }

    pub fn covering_radius(&self, k: i64, nu: usize) -> Result<f64> {
        Ok(self.delta(k)?.powf(1.0 + 1.0 / (2.0 * nu as f64)))
    }

    pub fn j_nu(nu: usize) -> usize {
        nu + 2
    }
}

/// `⌊L^{3/2}⌋ + 1` in exact integer arithmetic.
fn next_scale(l: u64) -> Option<u64> {
    let cube = (l as u128).checked_pow(3)?;
    let root = isqrt(cube);
    u64::try_from(root + 1).ok()
}

fn isqrt(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    x
}

/// `γ(m, L) = m(1 + L^{−1/8})`; requires `L ≥ 1`.
pub fn gamma(m: f64, l: u64) -> Result<f64> {
    if !(m > 0.0) {
        return Err(Error::param("m", "mass must be positive"));
    }
    if l < 1 {
        return Err(Error::param("L", "γ(m, L) needs L ≥ 1"));
    }
    Ok(m * (1.0 + (l as f64).powf(-0.125)))
}

/// `γ(m, L)·L = m(L + L^{7/8})`, which extends continuously to `L = 0`.
pub fn decay_exponent(m: f64, l: u64) -> f64 {
    let l = l as f64;
    m * (l + l.powf(0.875))
}

/// All sub-cubes of `host` with the given radius whose centers lie on a grid
/// of the given step, anchored at the lowest admissible corner.
pub fn enumerate_subcubes(host: &Cube, radius: u64, step: u64) -> Vec<Cube> {
    if radius > host.radius || step == 0 {
        return Vec::new();
    }
    let span = (host.radius - radius) as i64;
    let offsets: Vec<i64> = (-span..=span).step_by(step as usize).collect();
    let d = host.dim();
    let mut out = Vec::with_capacity(offsets.len().pow(d as u32));
    let mut idx = vec![0usize; d];
    loop {
        let center = host.center.iter().zip(&idx).map(|(c, i)| c + offsets[*i]).collect();
        out.push(Cube { center, radius });
        let mut i = d;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < offsets.len() {
                break;
            }
            idx[i] = 0;
        }
    }
}

/// A family of pairwise disjoint cubes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisjointFamily {
    pub cubes: Vec<Cube>,
    /// True when the family is provably of maximum size (d = 1); otherwise a
    /// greedy lower bound.
    pub exact: bool,
}

/// Indices of a large pairwise disjoint subfamily of `cubes`.
///
/// In `d = 1` cubes are intervals and greedy selection by right endpoint is
/// optimal. In higher dimension the same greedy pass (ordered by the
/// lexicographically largest corner) gives a lower bound only.
pub fn max_disjoint_family(cubes: &[Cube]) -> (Vec<usize>, bool) {
    let exact = cubes.iter().all(|c| c.dim() == 1);
    let mut order: Vec<usize> = (0..cubes.len()).collect();
    order.sort_by(|&a, &b| {
        let ka: Vec<i64> = cubes[a].center.iter().map(|c| c + cubes[a].radius as i64).collect();
        let kb: Vec<i64> = cubes[b].center.iter().map(|c| c + cubes[b].radius as i64).collect();
        ka.cmp(&kb).then(a.cmp(&b))
    });
    let mut chosen: Vec<usize> = Vec::new();
    for i in order {
        if chosen.iter().all(|&j| cubes[i].is_disjoint(&cubes[j])) {
            chosen.push(i);
        }
    }
    chosen.sort_unstable();
    (chosen, exact)
}

/// Maximum (d = 1) or greedy (d ≥ 2) family of disjoint radius-`radius`
/// sub-cubes of `host`, truncated to `max_count`.
pub fn enumerate_disjoint_subcubes(host: &Cube, radius: u64, max_count: usize) -> DisjointFamily {
    let candidates = enumerate_subcubes(host, radius, 1);
    let (idx, exact) = max_disjoint_family(&candidates);
    DisjointFamily {
        cubes: idx.into_iter().take(max_count).map(|i| candidates[i].clone()).collect(),
        exact,
    }
}

/// Centers `((2l_1+1)r, …, (2l_ν+1)r)` with `r = 1/(2N)`, `N = ⌈1/(2 r_k)⌉`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringGrid {
    pub requested_radius: f64,
    /// `1/(2N) ≤ requested_radius`.
    pub radius: f64,
    pub per_axis: u64,
    pub nu: usize,
    pub centers: Vec<TorusPoint>,
}

/// Grids with more centers than this are refused rather than materialized.
pub const MAX_GRID_CENTERS: u128 = 1 << 22;

pub fn covering_grid_for_radius(r: f64, nu: usize) -> Result<CoveringGrid> {
    if !(r > 0.0 && r <= 0.5) {
        return Err(Error::param("r", "covering radius must lie in (0, 1/2]"));
    }
    if nu == 0 {
        return Err(Error::param("nu", "phase dimension must be at least 1"));
    }
    let n_float = (1.0 / (2.0 * r)).ceil();
    if !n_float.is_finite() || n_float > u64::MAX as f64 {
        return Err(Error::param("r", "covering grid too fine to count"));
    }
    let n = n_float as u64;
    let total = (n as u128).checked_pow(nu as u32);
    if total.is_none_or(|t| t > MAX_GRID_CENTERS) {
        return Err(Error::param(
            "r",
            format!("covering grid has {n}^{nu} centers; not materialized"),
        ));
    }
    let radius = 1.0 / (2.0 * n as f64);
    let axis: Vec<f64> = (0..n).map(|l| (2 * l + 1) as f64 * radius).collect();
    let mut centers = Vec::new();
    let mut idx = vec![0usize; nu];
    'outer: loop {
        centers.push(TorusPoint::new(idx.iter().map(|&i| axis[i]).collect())?);
        let mut i = nu;
        loop {
            if i == 0 {
                break 'outer;
            }
            i -= 1;
            idx[i] += 1;
            if idx[i] < axis.len() {
                break;
            }
            idx[i] = 0;
        }
    }
    Ok(CoveringGrid { requested_radius: r, radius, per_axis: n, nu, centers })
}

pub fn covering_grid(sched: &ScaleSchedule, k: i64, nu: usize) -> Result<CoveringGrid> {
    covering_grid_for_radius(sched.covering_radius(k, nu)?.min(0.5), nu)
}
