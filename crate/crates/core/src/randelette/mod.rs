//! Randelette expansions `v(ω, θ) = Σ_n a_n Σ_k θ_{n,k} φ_{n,k}(ω)`.
//!
//! Generation `n ≥ 4` consists of the copies `φ_{n,k}(t) = Φ(2^n t − s k)`
//! of the mother `Φ` (support `[0, 12]`), `s` being the shift step (4 by
//! default), read on the circle. Coarser generations would have supports
//! longer than the circle itself, so each of them is a single constant
//! function equal to one.

mod mother;
mod theta;

pub use mother::{make_mother, phi_c1_eval, MotherFunction, MAX_SMOOTHNESS, SUPPORT};
pub use theta::{ThetaSample, ThetaSource};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dynamics::{translate, FrequencyMatrix, TorusPoint};
use crate::error::{Error, Result};
use crate::lattice::Cube;

/// Generations below this index are a single constant randelette.
pub const FIRST_LOCAL_GENERATION: u32 = 4;

pub const DEFAULT_STEP: u32 = 4;

/// Default decay rate `(M + 1) ln 2 + 1/2`.
pub fn default_decay(m: u32) -> f64 {
    (m as f64 + 1.0) * std::f64::consts::LN_2 + 0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandeletteEnsemble {
    mother: MotherFunction,
    decay: f64,
    n_max: u32,
    nu: usize,
    step: u32,
}

/// A copy of generation `n` that is nonzero at a circle coordinate.
#[derive(Debug, Clone, Copy)]
struct Hit {
    k: u64,
    local: f64,
}

impl RandeletteEnsemble {
    pub fn new(m: u32, decay: f64, n_max: u32, nu: usize) -> Result<Self> {
        Self::with_step(m, decay, n_max, nu, DEFAULT_STEP)
    }

    pub fn with_step(m: u32, decay: f64, n_max: u32, nu: usize, step: u32) -> Result<Self> {
        let mother = make_mother(m)?;
        if nu == 0 {
            return Err(Error::param("nu", "phase dimension must be at least 1"));
        }
        let rate_floor = std::f64::consts::LN_2 * m.max(1) as f64;
        if !(decay > rate_floor) || !decay.is_finite() {
            return Err(Error::param(
                "c",
                format!("decay rate must exceed M ln 2 = {rate_floor:.6} for the derivative series to converge"),
            ));
        }
        if ![1, 2, 4, 8].contains(&step) {
            return Err(Error::param("step", "shift step must be 1, 2, 4 or 8"));
        }
        let per_axis = (1u64 << n_max.min(63)) / step as u64;
        if n_max > 62 || per_axis.checked_pow(nu as u32).is_none() {
            return Err(Error::param("N_max", "too many randelettes to index in 64 bits"));
        }
        Ok(Self { mother, decay, n_max, nu, step })
    }

    pub fn mother(&self) -> &MotherFunction {
        &self.mother
    }

    pub fn decay(&self) -> f64 {
        self.decay
    }

    pub fn n_max(&self) -> u32 {
        self.n_max
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    pub fn step(&self) -> u32 {
        self.step
    }

    /// `a_n = e^{−cn}`.
    pub fn amplitude(&self, n: u32) -> f64 {
        (-self.decay * n as f64).exp()
    }

    /// Copies per coordinate axis in generation `n`.
    pub fn per_axis(&self, n: u32) -> u64 {
        if n < FIRST_LOCAL_GENERATION {
            1
        } else {
            (1u64 << n) / self.step as u64
        }
    }

    /// `K_n`, the number of randelettes in generation `n`.
    pub fn count(&self, n: u32) -> u64 {
        self.per_axis(n).pow(self.nu as u32)
    }

    /// `K'`, the overlap bound.
    pub fn overlap_bound(&self) -> u64 {
        (SUPPORT / self.step as f64).ceil() as u64
    }

    pub fn overlap_bound_total(&self) -> u64 {
        self.overlap_bound().pow(self.nu as u32)
    }

    /// Uniform bound on `|v_{N'} − v_{N_max}|` for any `N' > N_max`.
    pub fn tail_bound(&self) -> f64 {
        self.overlap_bound_total() as f64 * (-self.decay * (self.n_max as f64 + 1.0)).exp()
            / (1.0 - (-self.decay).exp())
    }

    /// Uniform bound on every partial derivative of the hull.
    pub fn gradient_bound(&self) -> f64 {
        self.overlap_bound_total() as f64 * self.mother.c1_norm()
            / (1.0 - (-(self.decay - std::f64::consts::LN_2)).exp())
    }

    fn check_generation(&self, n: u32) -> Result<()> {
        if n > self.n_max {
            return Err(Error::IndexOutOfRange(format!("generation {n} exceeds N_max = {}", self.n_max)));
        }
        Ok(())
    }

    fn check_point(&self, omega: &TorusPoint) -> Result<()> {
        if omega.nu() != self.nu {
            return Err(Error::DimensionMismatch { expected: self.nu, got: omega.nu() });
        }
        Ok(())
    }

    /// Copies of generation `n ≥ 4` whose open support contains `t`.
    fn hits(&self, n: u32, t: f64) -> Vec<Hit> {
        let period = (1u64 << n) as f64;
        let step = self.step as f64;
        let u = t * period;
        let k_top = (u / step).floor() as i64;
        let per_axis = self.per_axis(n) as i64;
        let mut out = Vec::with_capacity(3);
        for j in 0..=self.overlap_bound() as i64 {
            let k = k_top - j;
            let local = u - step * k as f64;
            if local > 0.0 && local < SUPPORT {
                out.push(Hit { k: k.rem_euclid(per_axis) as u64, local });
            }
        }
        out
    }

    fn flat_index(&self, n: u32, ks: &[u64]) -> u64 {
        let per_axis = self.per_axis(n);
        ks.iter().fold(0, |acc, k| acc * per_axis + k)
    }

    /// Per-coordinate hit lists, or `None` for the constant generations.
    fn generation_hits(&self, n: u32, omega: &TorusPoint) -> Option<Vec<Vec<Hit>>> {
        if n < FIRST_LOCAL_GENERATION {
            return None;
        }
        Some(omega.coords().iter().map(|&t| self.hits(n, t)).collect())
    }

    /// `φ_{n,k}(ω)` with `k` the flat (row-major) multi-index, `0 ≤ k < K_n`.
    pub fn randelette_eval(&self, n: u32, k: u64, omega: &TorusPoint) -> Result<f64> {
        self.check_generation(n)?;
        self.check_point(omega)?;
        if k >= self.count(n) {
            return Err(Error::IndexOutOfRange(format!("k = {k} but K_{n} = {}", self.count(n))));
        }
        if n < FIRST_LOCAL_GENERATION {
            return Ok(1.0);
        }
        let period = (1u64 << n) as f64;
        let per_axis = self.per_axis(n);
        let mut rest = k;
        let mut ks = vec![0u64; self.nu];
        for i in (0..self.nu).rev() {
            ks[i] = rest % per_axis;
            rest /= per_axis;
        }
        Ok(omega
            .coords()
            .iter()
            .zip(&ks)
            .map(|(&t, &ki)| {
                let mut local = t * period - (self.step as u64 * ki) as f64;
                if local < 0.0 {
                    local += period;
                }
                self.mother.eval(local)
            })
            .product())
    }

    /// Visits every randelette of generation `n` that is nonzero at `ω`,
    /// passing the flat index and the per-coordinate local arguments.
    fn for_each_term(&self, hits: &[Vec<Hit>], n: u32, mut f: impl FnMut(u64, &[f64])) {
        let nu = hits.len();
        if hits.iter().any(|h| h.is_empty()) {
            return;
        }
        let mut idx = vec![0usize; nu];
        let mut ks = vec![0u64; nu];
        let mut locals = vec![0.0; nu];
        loop {
            for i in 0..nu {
                ks[i] = hits[i][idx[i]].k;
                locals[i] = hits[i][idx[i]].local;
            }
            f(self.flat_index(n, &ks), &locals);
            let mut i = nu;
            loop {
                if i == 0 {
                    return;
                }
                i -= 1;
                idx[i] += 1;
                if idx[i] < hits[i].len() {
                    break;
                }
                idx[i] = 0;
            }
        }
    }

    /// `Σ_k θ_{n,k} φ_{n,k}(ω)` for one generation, without the amplitude.
    pub fn generation_value(&self, n: u32, theta: &ThetaSample, omega: &TorusPoint) -> Result<f64> {
        self.check_generation(n)?;
        self.check_point(omega)?;
        let mut gen = 0.0;
        match self.generation_hits(n, omega) {
            None => gen = theta.get(n, 0),
            Some(hits) => self.for_each_term(&hits, n, |k, locals| {
                let phi: f64 = locals.iter().map(|&s| self.mother.eval(s)).product();
                gen += theta.get(n, k) * phi;
            }),
        }
        Ok(gen)
    }

    /// Truncated hull `Σ_{n ≤ N_max} a_n Σ_k θ_{n,k} φ_{n,k}(ω)`, summed from
    /// the finest generation down.
    pub fn hull_eval(&self, theta: &ThetaSample, omega: &TorusPoint) -> Result<f64> {
        self.check_point(omega)?;
        let mut total = 0.0;
        for n in (0..=self.n_max).rev() {
            total += self.amplitude(n) * self.generation_value(n, theta, omega)?;
        }
        Ok(total)
    }

    /// Analytic gradient of the truncated hull.
    pub fn hull_gradient(&self, theta: &ThetaSample, omega: &TorusPoint) -> Result<Vec<f64>> {
        self.check_point(omega)?;
        let mut grad = vec![0.0; self.nu];
        for n in (FIRST_LOCAL_GENERATION..=self.n_max).rev() {
            let hits = self.generation_hits(n, omega).unwrap_or_default();
            let scale = self.amplitude(n) * (1u64 << n) as f64;
            self.for_each_term(&hits, n, |k, locals| {
                let th = theta.get(n, k);
                if th == 0.0 {
                    return;
                }
                let values: Vec<f64> = locals.iter().map(|&s| self.mother.eval(s)).collect();
                for i in 0..locals.len() {
                    let others: f64 = values
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| *j != i)
                        .map(|(_, v)| v)
                        .product();
                    grad[i] += scale * th * others * self.mother.derivative(locals[i], 1);
                }
            });
        }
        Ok(grad)
    }

    /// Number of generation-`n` randelettes whose open support contains `ω`.
    pub fn overlap_count(&self, n: u32, omega: &TorusPoint) -> Result<u64> {
        self.check_generation(n)?;
        self.check_point(omega)?;
        Ok(match self.generation_hits(n, omega) {
            None => 1,
            Some(hits) => hits.iter().map(|h| h.len() as u64).product(),
        })
    }

    /// Flat index of a generation-`n` randelette equal to one at `ω`, if any.
    pub fn plateau_index(&self, n: u32, omega: &TorusPoint) -> Result<Option<u64>> {
        self.check_generation(n)?;
        self.check_point(omega)?;
        let Some(hits) = self.generation_hits(n, omega) else {
            return Ok(Some(0));
        };
        let mut ks = Vec::with_capacity(self.nu);
        for h in &hits {
            match h.iter().find(|hit| self.mother.is_plateau(hit.local)) {
                Some(hit) => ks.push(hit.k),
                None => return Ok(None),
            }
        }
        Ok(Some(self.flat_index(n, &ks)))
    }

    /// True when a single generation-`n` support contains both points.
    fn share_support(&self, n: u32, a: &TorusPoint, b: &TorusPoint) -> bool {
        if n < FIRST_LOCAL_GENERATION {
            return true;
        }
        a.coords().iter().zip(b.coords()).all(|(&s, &t)| {
            let hs = self.hits(n, s);
            self.hits(n, t).iter().any(|h| hs.iter().any(|g| g.k == h.k))
        })
    }

    /// True iff for all distinct sites `x, y` of the cube and every
    /// generation in `[N, N_max]`, no randelette support holds both orbit points.
    pub fn support_separation_check(
        &self,
        freqs: &FrequencyMatrix,
        cube: &Cube,
        omega: &TorusPoint,
        generation: u32,
    ) -> Result<bool> {
        self.check_generation(generation)?;
        if cube.dim() != freqs.lattice_dim() {
            return Err(Error::DimensionMismatch { expected: freqs.lattice_dim(), got: cube.dim() });
        }
        let orbit = cube
            .sites()
            .iter()
            .map(|x| translate(omega, x, freqs))
            .collect::<Result<Vec<_>>>()?;
        for n in generation..=self.n_max {
            for i in 0..orbit.len() {
                for j in i + 1..orbit.len() {
                    if self.share_support(n, &orbit[i], &orbit[j]) {
                        return Ok(false);
                    }
                }
            }
        }
        Ok(true)
    }

    /// Resamples the plateau coefficient of generation `generation` covering
    /// `T^x ω` with every other coefficient frozen.
    #[allow(clippy::too_many_arguments)]
    pub fn lvb_experiment(
        &self,
        freqs: &FrequencyMatrix,
        cube: &Cube,
        x: &[i64],
        omega: &TorusPoint,
        generation: u32,
        trials: usize,
        seed: u64,
    ) -> Result<LvbReport> {
        self.check_generation(generation)?;
        if !cube.contains(x) {
            return Err(Error::Precondition(format!("site {x:?} is not in the cube")));
        }
        if trials < 2 {
            return Err(Error::param("trials", "need at least two resamplings"));
        }
        let sites = cube.sites();
        let orbit = sites
            .iter()
            .map(|y| translate(omega, y, freqs))
            .collect::<Result<Vec<_>>>()?;
        let ix = cube.index_of(x).expect("checked above");
        let k_star = self.plateau_index(generation, &orbit[ix])?.ok_or_else(|| {
            Error::Precondition(format!("no generation-{generation} plateau covers T^x ω"))
        })?;

        let frozen = ThetaSample::seeded(seed);
        let baseline = orbit
            .iter()
            .map(|p| self.hull_eval(&frozen, p))
            .collect::<Result<Vec<f64>>>()?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let mut draws = vec![0.0, 1.0];
        draws.extend((2..trials).map(|_| rng.random::<f64>()));

        let mut frozen_ok = true;
        let mut values = Vec::with_capacity(draws.len());
        for &u in &draws {
            let theta = frozen.clone().with_override(generation, k_star, u);
            for (i, p) in orbit.iter().enumerate() {
                let v = self.hull_eval(&theta, p)?;
                if i == ix {
                    values.push(v);
                } else if v.to_bits() != baseline[i].to_bits() {
                    frozen_ok = false;
                }
            }
        }
        let slope = values[1] - values[0];
        let affine_residual = draws
            .iter()
            .zip(&values)
            .map(|(u, v)| (v - (values[0] + slope * u)).abs())
            .fold(0.0, f64::max);
        Ok(LvbReport {
            generation,
            k_star,
            amplitude: self.amplitude(generation),
            slope,
            affine_residual,
            frozen_ok,
            density_bound: 1.0 / self.amplitude(generation),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LvbReport {
    pub generation: u32,
    pub k_star: u64,
    /// `a_N`, the expected slope.
    pub amplitude: f64,
    pub slope: f64,
    pub affine_residual: f64,
    pub frozen_ok: bool,
    /// Sup of the conditional density of `v(T^xω, θ)`, before `g`-scaling.
    pub density_bound: f64,
}

/// The finest generation needed so that supports separate a cube's orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparationGeneration {
    pub exponent: f64,
    pub constant: f64,
    pub l: u64,
    pub n_raw: f64,
    pub n_min: u32,
}

impl SeparationGeneration {
    /// `a(A, C) = A / ln 2`.
    pub fn slope(&self) -> f64 {
        self.exponent / std::f64::consts::LN_2
    }

    /// `b(A, C) = A + 5 − log₂ C`.
    pub fn intercept(&self) -> f64 {
        self.exponent + 5.0 - self.constant.log2()
    }

    /// Exponent `B = cA / ln 2` of the density bound in `L`.
    pub fn density_exponent(&self, decay: f64) -> f64 {
        decay * self.slope()
    }
}

/// `N(L, A, C) = (A / ln 2) ln L + A + 5 − ln C / ln 2`, `N_min = ⌊N⌋ + 1`.
pub fn separation_generation(l: u64, a: f64, c: f64) -> Result<SeparationGeneration> {
    if l < 2 {
        return Err(Error::param("L", "need L ≥ 2"));
    }
    if !(a > 0.0) {
        return Err(Error::param("A", "must be positive"));
    }
    if !(c > 0.0) {
        return Err(Error::param("C", "must be positive"));
    }
    let n_raw = a / std::f64::consts::LN_2 * (l as f64).ln() + a + 5.0 - c.ln() / std::f64::consts::LN_2;
    let n_min = n_raw.floor() + 1.0;
    if !(n_min >= 1.0 && n_min < u32::MAX as f64) {
        return Err(Error::param("C", format!("separation generation {n_raw} out of range")));
    }
    Ok(SeparationGeneration { exponent: a, constant: c, l, n_raw, n_min: n_min as u32 })
}
