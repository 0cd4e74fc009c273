//! Phase space `T^ν`, the `Z^d` rotation action on it, and finite-range
//! numerical certificates for slow returns (USR) and bounded divergence (DIV).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduce a real number to `[0, 1)`.
#[inline]
pub fn wrap01(t: f64) -> f64 {
    let r = t.rem_euclid(1.0);
    // rem_euclid rounds tiny negatives up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Distance on the unit circle `R/Z`.
#[inline]
pub fn circle_distance(a: f64, b: f64) -> f64 {
    let diff = (a - b).abs().rem_euclid(1.0);
    diff.min(1.0 - diff)
}

/// A point of the torus `T^ν`, every coordinate in `[0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::param("nu", "phase dimension must be at least 1"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("coords", "torus coordinates must be finite"));
        }
        Ok(Self { coords: coords.into_iter().map(wrap01).collect() })
    }

    pub fn origin(nu: usize) -> Self {
        Self { coords: vec![0.0; nu.max(1)] }
    }

    /// Uniform (Haar) sample.
    pub fn random<R: Rng + ?Sized>(nu: usize, rng: &mut R) -> Self {
        Self { coords: (0..nu).map(|_| rng.random::<f64>()).collect() }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn nu(&self) -> usize {
        self.coords.len()
    }
}

/// Sup-over-coordinates circle distance on `T^ν`.
pub fn torus_distance(a: &TorusPoint, b: &TorusPoint) -> Result<f64> {
    if a.nu() != b.nu() {
        return Err(Error::DimensionMismatch { expected: a.nu(), got: b.nu() });
    }
    Ok(a.coords
        .iter()
        .zip(&b.coords)
        .map(|(&x, &y)| circle_distance(x, y))
        .fold(0.0, f64::max))
}

/// The `d` frequency vectors `α_1, …, α_d ∈ T^ν` of a torus rotation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyMatrix {
    vectors: Vec<TorusPoint>,
}

impl FrequencyMatrix {
    pub fn new(vectors: Vec<TorusPoint>) -> Result<Self> {
        let Some(first) = vectors.first() else {
            return Err(Error::param("d", "lattice dimension must be at least 1"));
        };
        let nu = first.nu();
        if let Some(bad) = vectors.iter().find(|v| v.nu() != nu) {
            return Err(Error::DimensionMismatch { expected: nu, got: bad.nu() });
        }
        Ok(Self { vectors })
    }

    /// Build from raw rows, one row per lattice direction.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(rows.into_iter().map(TorusPoint::new).collect::<Result<_>>()?)
    }

    pub fn lattice_dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn phase_dim(&self) -> usize {
        self.vectors[0].nu()
    }

    pub fn vectors(&self) -> &[TorusPoint] {
        &self.vectors
    }

    /// `Σ_j x_j α_j mod 1`, coordinatewise.
    pub fn displacement(&self, x: &[i64]) -> Result<Vec<f64>> {
        if x.len() != self.lattice_dim() {
            return Err(Error::DimensionMismatch { expected: self.lattice_dim(), got: x.len() });
        }
        let mut out = vec![0.0; self.phase_dim()];
        for (xj, alpha) in x.iter().zip(&self.vectors) {
            if *xj == 0 {
                continue;
            }
            for (o, a) in out.iter_mut().zip(alpha.coords()) {
                *o = wrap01(*o + wrap01(*xj as f64 * a));
            }
        }
        Ok(out)
    }

    /// Decimal strings with 17 significant digits, one inner vec per direction.
    pub fn to_decimal_strings(&self) -> Vec<Vec<String>> {
        self.vectors
            .iter()
            .map(|v| v.coords().iter().map(|c| format!("{c:.16e}")).collect())
            .collect()
    }

    pub fn from_decimal_strings(rows: &[Vec<String>]) -> Result<Self> {
        let parsed = rows
            .iter()
            .map(|row| {
                row.iter()
                    .map(|s| {
                        s.trim().parse::<f64>().map_err(|e| {
                            Error::param("frequencies", format!("cannot parse {s:?}: {e}"))
                        })
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(parsed)
    }
}

/// Dynamical systems acting on `T^ν`. Only rotations are implemented.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Dynamics {
    Rotation(FrequencyMatrix),
}

impl Dynamics {
    pub fn lattice_dim(&self) -> usize {
        match self {
            Dynamics::Rotation(f) => f.lattice_dim(),
        }
    }

    pub fn phase_dim(&self) -> usize {
        match self {
            Dynamics::Rotation(f) => f.phase_dim(),
        }
    }

    pub fn translate(&self, omega: &TorusPoint, x: &[i64]) -> Result<TorusPoint> {
        match self {
            Dynamics::Rotation(f) => translate(omega, x, f),
        }
    }
}

/// `T^x ω = ω + x_1 α_1 + ⋯ + x_d α_d (mod 1)`.
pub fn translate(omega: &TorusPoint, x: &[i64], freqs: &FrequencyMatrix) -> Result<TorusPoint> {
    if omega.nu() != freqs.phase_dim() {
        return Err(Error::DimensionMismatch { expected: freqs.phase_dim(), got: omega.nu() });
    }
    let shift = freqs.displacement(x)?;
    Ok(TorusPoint {
        coords: omega.coords.iter().zip(shift).map(|(w, s)| wrap01(w + s)).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UsrCertificate {
    pub exponent: f64,
    pub range: u64,
    /// `min dist(T^xω, T^yω)·‖x−y‖^A / 4` over `0 < ‖x−y‖ ≤ range`.
    pub c_min: f64,
    /// Lattice difference attaining the minimum.
    pub argmin: Vec<i64>,
}

impl UsrCertificate {
    /// True when the certificate proves slow returns up to its range.
    pub fn is_valid(&self) -> bool {
        self.c_min > 0.0
    }

    /// Largest cube radius whose diameter respects the certified range.
    pub fn max_cube_radius(&self) -> u64 {
        self.range / 2
    }
}

/// Calls `f` on every nonzero `n` with `‖n‖_∞ ≤ r` whose first nonzero entry is positive.
fn for_each_half_box(d: usize, r: i64, mut f: impl FnMut(&[i64])) {
    let mut n = vec![-r; d];
    n[0] = 0;
    loop {
        if let Some(lead) = n.iter().find(|v| **v != 0) {
            if *lead > 0 {
                f(&n);
            }
        }
        let mut i = d;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if n[i] < r {
                n[i] += 1;
                break;
            }
            n[i] = if i == 0 { 0 } else { -r };
        }
    }
}

fn usr_scan(freqs: &FrequencyMatrix, exponent: f64, range: u64, base: &TorusPoint) -> Result<UsrCertificate> {
    if !(exponent > 0.0) {
        return Err(Error::param("A", "USR exponent must be positive"));
    }
    if range < 1 {
        return Err(Error::param("R", "USR range must be at least 1"));
    }
    let r = i64::try_from(range).map_err(|_| Error::param("R", "range too large"))?;
    let mut best = f64::INFINITY;
    let mut argmin = Vec::new();
    let mut failure = None;
    for_each_half_box(freqs.lattice_dim(), r, |n| {
        if failure.is_some() {
            return;
        }
        match translate(base, n, freqs).and_then(|p| torus_distance(&p, base)) {
            Ok(dist) => {
                let norm = n.iter().map(|v| v.unsigned_abs()).max().unwrap_or(0) as f64;
                let value = dist * norm.powf(exponent);
                if value < best {
                    best = value;
                    argmin = n.to_vec();
                }
            }
            Err(e) => failure = Some(e),
        }
    });
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(UsrCertificate { exponent, range, c_min: best / 4.0, argmin })
}

/// Finite-range USR certificate evaluated at the base point `ω = 0`.
pub fn usr_certificate(freqs: &FrequencyMatrix, exponent: f64, range: u64) -> Result<UsrCertificate> {
    usr_scan(freqs, exponent, range, &TorusPoint::origin(freqs.phase_dim()))
}

/// Same scan from an arbitrary base point; for rotations it must agree with
/// [`usr_certificate`].
pub fn usr_certificate_at(
    freqs: &FrequencyMatrix,
    exponent: f64,
    range: u64,
    base: &TorusPoint,
) -> Result<UsrCertificate> {
    usr_scan(freqs, exponent, range, base)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivCertificate {
    pub exponent: f64,
    pub constant: f64,
    pub range: u64,
    pub trials: usize,
    pub max_ratio: f64,
    pub accepted: bool,
}

/// Pairs closer than this are resampled: the translated distance of such
/// pairs is dominated by the rounding of `ω + xα`, not by the dynamics.
pub const DIV_MIN_PAIR_DISTANCE: f64 = 1e-3;

/// Sampled check of `dist(T^xω, T^xω') ≤ C'‖x‖^{A'} dist(ω, ω')` with
/// `A' = 0`, `C' = 1` (the rotation claim).
pub fn div_certificate(freqs: &FrequencyMatrix, range: u64, trials: usize, seed: u64) -> Result<DivCertificate> {
    if trials < 1 {
        return Err(Error::param("trials", "need at least one trial"));
    }
    let r = i64::try_from(range).map_err(|_| Error::param("R", "range too large"))?;
    let nu = freqs.phase_dim();
    let d = freqs.lattice_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_ratio: f64 = 0.0;
    for _ in 0..trials {
        let (a, b, d0) = loop {
            let a = TorusPoint::random(nu, &mut rng);
            let b = TorusPoint::random(nu, &mut rng);
            let d0 = torus_distance(&a, &b)?;
            if d0 >= DIV_MIN_PAIR_DISTANCE {
                break (a, b, d0);
            }
        };
        let x: Vec<i64> = (0..d).map(|_| rng.random_range(-r..=r)).collect();
        let d1 = torus_distance(&translate(&a, &x, freqs)?, &translate(&b, &x, freqs)?)?;
        max_ratio = max_ratio.max(d1 / d0);
    }
    Ok(DivCertificate {
        exponent: 0.0,
        constant: 1.0,
        range,
        trials,
        max_ratio,
        accepted: max_ratio <= 1.0 + 1e-12,
    })
}

/// Named badly-approximable frequency families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyKind {
    /// First coordinate `(√5−1)/2`.
    Golden,
    /// First coordinate `√2−1`.
    Silver,
    /// One periodic continued fraction `[0; a_1, a_2, …]` per coordinate,
    /// listed direction-major.
    ContinuedFraction(Vec<Vec<u32>>),
}

impl std::str::FromStr for FrequencyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "golden" => Ok(FrequencyKind::Golden),
            "silver" => Ok(FrequencyKind::Silver),
            other => Err(Error::param("kind", format!("unsupported frequency kind {other:?}"))),
        }
    }
}

/// `[0; a_1, …, a_k, a_1, …]`, the pattern repeated until the value is fixed
/// in double precision.
fn periodic_continued_fraction(pattern: &[u32]) -> Result<f64> {
    if pattern.is_empty() || pattern.contains(&0) {
        return Err(Error::param("continued_fraction", "partial quotients must be positive"));
    }
    let mut value = 0.0;
    for i in (0..64).rev() {
        value = 1.0 / (pattern[i % pattern.len()] as f64 + value);
    }
    Ok(value)
}

/// Fractional parts of square roots of these primes are used for the extra
/// coordinates; `{1, √p_1, √p_2, …}` is linearly independent over `Q`.
const PRIMES: [u32; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];

pub fn diophantine_frequency(kind: &FrequencyKind, nu: usize, d: usize) -> Result<FrequencyMatrix> {
    if nu == 0 || d == 0 {
        return Err(Error::param("nu/d", "dimensions must be at least 1"));
    }
    let total = nu * d;
    let values: Vec<f64> = match kind {
        FrequencyKind::ContinuedFraction(cfs) => {
            if cfs.len() != total {
                return Err(Error::param(
                    "continued_fraction",
                    format!("need {total} expansions (one per coordinate), got {}", cfs.len()),
                ));
            }
            cfs.iter().map(|p| periodic_continued_fraction(p)).collect::<Result<_>>()?
        }
        FrequencyKind::Golden | FrequencyKind::Silver => {
            let (first, skip) = match kind {
                FrequencyKind::Golden => ((5f64.sqrt() - 1.0) / 2.0, 5),
                _ => (2f64.sqrt() - 1.0, 2),
            };
            let extra = PRIMES.iter().filter(|p| **p != skip);
            if total > PRIMES.len() {
                return Err(Error::param("nu*d", "too many frequency coordinates"));
            }
            std::iter::once(first)
                .chain(extra.map(|p| wrap01((*p as f64).sqrt())))
                .take(total)
                .collect()
        }
    };
    FrequencyMatrix::from_rows(values.chunks(nu).map(|c| c.to_vec()).collect())
}
