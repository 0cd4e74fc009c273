//! Exact elimination of the energy quantifier in "for some E" resonance
//! statements. A cube is `E`-resonant iff `E` lies in one of the open
//! intervals `(λ − gδ, λ + gδ)`, so every such statement reduces to
//! interval arithmetic on the spectra.

use crate::lattice::{max_disjoint_family, Cube};

/// `min_{i,j} |λ_i − μ_j|` for two ascending spectra.
pub fn pair_resonance_gap(a: &[f64], b: &[f64]) -> f64 {
    let (mut i, mut j) = (0, 0);
    let mut best = f64::INFINITY;
    while i < a.len() && j < b.len() {
        best = best.min((a[i] - b[j]).abs());
        if a[i] < b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    best
}

/// An energy at which both cubes are resonant, if any: both are resonant
/// somewhere iff `gap < 2 gδ`, and the midpoint of the closest pair works.
pub fn common_resonance(a: &[f64], b: &[f64], threshold: f64) -> Option<f64> {
    let mut best: Option<(f64, f64)> = None;
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        let gap = (a[i] - b[j]).abs();
        if best.is_none_or(|(g, _)| gap < g) {
            best = Some((gap, 0.5 * (a[i] + b[j])));
        }
        if a[i] < b[j] {
            i += 1;
        } else {
            j += 1;
        }
    }
    best.filter(|(gap, _)| *gap < 2.0 * threshold).map(|(_, e)| e)
}

/// Witness of `J` pairwise disjoint cubes resonant at one energy.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepWitness {
    pub energy: f64,
    pub members: Vec<usize>,
}

/// Finds an energy at which at least `j` pairwise disjoint cubes of the list
/// are resonant. Scans the elementary segments between consecutive interval
/// endpoints; the set of resonant cubes is constant on each open segment and
/// at an endpoint it is a subset of a neighbouring segment's set.
///
/// Returns the first witness in increasing energy. The disjoint-family step
/// is exact in `d = 1` and a greedy lower bound otherwise.
pub fn multi_resonance_sweep(
    cubes: &[Cube],
    spectra: &[&[f64]],
    threshold: f64,
    j: usize,
) -> Option<SweepWitness> {
    if j == 0 {
        return Some(SweepWitness { energy: 0.0, members: Vec::new() });
    }
    if !(threshold > 0.0) {
        return None;
    }
    let mut points: Vec<f64> = spectra
        .iter()
        .flat_map(|s| s.iter().flat_map(|l| [l - threshold, l + threshold]))
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();
    for w in points.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if !(hi > lo) {
            continue;
        }
        let e = 0.5 * (lo + hi);
        let active: Vec<usize> = (0..cubes.len())
            .filter(|&c| spectra[c].iter().any(|l| l - threshold <= lo && l + threshold >= hi))
            .collect();
        if active.len() < j {
            continue;
        }
        let family: Vec<Cube> = active.iter().map(|&c| cubes[c].clone()).collect();
        let (chosen, _) = max_disjoint_family(&family);
        if chosen.len() >= j {
            return Some(SweepWitness { energy: e, members: chosen.iter().map(|&i| active[i]).collect() });
        }
    }
    None
}
