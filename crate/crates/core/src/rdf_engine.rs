//! Pair-distance histograms over molecular centers and their normalization.
//!
//! Collection: for every frame, each unordered pair of centers within the
//! cutoff adds one count to both `(α, β)` and `(β, α)` in bin
//! `n = 1 + NINT(r / dr)`, and the cell volume is accumulated.
//!
//! Averaging: counts are divided by the number of frames and by `N_α`, then
//! by the shell volume of the bin and the number density `ρ_β = N_β / <V>`.
//! The bin `n` is centered on `r_n = (n - 1) dr`, so its shell runs from
//! `r_n - dr/2` (clamped at 0) to `r_n + dr/2` (clamped at the cutoff).

use std::f64::consts::PI;

use log::warn;
use thiserror::Error;

use crate::geometry::{min_image, nint, CellTensor, Vec3};
use crate::trajectory_io::{pair_order, RdfTable, Topology};

#[derive(Debug, Error, PartialEq)]
pub enum RdfError {
    #[error("no configurations processed")]
    NoFrames,
    #[error("mean cell volume is zero; radial distributions need a periodic cell")]
    ZeroVolume,
    #[error("histogram shapes differ: {0}")]
    ShapeMismatch(String),
}

/// 1-based histogram bin for the distance `r`.
#[inline]
pub fn bin_index(r: f64, dr: f64) -> usize {
    1 + nint(r / dr) as usize
}

/// Volume of the shell sampled by the 1-based bin `n`.
pub fn shell_volume(n: usize, dr: f64, rmax: f64) -> f64 {
    let center = (n - 1) as f64 * dr;
    let inner = (center - 0.5 * dr).max(0.0);
    let outer = (center + 0.5 * dr).min(rmax);
    if outer <= inner {
        return 0.0;
    }
    4.0 / 3.0 * PI * (outer.powi(3) - inner.powi(3))
}

/// Five-point quadratic least-squares smoothing. The first and last two
/// points pass through unchanged; sequences shorter than five are returned
/// as they are.
pub fn smooth_rdf(g: &[f64]) -> Vec<f64> {
    let mut out = g.to_vec();
    if g.len() < 5 {
        return out;
    }
    for (n, w) in g.windows(5).enumerate() {
        out[n + 2] = (-3.0 * w[0] + 12.0 * w[1] + 17.0 * w[2] + 12.0 * w[3] - 3.0 * w[4]) / 35.0;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairHistogram {
    n_types: usize,
    nbins: usize,
    rmax: f64,
    dr: f64,
    counts: Vec<u64>,
    frames_used: u64,
    volume_sum: f64,
}

impl PairHistogram {
    pub fn new(n_types: usize, rmax: f64, dr: f64) -> Self {
        let nbins = bin_index(rmax, dr);
        PairHistogram {
            n_types,
            nbins,
            rmax,
            dr,
            counts: vec![0; n_types * n_types * nbins],
            frames_used: 0,
            volume_sum: 0.0,
        }
    }

    pub fn n_types(&self) -> usize {
        self.n_types
    }

    pub fn nbins(&self) -> usize {
        self.nbins
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn rmax(&self) -> f64 {
        self.rmax
    }

    pub fn frames_used(&self) -> u64 {
        self.frames_used
    }

    pub fn volume_sum(&self) -> f64 {
        self.volume_sum
    }

    /// Counts for the 0-based types `a`, `b`; element `n - 1` is bin `n`.
    pub fn counts(&self, a: usize, b: usize) -> &[u64] {
        let start = (a * self.n_types + b) * self.nbins;
        &self.counts[start..start + self.nbins]
    }

    #[inline]
    fn bump(&mut self, a: usize, b: usize, bin: usize) {
        let nb = self.nbins;
        self.counts[(a * self.n_types + b) * nb + bin] += 1;
        self.counts[(b * self.n_types + a) * nb + bin] += 1;
    }

    /// Adds one frame. `centers` pairs a 0-based molecule type with a center
    /// position already wrapped into `cell`.
    pub fn accumulate_frame(&mut self, centers: &[(usize, Vec3)], cell: &CellTensor) {
        let rmax2 = self.rmax * self.rmax;
        if cell.is_periodic() {
            let imcon = cell.imcon();
            let reduced: Vec<Vec3> = centers.iter().map(|&(_, r)| cell.reduce(r).0).collect();
            for i in 0..centers.len() {
                let (ti, si) = (centers[i].0, reduced[i]);
                for j in i + 1..centers.len() {
                    let d = cell.to_real(crate::geometry::ReducedCoords(min_image(reduced[j] - si, imcon)));
                    self.record(ti, centers[j].0, d.norm2(), rmax2);
                }
            }
        } else {
            for i in 0..centers.len() {
                let (ti, ri) = centers[i];
                for &(tj, rj) in &centers[i + 1..] {
                    self.record(ti, tj, (rj - ri).norm2(), rmax2);
                }
            }
        }
        self.volume_sum += cell.volume();
        self.frames_used += 1;
    }

    #[inline]
    fn record(&mut self, a: usize, b: usize, r2: f64, rmax2: f64) {
        if r2 <= rmax2 {
            let r = r2.sqrt();
            if r <= self.rmax {
                let bin = bin_index(r, self.dr) - 1;
                self.bump(a, b, bin);
            }
        }
    }

    fn check_shape(&self, other: &PairHistogram) -> Result<(), RdfError> {
        if self.n_types != other.n_types || self.nbins != other.nbins || self.dr != other.dr || self.rmax != other.rmax {
            return Err(RdfError::ShapeMismatch(format!(
                "{} types x {} bins (dr {}, rmax {}) vs {} types x {} bins (dr {}, rmax {})",
                self.n_types, self.nbins, self.dr, self.rmax, other.n_types, other.nbins, other.dr, other.rmax
            )));
        }
        Ok(())
    }

    pub fn merge_from(&mut self, other: &PairHistogram) -> Result<(), RdfError> {
        self.check_shape(other)?;
        for (c, o) in self.counts.iter_mut().zip(&other.counts) {
            *c += o;
        }
        self.frames_used += other.frames_used;
        self.volume_sum += other.volume_sum;
        Ok(())
    }

    pub fn mean_volume(&self) -> Option<f64> {
        (self.frames_used > 0).then(|| self.volume_sum / self.frames_used as f64)
    }
}

/// Elementwise sum of two histograms with the same shape.
pub fn merge(a: &PairHistogram, b: &PairHistogram) -> Result<PairHistogram, RdfError> {
    let mut out = a.clone();
    out.merge_from(b)?;
    Ok(out)
}

/// Whether distances up to `rmax` can be measured unambiguously in `cell`.
pub fn rmax_is_safe(cell: &CellTensor, rmax: f64) -> bool {
    rmax <= cell.min_image_radius()
}

/// Turns accumulated counts into `g(r)` and cumulative populations for every
/// pair of molecule types that carry mass.
pub fn finalize(hist: &PairHistogram, topology: &Topology, smooth: bool) -> Result<RdfTable, RdfError> {
    if topology.n_types() != hist.n_types {
        return Err(RdfError::ShapeMismatch(format!(
            "topology has {} molecule types, histogram {}",
            topology.n_types(),
            hist.n_types
        )));
    }
    let frames = hist.frames_used;
    if frames == 0 {
        return Err(RdfError::NoFrames);
    }
    let mean_volume = hist.volume_sum / frames as f64;
    if !(mean_volume > 0.0) {
        return Err(RdfError::ZeroVolume);
    }

    let mut included = Vec::new();
    for (i, mol) in topology.molecules.iter().enumerate() {
        if mol.total_mass() > 0.0 {
            included.push(i + 1);
        } else {
            warn!(
                "molecule type {} ('{}') has zero total mass and is left out of RDF and POP",
                i + 1,
                mol.name
            );
        }
    }

    let dr = hist.dr;
    let shells: Vec<f64> = (1..=hist.nbins).map(|n| shell_volume(n, dr, hist.rmax)).collect();
    let pair_labels = pair_order(&included);
    let mut g = Vec::with_capacity(pair_labels.len());
    let mut pop = Vec::with_capacity(pair_labels.len());
    for &(a, b) in &pair_labels {
        let n_a = topology.molecules[a - 1].count as f64;
        let rho_b = topology.molecules[b - 1].count as f64 / mean_volume;
        let per_molecule: Vec<f64> = hist
            .counts(a - 1, b - 1)
            .iter()
            .map(|&c| c as f64 / (frames as f64 * n_a))
            .collect();
        let mut column: Vec<f64> = per_molecule
            .iter()
            .zip(&shells)
            .map(|(&h, &v)| if v > 0.0 { h / (v * rho_b) } else { 0.0 })
            .collect();
        if smooth {
            column = smooth_rdf(&column).into_iter().map(|x| x.max(0.0)).collect();
        }
        g.push(column);
        pop.push(
            per_molecule
                .iter()
                .scan(0.0, |acc, &h| {
                    *acc += h;
                    Some(*acc)
                })
                .collect(),
        );
    }

    Ok(RdfTable {
        bin_centers: (0..hist.nbins).map(|k| k as f64 * dr).collect(),
        pair_labels,
        g,
        pop,
        mean_volume,
        frames_used: frames,
    })
}
