//! Rebuilding molecules split across periodic images, without connectivity.
//!
//! Each site `i` is compared with the site before it in declaration order.
//! When their reduced separation `b` differs from its minimum image `d`, the
//! site is moved to the image next to its predecessor. Sweeps repeat until
//! one makes no change. This is valid as long as every molecule is smaller
//! than half the shortest periodic cell width.

use thiserror::Error;

use crate::geometry::{nint, CellTensor, Vec3};

/// Default threshold on `|b² - d²|`, in squared reduced units.
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum UnfoldError {
    #[error("unfolding did not settle after {sweeps} sweeps over {sites} sites; the molecule is too large for the cell")]
    NotConverged { sweeps: usize, sites: usize },
    #[error("molecule has no sites")]
    Empty,
    #[error("site and mass lists differ in length ({positions} vs {masses})")]
    LengthMismatch { positions: usize, masses: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeSnapshot {
    pub positions: Vec<Vec3>,
    /// Site masses in amu, aligned with `positions`.
    pub masses: Vec<f64>,
}

impl MoleculeSnapshot {
    pub fn new(positions: Vec<Vec3>, masses: Vec<f64>) -> Result<Self, UnfoldError> {
        if positions.len() != masses.len() {
            return Err(UnfoldError::LengthMismatch {
                positions: positions.len(),
                masses: masses.len(),
            });
        }
        if positions.is_empty() {
            return Err(UnfoldError::Empty);
        }
        Ok(MoleculeSnapshot { positions, masses })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Unfolded {
    pub molecule: MoleculeSnapshot,
    /// Sweeps performed, the last of which changed nothing.
    pub sweeps: usize,
}

/// Unfolds `positions` in place and returns the number of sweeps.
///
/// Sites are only ever moved by whole lattice vectors, and a site that needs
/// no move keeps its input coordinates bit for bit.
pub fn unfold_in_place(positions: &mut [Vec3], cell: &CellTensor, tol: f64) -> Result<usize, UnfoldError> {
    let n = positions.len();
    if n == 0 {
        return Err(UnfoldError::Empty);
    }
    if !cell.is_periodic() {
        return Ok(0);
    }
    let periodic = cell.imcon().periodic_mask();
    let reduced: Vec<Vec3> = positions.iter().map(|&r| cell.reduce(r).0).collect();
    // Integer image shift applied to each site, kept as exact small floats.
    let mut shifts = vec![Vec3::ZERO; n];

    let limit = n + 2;
    let mut sweeps = 0;
    loop {
        sweeps += 1;
        let mut folded = false;
        for i in 1..n {
            let b = (reduced[i] + shifts[i]) - (reduced[i - 1] + shifts[i - 1]);
            let mut image = Vec3::ZERO;
            if periodic[0] {
                image.x = nint(b.x);
            }
            if periodic[1] {
                image.y = nint(b.y);
            }
            if periodic[2] {
                image.z = nint(b.z);
            }
            let d = b - image;
            if (b.norm2() - d.norm2()).abs() > tol {
                shifts[i] -= image;
                folded = true;
            }
        }
        if !folded {
            break;
        }
        if sweeps >= limit {
            return Err(UnfoldError::NotConverged { sweeps, sites: n });
        }
    }

    for (r, k) in positions.iter_mut().zip(&shifts) {
        if *k != Vec3::ZERO {
            *r += cell.lattice_translation(k.x, k.y, k.z);
        }
    }
    Ok(sweeps)
}

pub fn unfold_molecule(mol: &MoleculeSnapshot, cell: &CellTensor, tol: f64) -> Result<Unfolded, UnfoldError> {
    let mut positions = mol.positions.clone();
    let sweeps = unfold_in_place(&mut positions, cell, tol)?;
    Ok(Unfolded {
        molecule: MoleculeSnapshot {
            positions,
            masses: mol.masses.clone(),
        },
        sweeps,
    })
}

/// `Σ m_i r_i / Σ m_i`, or `None` when the total mass is zero. With a
/// single massive site the result is that site's position exactly.
pub fn center_of_mass_of(positions: &[Vec3], masses: &[f64]) -> Option<Vec3> {
    let total: f64 = masses.iter().sum();
    if total == 0.0 {
        return None;
    }
    let mut massive = masses.iter().enumerate().filter(|(_, &m)| m != 0.0);
    if let (Some((i, _)), None) = (massive.next(), massive.next()) {
        return Some(positions[i]);
    }
    let weighted = positions
        .iter()
        .zip(masses)
        .filter(|(_, &m)| m != 0.0)
        .fold(Vec3::ZERO, |acc, (&r, &m)| acc + r * m);
    Some(weighted * (1.0 / total))
}

pub fn center_of_mass(mol: &MoleculeSnapshot) -> Option<Vec3> {
    center_of_mass_of(&mol.positions, &mol.masses)
}

/// Center of mass of the unfolded molecule, wrapped back into the cell.
pub fn molecule_com_wrapped(
    mol: &MoleculeSnapshot,
    cell: &CellTensor,
    tol: f64,
) -> Result<Option<Vec3>, UnfoldError> {
    let unfolded = unfold_molecule(mol, cell, tol)?;
    Ok(center_of_mass(&unfolded.molecule).map(|c| cell.wrap_point(c)))
}
