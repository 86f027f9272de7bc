//! Synthetic validation data: two rigid molecules of random shape whose
//! centers of mass sit a fixed distance apart, tumbling at random.
//!
//! Every site is wrapped into the cell on its own, so the molecules arrive
//! fragmented across periodic images and the analysis has to rebuild them.
//! A correct analysis yields a single RDF spike in the bin holding the
//! separation.
//!
//! Randomness comes from a ChaCha8 stream seeded with the configured seed,
//! so a given configuration always produces byte-identical files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{CellTensor, ImageConvention, Vec3};
use crate::rdf_engine::bin_index;
use crate::trajectory_io::{
    write_field, write_history_frame, write_history_header, Directives, Frame, MoleculeSpec, SiteSpec,
    Topology,
};

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("invalid synthetic configuration: {0}")]
    Config(String),
    #[error("failed to write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    /// Sites per molecule.
    pub n_sites: usize,
    /// Radius of the sphere the sites are drawn in, Å.
    pub radius: f64,
    /// Separation of the two centers of mass, Å.
    pub distance: f64,
    /// Edge of the cubic cell, Å.
    pub cell_length: f64,
    pub n_frames: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_sites: 8,
            radius: 3.0,
            distance: 5.0,
            cell_length: 30.0,
            n_frames: 2000,
            seed: 1,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), SyntheticError> {
        let bad = |m: String| Err(SyntheticError::Config(m));
        if self.n_sites == 0 {
            return bad("at least one site per molecule is needed".into());
        }
        if self.n_frames == 0 {
            return bad("at least one frame is needed".into());
        }
        if !(self.radius >= 0.0 && self.radius.is_finite()) {
            return bad(format!("radius must be finite and non-negative, got {}", self.radius));
        }
        if !(self.distance >= 0.0 && self.distance.is_finite()) {
            return bad(format!("distance must be finite and non-negative, got {}", self.distance));
        }
        if !(self.cell_length > 0.0 && self.cell_length.is_finite()) {
            return bad(format!("cell length must be positive, got {}", self.cell_length));
        }
        if self.distance + 2.0 * self.radius >= 0.5 * self.cell_length {
            return bad(format!(
                "distance + 2 * radius ({}) must stay below half the cell length ({})",
                self.distance + 2.0 * self.radius,
                0.5 * self.cell_length
            ));
        }
        Ok(())
    }

    /// Directives written into the generated `CONTROL` file.
    pub fn directives(&self) -> Directives {
        let defaults = Directives::default();
        Directives {
            rmax: defaults.rmax.min(0.5 * self.cell_length),
            ..defaults
        }
    }

    /// 1-based bin where the analysis should put the spike.
    pub fn expected_bin(&self) -> usize {
        bin_index(self.distance, self.directives().dr)
    }

    fn cell(&self) -> CellTensor {
        CellTensor::cubic(self.cell_length).expect("validated cell length")
    }
}

/// Two molecule types with one molecule each, plus per-type site offsets
/// from the center of mass.
pub fn gen_topology(cfg: &SyntheticConfig, rng: &mut ChaCha8Rng) -> (Topology, Vec<Vec<Vec3>>) {
    let mut molecules = Vec::with_capacity(2);
    let mut offsets = Vec::with_capacity(2);
    for name in ["RandomA", "RandomB"] {
        let masses: Vec<f64> = (0..cfg.n_sites).map(|_| rng.gen_range(1.0..=20.0)).collect();
        let mut sites: Vec<Vec3> = (0..cfg.n_sites).map(|_| random_in_ball(rng) * cfg.radius).collect();
        if cfg.n_sites == 1 {
            sites[0] = Vec3::ZERO;
        } else {
            let total: f64 = masses.iter().sum();
            let com = sites
                .iter()
                .zip(&masses)
                .fold(Vec3::ZERO, |acc, (&r, &m)| acc + r * m)
                * (1.0 / total);
            for s in &mut sites {
                *s -= com;
            }
        }
        molecules.push(MoleculeSpec {
            name: name.to_string(),
            count: 1,
            sites: masses
                .iter()
                .enumerate()
                .map(|(i, &mass)| SiteSpec {
                    name: format!("S{}", i + 1),
                    mass,
                    charge: 0.0,
                    frozen: 0,
                })
                .collect(),
        });
        offsets.push(sites);
    }
    (Topology { molecules }, offsets)
}

fn random_in_ball(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if v.norm2() <= 1.0 {
            return v;
        }
    }
}

fn random_unit_vector(rng: &mut ChaCha8Rng) -> Vec3 {
    let z: f64 = rng.gen_range(-1.0..=1.0);
    let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let rho = (1.0 - z * z).max(0.0).sqrt();
    Vec3::new(rho * phi.cos(), rho * phi.sin(), z)
}

/// Rotation matrix rows for a uniformly distributed unit quaternion
/// (Shoemake's subgroup algorithm).
pub fn random_rotation(rng: &mut ChaCha8Rng) -> [Vec3; 3] {
    let u1: f64 = rng.gen();
    let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let u3: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
    let (a, b) = ((1.0 - u1).sqrt(), u1.sqrt());
    let (w, x, y, z) = (a * u2.sin(), a * u2.cos(), b * u3.sin(), b * u3.cos());
    [
        Vec3::new(1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)),
        Vec3::new(2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)),
        Vec3::new(2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)),
    ]
}

fn rotate(m: &[Vec3; 3], v: Vec3) -> Vec3 {
    Vec3::new(m[0].dot(v), m[1].dot(v), m[2].dot(v))
}

/// One generated configuration with its pre-wrap ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticFrame {
    pub step: u64,
    pub cell: CellTensor,
    /// Whole molecules, before any wrapping.
    pub unwrapped: Vec<Vec3>,
    /// Each site wrapped into the cell independently; this is what gets written.
    pub wrapped: Vec<Vec3>,
    pub centers: [Vec3; 2],
}

/// Generator state: the topology is drawn first, then frames one by one
/// from the same random stream.
pub struct SyntheticSystem {
    pub config: SyntheticConfig,
    pub topology: Topology,
    pub offsets: Vec<Vec<Vec3>>,
    rng: ChaCha8Rng,
    next_step: u64,
}

impl SyntheticSystem {
    pub fn new(config: SyntheticConfig) -> Result<Self, SyntheticError> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let (topology, offsets) = gen_topology(&config, &mut rng);
        Ok(SyntheticSystem {
            config,
            topology,
            offsets,
            rng,
            next_step: 1,
        })
    }

    pub fn next_frame(&mut self) -> SyntheticFrame {
        let cell = self.config.cell();
        // Center of the [0, L)^3 box, which is a corner of the origin-centered
        // cell, so wrapping splits the first molecule in every frame.
        let half = 0.5 * self.config.cell_length;
        let first = Vec3::new(half, half, half);
        let second = first + random_unit_vector(&mut self.rng) * self.config.distance;
        let centers = [first, second];

        let mut unwrapped = Vec::with_capacity(2 * self.config.n_sites);
        for (center, offsets) in centers.iter().zip(&self.offsets) {
            let rotation = random_rotation(&mut self.rng);
            unwrapped.extend(offsets.iter().map(|&o| *center + rotate(&rotation, o)));
        }
        let wrapped = unwrapped.iter().map(|&r| cell.wrap_point(r)).collect();
        let step = self.next_step;
        self.next_step += 1;
        SyntheticFrame {
            step,
            cell,
            unwrapped,
            wrapped,
            centers,
        }
    }

    pub fn write_field<W: Write>(&self, out: &mut W) -> io::Result<()> {
        write_field(&self.topology, "synthetic pair of random molecules", out)
    }

    pub fn write_control<W: Write>(&self, out: &mut W) -> io::Result<()> {
        let d = self.config.directives();
        writeln!(out, "synthetic pair of random molecules, seed {}", self.config.seed)?;
        writeln!(out, "steps {}", self.config.n_frames)?;
        writeln!(out, "finish")?;
        writeln!(out)?;
        writeln!(out, "polyana")?;
        writeln!(out, "  rmax {}", d.rmax)?;
        writeln!(out, "  dr {}", d.dr)?;
        writeln!(out, "end polyana")
    }

    /// Writes a headered trajectory with all configured frames, consuming
    /// the remaining random stream.
    pub fn write_history<W: Write>(&mut self, out: &mut W) -> io::Result<()> {
        let natoms = self.topology.total_sites();
        write_history_header(
            out,
            &format!("synthetic pair of random molecules, distance {}", self.config.distance),
            0,
            ImageConvention::Cubic,
            natoms,
        )?;
        for _ in 0..self.config.n_frames {
            let f = self.next_frame();
            let frame = Frame {
                step: f.step,
                cell: f.cell,
                positions: f.wrapped,
            };
            write_history_frame(out, &frame, &self.topology, 0.001, None, None)?;
        }
        Ok(())
    }
}

/// Paths of the files written by [`gen_trajectory`].
#[derive(Debug, Clone)]
pub struct GeneratedFiles {
    pub control: PathBuf,
    pub field: PathBuf,
    pub history: PathBuf,
    pub expected_bin: usize,
}

/// Writes `CONTROL`, `FIELD` and `HISTORY` for `cfg` into `dir`.
pub fn gen_trajectory(cfg: &SyntheticConfig, dir: &Path) -> Result<GeneratedFiles, SyntheticError> {
    let mut system = SyntheticSystem::new(cfg.clone())?;
    let create = |name: &str| -> Result<(PathBuf, BufWriter<File>), SyntheticError> {
        let path = dir.join(name);
        let file = File::create(&path).map_err(|source| SyntheticError::Io {
            path: path.clone(),
            source,
        })?;
        Ok((path, BufWriter::new(file)))
    };
    let io_err = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SyntheticError::Io { path, source }
    };

    let (control, mut w) = create("CONTROL")?;
    system.write_control(&mut w).and_then(|_| w.flush()).map_err(io_err(&control))?;
    let (field, mut w) = create("FIELD")?;
    system.write_field(&mut w).and_then(|_| w.flush()).map_err(io_err(&field))?;
    let (history, mut w) = create("HISTORY")?;
    system.write_history(&mut w).and_then(|_| w.flush()).map_err(io_err(&history))?;

    Ok(GeneratedFiles {
        control,
        field,
        history,
        expected_bin: cfg.expected_bin(),
    })
}
