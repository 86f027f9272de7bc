//! Analysis driver: read `CONTROL`, `FIELD` and `HISTORY` from a directory,
//! turn every selected frame into molecular centers, and write `RDF` and
//! `POP` next to them.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use log::{info, warn};
use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::Vec3;
use crate::rdf_engine::{finalize, rmax_is_safe, PairHistogram, RdfError};
use crate::trajectory_io::{
    open_history, parse_directives, parse_field, write_pop, write_rdf, Directives, Frame, FrameRead,
    ParseError, RdfTable, Topology,
};
use crate::unfolding::{center_of_mass_of, unfold_in_place, UnfoldError, DEFAULT_TOL};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("input file {0} not found")]
    MissingInput(PathBuf),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("configuration {frame}, molecule '{molecule}' #{index}: {source}")]
    Unfold {
        frame: u64,
        molecule: String,
        index: usize,
        #[source]
        source: UnfoldError,
    },
    #[error("no usable configurations: {frames_read} read, selection is {start}..={stop}")]
    NoFrames { frames_read: u64, start: u64, stop: u64 },
    #[error(transparent)]
    Rdf(#[from] RdfError),
}

impl RunError {
    /// 2 when nothing could be analyzed, 1 for every other failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::NoFrames { .. } | RunError::Rdf(RdfError::NoFrames) => 2,
            _ => 1,
        }
    }
}

/// Where to find the inputs and put the outputs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dir: PathBuf,
    pub control: String,
    pub field: String,
    pub history: String,
    pub rdf: String,
    pub pop: String,
    /// Fan frames out over worker threads. Results may then differ from a
    /// sequential run in the last bits of the mean volume.
    pub parallel: bool,
}

impl RunConfig {
    pub fn in_dir(dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            dir: dir.into(),
            control: "CONTROL".into(),
            field: "FIELD".into(),
            history: "HISTORY".into(),
            rdf: "RDF".into(),
            pop: "POP".into(),
            parallel: false,
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct AnalysisOptions {
    pub parallel: bool,
    pub tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Analysis {
    pub table: RdfTable,
    /// Complete configurations in the trajectory.
    pub frames_read: u64,
    pub frames_used: u64,
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub directives: Directives,
    pub analysis: Analysis,
    pub rdf_path: PathBuf,
    pub pop_path: PathBuf,
}

/// Where the sites of one molecule live in a frame.
struct MoleculeSlot {
    type_index: usize,
    first_site: usize,
}

struct Layout<'a> {
    topology: &'a Topology,
    slots: Vec<MoleculeSlot>,
    masses: Vec<Vec<f64>>,
    tol: f64,
}

impl<'a> Layout<'a> {
    fn new(topology: &'a Topology, tol: f64) -> Self {
        let mut slots = Vec::new();
        let mut site = 0;
        for (t, mol) in topology.molecules.iter().enumerate() {
            let massive = mol.total_mass() > 0.0;
            for _ in 0..mol.count {
                // Massless types have no center; they are skipped here and
                // reported when the table is finalized.
                if massive {
                    slots.push(MoleculeSlot {
                        type_index: t,
                        first_site: site,
                    });
                }
                site += mol.sites.len();
            }
        }
        Layout {
            topology,
            slots,
            masses: topology.molecules.iter().map(|m| m.masses()).collect(),
            tol,
        }
    }

    fn centers(&self, frame: &Frame, index: u64) -> Result<Vec<(usize, Vec3)>, RunError> {
        let mut scratch = Vec::new();
        let mut out = Vec::with_capacity(self.slots.len());
        let mut seen = vec![0usize; self.masses.len()];
        for slot in &self.slots {
            let masses = &self.masses[slot.type_index];
            scratch.clear();
            scratch.extend_from_slice(&frame.positions[slot.first_site..slot.first_site + masses.len()]);
            seen[slot.type_index] += 1;
            unfold_in_place(&mut scratch, &frame.cell, self.tol).map_err(|source| RunError::Unfold {
                frame: index,
                molecule: self.topology.molecules[slot.type_index].name.clone(),
                index: seen[slot.type_index],
                source,
            })?;
            let com = center_of_mass_of(&scratch, masses).expect("slots only hold massive types");
            out.push((slot.type_index, frame.cell.wrap_point(com)));
        }
        Ok(out)
    }
}

/// Runs the collection and averaging stages over a trajectory stream.
pub fn analyze<R: BufRead>(
    topology: &Topology,
    directives: &Directives,
    history: R,
    options: &AnalysisOptions,
) -> Result<Analysis, RunError> {
    let layout = Layout::new(topology, options.tol.unwrap_or(DEFAULT_TOL));
    let mut reader = open_history(history, Some(topology.total_sites()))?;
    let empty = || PairHistogram::new(topology.n_types(), directives.rmax, directives.dr);
    let mut hist = empty();
    let mut warned_rmax = false;
    let mut batch: Vec<(u64, Frame)> = Vec::new();
    const BATCH: usize = 64;

    let flush = |batch: &mut Vec<(u64, Frame)>, hist: &mut PairHistogram| -> Result<(), RunError> {
        let part = batch
            .par_iter()
            .try_fold(empty, |mut h, (k, frame)| {
                h.accumulate_frame(&layout.centers(frame, *k)?, &frame.cell);
                Ok::<_, RunError>(h)
            })
            .try_reduce(empty, |mut a, b| {
                a.merge_from(&b)?;
                Ok(a)
            })?;
        hist.merge_from(&part)?;
        batch.clear();
        Ok(())
    };

    let truncated = loop {
        let frame = match reader.next_frame()? {
            FrameRead::Frame(f) => f,
            FrameRead::End => break false,
            FrameRead::Truncated => break true,
        };
        let k = reader.frames_read();
        if !directives.selects(k) {
            continue;
        }
        if !warned_rmax && !rmax_is_safe(&frame.cell, directives.rmax) {
            warn!(
                "rmax {} exceeds the minimum-image radius {:.4} of configuration {k}; \
                 distances beyond it are undercounted",
                directives.rmax,
                frame.cell.min_image_radius()
            );
            warned_rmax = true;
        }
        if options.parallel {
            batch.push((k, frame));
            if batch.len() == BATCH {
                flush(&mut batch, &mut hist)?;
            }
        } else {
            hist.accumulate_frame(&layout.centers(&frame, k)?, &frame.cell);
        }
    };
    if !batch.is_empty() {
        flush(&mut batch, &mut hist)?;
    }

    let frames_read = reader.frames_read();
    if truncated {
        warn!("the trajectory was abnormally terminated after {frames_read} complete configurations");
    }
    if hist.frames_used() == 0 {
        return Err(RunError::NoFrames {
            frames_read,
            start: directives.start,
            stop: directives.stop,
        });
    }
    let table = finalize(&hist, topology, directives.smooth)?;
    Ok(Analysis {
        frames_used: table.frames_used,
        table,
        frames_read,
        truncated,
    })
}

fn read_input(path: &Path) -> Result<String, RunError> {
    if !path.exists() {
        return Err(RunError::MissingInput(path.to_path_buf()));
    }
    fs::read_to_string(path).map_err(|source| RunError::Read {
        path: path.to_path_buf(),
        source,
    })
}

fn write_output(
    path: &Path,
    table: &RdfTable,
    writer: fn(&RdfTable, &mut BufWriter<File>) -> io::Result<()>,
) -> Result<(), RunError> {
    let err = |source| RunError::Write {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(err)?);
    writer(table, &mut out).and_then(|_| out.flush()).map_err(err)
}

/// Full analysis of the files named by `config`.
pub fn run(config: &RunConfig) -> Result<RunSummary, RunError> {
    let history_path = config.path(&config.history);
    let control = read_input(&config.path(&config.control))?;
    let field = read_input(&config.path(&config.field))?;
    if !history_path.exists() {
        return Err(RunError::MissingInput(history_path));
    }

    let directives = parse_directives(&control)?;
    let topology = parse_field(&field)?;
    info!(
        "{} molecule types, {} sites per configuration; dr {} A, rmax {} A{}",
        topology.n_types(),
        topology.total_sites(),
        directives.dr,
        directives.rmax,
        if directives.smooth { ", smoothing on" } else { "" }
    );

    let history = File::open(&history_path).map_err(|source| RunError::Read {
        path: history_path.clone(),
        source,
    })?;
    let options = AnalysisOptions {
        parallel: config.parallel,
        tol: None,
    };
    let analysis = analyze(&topology, &directives, BufReader::new(history), &options)?;

    let rdf_path = config.path(&config.rdf);
    let pop_path = config.path(&config.pop);
    write_output(&rdf_path, &analysis.table, write_rdf)?;
    write_output(&pop_path, &analysis.table, write_pop)?;
    info!(
        "{} configurations read, {} used, mean volume {:.6} A^3",
        analysis.frames_read, analysis.frames_used, analysis.table.mean_volume
    );

    Ok(RunSummary {
        directives,
        analysis,
        rdf_path,
        pop_path,
    })
}
