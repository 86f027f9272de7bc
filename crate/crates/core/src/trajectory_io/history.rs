//! Streaming reader for DL_POLY Classic `HISTORY` trajectories.
//!
//! Layout of a formatted trajectory:
//!
//! ```text
//! <title>                                    optional header, two lines
//! levcfg imcon natoms
//! timestep nstep natoms keytrj imcon tstep   one per frame
//! ax ay az                                   cell rows, only when imcon > 0
//! bx by bz
//! cx cy cz
//! name index mass charge                     per site
//! x y z
//! vx vy vz                                   keytrj >= 1
//! fx fy fz                                   keytrj >= 2
//! ```
//!
//! A run restarted after the old file was moved away produces a file without
//! the header; both forms are accepted. A file cut off mid-frame ends the
//! stream with [`FrameRead::Truncated`] and every earlier frame stays valid.

use std::io::{self, BufRead, Write};

use crate::geometry::{CellTensor, ImageConvention, Vec3};

use super::{parse_real, ParseError, Topology};

/// One stored configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub step: u64,
    pub cell: CellTensor,
    /// One position per site, in `FIELD` declaration order.
    pub positions: Vec<Vec3>,
}

impl Frame {
    pub fn natoms(&self) -> usize {
        self.positions.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FrameRead {
    Frame(Frame),
    /// Clean end of the trajectory.
    End,
    /// The file ended (or turned unreadable) inside a frame. Also reported
    /// for an empty file.
    Truncated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistoryHeader {
    pub title: String,
    pub levcfg: i64,
    pub imcon: i64,
    pub natoms: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Reading,
    Done(bool),
}

pub struct HistoryReader<R> {
    source: R,
    line: String,
    lineno: usize,
    pending: bool,
    header: Option<HistoryHeader>,
    expected_natoms: Option<usize>,
    frames_read: u64,
    state: State,
}

// Outcome of parsing a record inside a frame: `None` means truncation.
type Partial<T> = Result<Option<T>, ParseError>;

/// Opens a trajectory stream, consuming the header if there is one.
///
/// `expected_natoms` is the site count from `FIELD`; every frame (and the
/// header) must agree with it.
pub fn open_history<R: BufRead>(
    source: R,
    expected_natoms: Option<usize>,
) -> Result<HistoryReader<R>, ParseError> {
    let mut reader = HistoryReader {
        source,
        line: String::new(),
        lineno: 0,
        pending: false,
        header: None,
        expected_natoms,
        frames_read: 0,
        state: State::Reading,
    };

    if !reader.next_line()? {
        reader.state = State::Done(true);
        return Ok(reader);
    }
    if first_token_is_timestep(&reader.line) {
        reader.pending = true;
        return Ok(reader);
    }

    let title = reader.line.trim().to_string();
    let title_line = reader.lineno;
    let bad_start = |line: usize| ParseError::Syntax {
        file: "HISTORY",
        line,
        message: "file starts with neither a header nor a 'timestep' record".into(),
    };
    if !reader.next_line()? {
        return Err(bad_start(title_line));
    }
    let ints: Vec<i64> = reader
        .line
        .split_whitespace()
        .map_while(|t| t.parse().ok())
        .collect();
    if ints.len() < 3 || ints[2] < 0 {
        return Err(bad_start(reader.lineno));
    }
    let header = HistoryHeader {
        title,
        levcfg: ints[0],
        imcon: ints[1],
        natoms: ints[2] as usize,
    };
    if let Some(expected) = expected_natoms {
        if header.natoms != expected {
            return Err(ParseError::AtomCount {
                frame: 0,
                found: header.natoms,
                expected,
            });
        }
    }
    reader.header = Some(header);

    if !reader.next_line()? {
        reader.state = State::Done(false);
    } else if first_token_is_timestep(&reader.line) {
        reader.pending = true;
    } else {
        return Err(ParseError::Syntax {
            file: "HISTORY",
            line: reader.lineno,
            message: "expected a 'timestep' record after the header".into(),
        });
    }
    Ok(reader)
}

fn first_token_is_timestep(line: &str) -> bool {
    line.split_whitespace()
        .next()
        .is_some_and(|t| t.eq_ignore_ascii_case("timestep"))
}

fn three_reals(line: &str) -> Option<Vec3> {
    let mut it = line.split_whitespace();
    let x = parse_real(it.next()?)?;
    let y = parse_real(it.next()?)?;
    let z = parse_real(it.next()?)?;
    Some(Vec3::new(x, y, z))
}

impl<R: BufRead> HistoryReader<R> {
    pub fn header(&self) -> Option<&HistoryHeader> {
        self.header.as_ref()
    }

    /// Complete frames returned so far.
    pub fn frames_read(&self) -> u64 {
        self.frames_read
    }

    /// `Some(true)` once the stream has ended abnormally, `Some(false)` after
    /// a clean end, `None` while frames may remain.
    pub fn truncated(&self) -> Option<bool> {
        match self.state {
            State::Reading => None,
            State::Done(t) => Some(t),
        }
    }

    /// Loads the next non-blank line into `self.line`. Returns `false` at EOF.
    fn next_line(&mut self) -> Result<bool, ParseError> {
        if self.pending {
            self.pending = false;
            return Ok(true);
        }
        loop {
            self.line.clear();
            if self.source.read_line(&mut self.line)? == 0 {
                return Ok(false);
            }
            self.lineno += 1;
            if !self.line.trim().is_empty() {
                return Ok(true);
            }
        }
    }

    fn vector_line(&mut self) -> Partial<Vec3> {
        if !self.next_line()? {
            return Ok(None);
        }
        Ok(three_reals(&self.line))
    }

    pub fn next_frame(&mut self) -> Result<FrameRead, ParseError> {
        if let State::Done(truncated) = self.state {
            return Ok(if truncated { FrameRead::Truncated } else { FrameRead::End });
        }
        if !self.next_line()? {
            // A header with no frames after it is an empty but well-formed file.
            let truncated = self.frames_read == 0 && self.header.is_none();
            self.state = State::Done(truncated);
            return self.next_frame();
        }
        match self.read_frame_body()? {
            Some(frame) => {
                self.frames_read += 1;
                Ok(FrameRead::Frame(frame))
            }
            None => {
                self.state = State::Done(true);
                Ok(FrameRead::Truncated)
            }
        }
    }

    fn read_frame_body(&mut self) -> Partial<Frame> {
        let timestep_line = self.lineno;
        let tokens: Vec<&str> = self.line.split_whitespace().collect();
        if tokens.len() < 5 || !tokens[0].eq_ignore_ascii_case("timestep") {
            return Ok(None);
        }
        let (Ok(step), Ok(natoms), Ok(keytrj), Ok(imcon)) = (
            tokens[1].parse::<u64>(),
            tokens[2].parse::<usize>(),
            tokens[3].parse::<u8>(),
            tokens[4].parse::<i64>(),
        ) else {
            return Ok(None);
        };
        if let Some(expected) = self.expected_natoms {
            if natoms != expected {
                return Err(ParseError::AtomCount {
                    frame: self.frames_read + 1,
                    found: natoms,
                    expected,
                });
            }
        }
        let convention = ImageConvention::from_code(imcon).map_err(|source| ParseError::Cell {
            line: timestep_line,
            source,
        })?;

        let cell = if convention == ImageConvention::None {
            CellTensor::open()
        } else {
            let mut rows = [Vec3::ZERO; 3];
            for row in &mut rows {
                match self.vector_line()? {
                    Some(v) => *row = v,
                    None => return Ok(None),
                }
            }
            CellTensor::new(rows[0], rows[1], rows[2], convention).map_err(|source| {
                ParseError::Cell {
                    line: timestep_line,
                    source,
                }
            })?
        };

        let mut positions = Vec::with_capacity(natoms);
        for _ in 0..natoms {
            // Site record: name, index, mass, charge. Masses come from FIELD.
            if !self.next_line()? || first_token_is_timestep(&self.line) {
                return Ok(None);
            }
            match self.vector_line()? {
                Some(r) => positions.push(r),
                None => return Ok(None),
            }
            for _ in 0..keytrj.min(2) {
                if self.vector_line()?.is_none() {
                    return Ok(None);
                }
            }
        }
        Ok(Some(Frame {
            step,
            cell,
            positions,
        }))
    }
}

/// Writes the two-line trajectory header.
pub fn write_history_header<W: Write>(
    out: &mut W,
    title: &str,
    keytrj: u8,
    imcon: ImageConvention,
    natoms: usize,
) -> io::Result<()> {
    writeln!(out, "{title}")?;
    writeln!(out, "{:10}{:10}{:10}", keytrj, imcon.code(), natoms)
}

/// Writes one frame. Velocities are written when given (`keytrj = 1`), and
/// forces when both are given (`keytrj = 2`). Site names, masses and charges
/// are taken from `topology`.
pub fn write_history_frame<W: Write>(
    out: &mut W,
    frame: &Frame,
    topology: &Topology,
    tstep: f64,
    velocities: Option<&[Vec3]>,
    forces: Option<&[Vec3]>,
) -> io::Result<()> {
    let keytrj = match (velocities, forces) {
        (None, _) => 0,
        (Some(_), None) => 1,
        (Some(_), Some(_)) => 2,
    };
    let imcon = frame.cell.imcon();
    writeln!(
        out,
        "timestep{:10}{:10}{:10}{:10}{:12.6}",
        frame.step,
        frame.positions.len(),
        keytrj,
        imcon.code(),
        tstep
    )?;
    if imcon != ImageConvention::None {
        for row in [frame.cell.a(), frame.cell.b(), frame.cell.c()] {
            writeln!(out, "{:20.12}{:20.12}{:20.12}", row.x, row.y, row.z)?;
        }
    }
    let sites = topology
        .molecules
        .iter()
        .flat_map(|m| std::iter::repeat_n(&m.sites, m.count).flatten());
    let vector = |out: &mut W, v: Vec3| writeln!(out, "{:20.12}{:20.12}{:20.12}", v.x, v.y, v.z);
    for (i, (site, &r)) in sites.zip(&frame.positions).enumerate() {
        writeln!(out, "{:<8}{:10}{:12.6}{:12.6}", site.name, i + 1, site.mass, site.charge)?;
        vector(out, r)?;
        if keytrj >= 1 {
            vector(out, velocities.map_or(Vec3::ZERO, |v| v[i]))?;
        }
        if keytrj >= 2 {
            vector(out, forces.map_or(Vec3::ZERO, |f| f[i]))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory_io::parse_field;

    const FIELD: &str = "MOLECULES 1\nDimer\nNUMMOLS 2\nATOMS 2\nA 1.0 0.0\nB 2.0 0.0\nFINISH\n";

    fn frames() -> Vec<Frame> {
        let cell = CellTensor::cubic(20.0).unwrap();
        (0..3)
            .map(|k| Frame {
                step: 100 * (k + 1),
                cell,
                positions: (0..4)
                    .map(|i| Vec3::new(i as f64 + 0.25 * k as f64, -1.5 * i as f64, 0.123456789))
                    .collect(),
            })
            .collect()
    }

    fn write(header: bool, keytrj: u8) -> String {
        let topo = parse_field(FIELD).unwrap();
        let mut out = Vec::new();
        if header {
            write_history_header(&mut out, "test trajectory", keytrj, ImageConvention::Cubic, 4).unwrap();
        }
        let junk: Vec<Vec3> = (0..4).map(|i| Vec3::new(9.0, i as f64, -7.0)).collect();
        for f in frames() {
            let v = (keytrj >= 1).then_some(junk.as_slice());
            let g = (keytrj >= 2).then_some(junk.as_slice());
            write_history_frame(&mut out, &f, &topo, 0.001, v, g).unwrap();
        }
        String::from_utf8(out).unwrap()
    }

    fn read_all(text: &str, natoms: Option<usize>) -> Result<(Vec<Frame>, FrameRead), ParseError> {
        let mut reader = open_history(text.as_bytes(), natoms)?;
        let mut out = Vec::new();
        loop {
            match reader.next_frame()? {
                FrameRead::Frame(f) => out.push(f),
                end => return Ok((out, end)),
            }
        }
    }

    #[test]
    fn headered_and_headerless_agree() {
        let (with, end) = read_all(&write(true, 0), Some(4)).unwrap();
        assert_eq!(end, FrameRead::End);
        assert_eq!(with, frames());
        assert_eq!(with[0].step, 100);
        let (without, end) = read_all(&write(false, 0), Some(4)).unwrap();
        assert_eq!(end, FrameRead::End);
        assert_eq!(with, without);
    }

    #[test]
    fn header_is_exposed() {
        let text = write(true, 0);
        let reader = open_history(text.as_bytes(), None).unwrap();
        let h = reader.header().unwrap();
        assert_eq!((h.levcfg, h.imcon, h.natoms), (0, 1, 4));
        assert_eq!(h.title, "test trajectory");
        assert!(open_history(write(false, 0).as_bytes(), None).unwrap().header().is_none());
    }

    #[test]
    fn velocities_and_forces_are_skipped() {
        let (plain, _) = read_all(&write(true, 0), Some(4)).unwrap();
        for keytrj in [1, 2] {
            let (rich, end) = read_all(&write(true, keytrj), Some(4)).unwrap();
            assert_eq!(end, FrameRead::End);
            assert_eq!(rich, plain, "keytrj {keytrj}");
        }
    }

    #[test]
    fn truncation_keeps_complete_frames() {
        let text = write(true, 0);
        let lines: Vec<&str> = text.lines().collect();
        let cut = lines[..lines.len() - 5].join("\n");
        let mut reader = open_history(cut.as_bytes(), Some(4)).unwrap();
        let mut n = 0;
        let end = loop {
            match reader.next_frame().unwrap() {
                FrameRead::Frame(_) => n += 1,
                end => break end,
            }
        };
        assert_eq!(n, 2);
        assert_eq!(end, FrameRead::Truncated);
        assert_eq!(reader.truncated(), Some(true));
        assert_eq!(reader.frames_read(), 2);
        assert_eq!(reader.next_frame().unwrap(), FrameRead::Truncated);
    }

    #[test]
    fn cut_mid_line_is_truncation() {
        let text = write(true, 0);
        let cut = &text[..text.len() - 25];
        let (frames, end) = read_all(cut, Some(4)).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(end, FrameRead::Truncated);
    }

    #[test]
    fn non_numeric_coordinate_is_truncation() {
        let mut text = write(false, 0);
        let at = text.rfind("0.123456789000").unwrap();
        text.replace_range(at..at + 14, "garbage");
        let (frames, end) = read_all(&text, Some(4)).unwrap();
        assert_eq!(frames.len(), 2);
        assert_eq!(end, FrameRead::Truncated);
    }

    #[test]
    fn empty_file_is_abnormal() {
        let (frames, end) = read_all("", None).unwrap();
        assert!(frames.is_empty());
        assert_eq!(end, FrameRead::Truncated);
        let (frames, end) = read_all("\n\n", None).unwrap();
        assert!(frames.is_empty());
        assert_eq!(end, FrameRead::Truncated);
    }

    #[test]
    fn bad_starts_are_format_errors() {
        assert!(matches!(
            open_history("hello\nworld\n".as_bytes(), None),
            Err(ParseError::Syntax { line: 2, .. })
        ));
        assert!(matches!(
            open_history("title\n0 1 4\nnot a frame\n".as_bytes(), None),
            Err(ParseError::Syntax { line: 3, .. })
        ));
        assert!(open_history("only a title\n".as_bytes(), None).is_err());
    }

    #[test]
    fn atom_count_must_match_topology() {
        let err = read_all(&write(false, 0), Some(5)).unwrap_err();
        assert!(matches!(err, ParseError::AtomCount { frame: 1, found: 4, expected: 5 }));
        let err = read_all(&write(true, 0), Some(5)).unwrap_err();
        assert!(matches!(err, ParseError::AtomCount { frame: 0, .. }));
    }

    #[test]
    fn open_boundaries_have_no_cell_rows() {
        let text = "timestep 5 1 0 0 0.001\nAr 1 39.9 0.0\n1.0 2.0 3.0\n";
        let (frames, end) = read_all(text, Some(1)).unwrap();
        assert_eq!(end, FrameRead::End);
        assert_eq!(frames[0].cell.imcon(), ImageConvention::None);
        assert_eq!(frames[0].positions, vec![Vec3::new(1.0, 2.0, 3.0)]);
    }

    #[test]
    fn unsupported_imcon_is_fatal() {
        let text = "timestep 5 1 0 4 0.001\n10 0 0\n0 10 0\n0 0 10\nAr 1 39.9 0.0\n1.0 2.0 3.0\n";
        assert!(matches!(read_all(text, Some(1)), Err(ParseError::Cell { line: 1, .. })));
    }

    #[test]
    fn header_only_file_ends_cleanly() {
        let (frames, end) = read_all("title\n0 1 4\n", Some(4)).unwrap();
        assert!(frames.is_empty());
        assert_eq!(end, FrameRead::End);
    }
}
