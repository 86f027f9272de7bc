use std::io::{self, Write};

/// Finalized distribution functions, one column per molecule-type pair.
#[derive(Debug, Clone, PartialEq)]
pub struct RdfTable {
    /// `r_n = (n - 1) * dr`, in Å.
    pub bin_centers: Vec<f64>,
    /// 1-based type indices, like pairs first (see [`pair_order`]).
    pub pair_labels: Vec<(usize, usize)>,
    /// `g[pair][bin]`.
    pub g: Vec<Vec<f64>>,
    /// Cumulative neighbor counts, `pop[pair][bin]`.
    pub pop: Vec<Vec<f64>>,
    pub mean_volume: f64,
    pub frames_used: u64,
}

impl RdfTable {
    pub fn column(&self, pair: (usize, usize)) -> Option<usize> {
        let key = (pair.0.min(pair.1), pair.0.max(pair.1));
        self.pair_labels.iter().position(|&p| p == key)
    }
}

/// Column order for the given 1-based type indices: every like pair
/// `(1,1), (2,2), ...` followed by the unlike pairs `(1,2), (1,3), (2,3), ...`.
pub fn pair_order(types: &[usize]) -> Vec<(usize, usize)> {
    let like = types.iter().map(|&t| (t, t));
    let unlike = types
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| types[i + 1..].iter().map(move |&b| (a, b)));
    like.chain(unlike).collect()
}

const WIDTH: usize = 15;

/// Fortran-style `E` format: `-1.234560E+01`, seven significant digits.
fn sci(x: f64) -> String {
    let s = format!("{:.6e}", x);
    match s.split_once('e') {
        Some((mantissa, exp)) => {
            let exp: i32 = exp.parse().unwrap_or(0);
            format!("{mantissa}E{}{:02}", if exp < 0 { '-' } else { '+' }, exp.abs())
        }
        None => s,
    }
}

fn write_table<W: Write>(
    out: &mut W,
    prefix: &str,
    table: &RdfTable,
    values: &[Vec<f64>],
) -> io::Result<()> {
    write!(out, "#{:>w$}", "r", w = WIDTH - 1)?;
    for &(a, b) in &table.pair_labels {
        write!(out, "{:>WIDTH$}", format!("{prefix}{a}-{b}"))?;
    }
    writeln!(out)?;
    for (n, r) in table.bin_centers.iter().enumerate() {
        write!(out, "{:>WIDTH$}", sci(*r))?;
        for column in values {
            write!(out, "{:>WIDTH$}", sci(column[n]))?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes the `RDF` table: bin center then one `g` column per pair.
pub fn write_rdf<W: Write>(table: &RdfTable, out: &mut W) -> io::Result<()> {
    write_table(out, "g", table, &table.g)
}

/// Writes the `POP` table, laid out exactly like `RDF`.
pub fn write_pop<W: Write>(table: &RdfTable, out: &mut W) -> io::Result<()> {
    write_table(out, "pop", table, &table.pop)
}
