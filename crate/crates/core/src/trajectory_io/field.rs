use std::io::{self, Write};

use super::{parse_real, ParseError};

#[derive(Debug, Clone, PartialEq)]
pub struct SiteSpec {
    pub name: String,
    /// Mass in amu. Zero masses are allowed and drop the site from the
    /// center-of-mass sum.
    pub mass: f64,
    pub charge: f64,
    pub frozen: i64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MoleculeSpec {
    pub name: String,
    /// Number of molecules of this type (`NUMMOLS`).
    pub count: usize,
    /// Sites of one molecule, repeat counts already expanded.
    pub sites: Vec<SiteSpec>,
}

impl MoleculeSpec {
    pub fn total_mass(&self) -> f64 {
        self.sites.iter().map(|s| s.mass).sum()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.sites.iter().map(|s| s.mass).collect()
    }
}

/// Molecule types in `FIELD` order. Type `k` (1-based in the output files)
/// is `molecules[k - 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Topology {
    pub molecules: Vec<MoleculeSpec>,
}

impl Topology {
    pub fn n_types(&self) -> usize {
        self.molecules.len()
    }

    pub fn total_sites(&self) -> usize {
        self.molecules.iter().map(|m| m.count * m.sites.len()).sum()
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        file: "FIELD",
        line,
        message: message.into(),
    }
}

/// DL_POLY matches keywords on their leading characters; four are enough to
/// tell `MOLECULES`/`MOLECULAR TYPES`, `NUMMOLS`, `ATOMS` and `FINISH` apart.
fn is_keyword(token: &str, keyword: &str) -> bool {
    token.len() >= 4
        && token.is_char_boundary(4)
        && token[..4].eq_ignore_ascii_case(&keyword[..4])
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    /// Next non-blank line with its 1-based number.
    fn next_content(&mut self) -> Option<(usize, &'a str)> {
        self.inner
            .by_ref()
            .map(|(i, l)| (i + 1, l))
            .find(|(_, l)| !l.trim().is_empty())
    }
}

fn last_count(line: &str, lineno: usize, keyword: &str) -> Result<usize, ParseError> {
    line.split_whitespace()
        .last()
        .and_then(|t| t.parse::<usize>().ok())
        .ok_or_else(|| syntax(lineno, format!("{keyword} needs an integer count")))
}

/// Reads the molecular topology from the text of a `FIELD` file. Only the
/// molecule names, counts and site lists are kept; bonded terms and the
/// force-field sections are skipped.
pub fn parse_field(field_text: &str) -> Result<Topology, ParseError> {
    let mut lines = Lines {
        inner: field_text.lines().enumerate(),
    };

    let (lineno, header) = loop {
        match lines.next_content() {
            Some((n, l)) => {
                if l.split_whitespace().next().is_some_and(|t| is_keyword(t, "molecules")) {
                    break (n, l);
                }
            }
            None => {
                return Err(ParseError::Structure {
                    file: "FIELD",
                    message: "no MOLECULES directive".into(),
                })
            }
        }
    };
    let n_types = last_count(header, lineno, "MOLECULES")?;

    let mut molecules = Vec::with_capacity(n_types);
    for _ in 0..n_types {
        molecules.push(parse_molecule(&mut lines)?);
    }
    Ok(Topology { molecules })
}

fn expect_keyword<'a>(
    lines: &mut Lines<'a>,
    keyword: &str,
    molecule: &str,
) -> Result<(usize, &'a str), ParseError> {
    let missing = || ParseError::Structure {
        file: "FIELD",
        message: format!("molecule '{molecule}': missing {}", keyword.to_uppercase()),
    };
    let (n, l) = lines.next_content().ok_or_else(missing)?;
    if l.split_whitespace().next().is_some_and(|t| is_keyword(t, keyword)) {
        Ok((n, l))
    } else {
        Err(syntax(
            n,
            format!("molecule '{molecule}': expected {}, found '{}'", keyword.to_uppercase(), l.trim()),
        ))
    }
}

fn parse_molecule(lines: &mut Lines<'_>) -> Result<MoleculeSpec, ParseError> {
    let (_, name_line) = lines.next_content().ok_or_else(|| ParseError::Structure {
        file: "FIELD",
        message: "fewer molecule blocks than MOLECULES declares".into(),
    })?;
    let name = name_line.trim().to_string();

    let (n, l) = expect_keyword(lines, "nummols", &name)?;
    let count = last_count(l, n, "NUMMOLS")?;
    if count == 0 {
        return Err(syntax(n, format!("molecule '{name}': NUMMOLS must be at least 1")));
    }
    let (n, l) = expect_keyword(lines, "atoms", &name)?;
    let n_sites = last_count(l, n, "ATOMS")?;
    if n_sites == 0 {
        return Err(syntax(n, format!("molecule '{name}': ATOMS must be at least 1")));
    }

    let mut sites = Vec::with_capacity(n_sites);
    while sites.len() < n_sites {
        let (n, l) = lines.next_content().ok_or_else(|| ParseError::Structure {
            file: "FIELD",
            message: format!("molecule '{name}': file ends inside the ATOMS list"),
        })?;
        let tokens: Vec<&str> = l.split_whitespace().collect();
        if tokens.len() < 3 {
            return Err(syntax(n, format!("site record needs name, mass and charge: '{}'", l.trim())));
        }
        let mass = parse_real(tokens[1]).ok_or_else(|| syntax(n, format!("bad mass '{}'", tokens[1])))?;
        if mass < 0.0 {
            return Err(syntax(n, format!("negative mass {mass}")));
        }
        let charge =
            parse_real(tokens[2]).ok_or_else(|| syntax(n, format!("bad charge '{}'", tokens[2])))?;
        let repeat = match tokens.get(3) {
            Some(t) => t.parse::<usize>().map_err(|_| syntax(n, format!("bad repeat count '{t}'")))?,
            None => 1,
        }
        .max(1);
        let frozen = match tokens.get(4) {
            Some(t) => t.parse::<i64>().map_err(|_| syntax(n, format!("bad frozen flag '{t}'")))?,
            None => 0,
        };
        if sites.len() + repeat > n_sites {
            return Err(syntax(
                n,
                format!("repeat count {repeat} overruns ATOMS {n_sites} of molecule '{name}'"),
            ));
        }
        let site = SiteSpec {
            name: tokens[0].to_string(),
            mass,
            charge,
            frozen,
        };
        sites.extend(std::iter::repeat_n(site, repeat));
    }

    loop {
        match lines.next_content() {
            Some((_, l)) if l.split_whitespace().next().is_some_and(|t| is_keyword(t, "finish")) => break,
            Some(_) => {}
            None => {
                return Err(ParseError::Structure {
                    file: "FIELD",
                    message: format!("molecule '{name}': missing FINISH"),
                })
            }
        }
    }

    Ok(MoleculeSpec { name, count, sites })
}

/// Writes the molecular part of a `FIELD` file. Reals use the shortest
/// representation that parses back to the same value.
pub fn write_field<W: Write>(topology: &Topology, title: &str, out: &mut W) -> io::Result<()> {
    writeln!(out, "{title}")?;
    writeln!(out, "UNITS amu")?;
    writeln!(out, "MOLECULES {}", topology.molecules.len())?;
    for mol in &topology.molecules {
        writeln!(out, "{}", mol.name)?;
        writeln!(out, "NUMMOLS {}", mol.count)?;
        writeln!(out, "ATOMS {}", mol.sites.len())?;
        for site in &mol.sites {
            writeln!(out, "    {:<8} {} {} 1 {}", site.name, site.mass, site.charge, site.frozen)?;
        }
        writeln!(out, "FINISH")?;
    }
    writeln!(out, "CLOSE")
}
