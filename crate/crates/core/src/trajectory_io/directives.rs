use log::warn;

use super::{parse_real, ParseError};

/// User controls read from the `polyana ... end polyana` block that may
/// follow the `finish` directive of a DL_POLY `CONTROL` file.
#[derive(Debug, Clone, PartialEq)]
pub struct Directives {
    /// First configuration processed, counted from 1 in file order.
    pub start: u64,
    /// Last configuration processed (inclusive).
    pub stop: u64,
    /// Cutoff distance in Å, inclusive.
    pub rmax: f64,
    /// Histogram bin width in Å.
    pub dr: f64,
    pub smooth: bool,
}

impl Default for Directives {
    fn default() -> Self {
        Directives {
            start: 1,
            stop: u64::MAX,
            rmax: 12.5,
            dr: 0.1,
            smooth: false,
        }
    }
}

impl Directives {
    /// Number of histogram bins, `1 + NINT(rmax / dr)`.
    pub fn nbins(&self) -> usize {
        1 + crate::geometry::nint(self.rmax / self.dr) as usize
    }

    /// Whether the configuration with the 1-based index `k` is processed.
    pub fn selects(&self, k: u64) -> bool {
        (self.start..=self.stop).contains(&k)
    }

    fn validate(&self, line: usize) -> Result<(), ParseError> {
        let problem = if self.start < 1 {
            Some("start must be at least 1".to_string())
        } else if self.stop < self.start {
            Some(format!("stop ({}) is before start ({})", self.stop, self.start))
        } else if !(self.dr > 0.0) {
            Some("dr must be positive".to_string())
        } else if !(self.rmax > self.dr) {
            Some(format!("rmax ({}) must exceed dr ({})", self.rmax, self.dr))
        } else {
            None
        };
        match problem {
            Some(message) => Err(ParseError::Syntax {
                file: "CONTROL",
                line,
                message,
            }),
            None => Ok(()),
        }
    }
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax {
        file: "CONTROL",
        line,
        message: message.into(),
    }
}

fn lower_tokens(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_ascii_lowercase).collect()
}

/// Reads the directive block from the text of a `CONTROL` file.
///
/// Only lines after the first `finish` directive are considered. When the
/// file has no `finish` line the whole text is scanned. Lines outside a
/// `polyana ... end polyana` block are ignored, and a file without any block
/// yields [`Directives::default`].
pub fn parse_directives(control_text: &str) -> Result<Directives, ParseError> {
    let lines: Vec<&str> = control_text.lines().collect();
    let first = lines
        .iter()
        .position(|l| lower_tokens(l).first().map(String::as_str) == Some("finish"))
        .map_or(0, |i| i + 1);

    let mut directives = Directives::default();
    let mut open_at: Option<usize> = None;
    let mut last_line = 0;

    for (idx, raw) in lines.iter().enumerate().skip(first) {
        let lineno = idx + 1;
        let tokens = lower_tokens(raw);
        let Some(keyword) = tokens.first() else {
            continue;
        };
        if open_at.is_none() {
            if keyword == "polyana" {
                open_at = Some(lineno);
            }
            continue;
        }
        if keyword == "end" {
            if tokens.get(1).map(String::as_str) == Some("polyana") {
                open_at = None;
                last_line = lineno;
                continue;
            }
            return Err(syntax(lineno, format!("unexpected '{}'", raw.trim())));
        }
        let value = tokens.get(1).map(String::as_str);
        match keyword.as_str() {
            "start" => directives.start = integer(value, lineno, "start")?,
            "stop" => directives.stop = integer(value, lineno, "stop")?,
            "rmax" => directives.rmax = real(value, lineno, "rmax")?,
            "dr" => directives.dr = real(value, lineno, "dr")?,
            "smooth" => directives.smooth = true,
            other => warn!("CONTROL line {lineno}: unknown directive '{other}' ignored"),
        }
    }

    if let Some(line) = open_at {
        return Err(syntax(line, "'polyana' block is not closed by 'end polyana'"));
    }
    directives.validate(last_line)?;
    Ok(directives)
}

fn integer(value: Option<&str>, line: usize, key: &str) -> Result<u64, ParseError> {
    let token = value.ok_or_else(|| syntax(line, format!("'{key}' needs an integer value")))?;
    token
        .parse::<u64>()
        .map_err(|_| syntax(line, format!("'{key}' expects a non-negative integer, got '{token}'")))
}

fn real(value: Option<&str>, line: usize, key: &str) -> Result<f64, ParseError> {
    let token = value.ok_or_else(|| syntax(line, format!("'{key}' needs a numeric value")))?;
    parse_real(token).ok_or_else(|| syntax(line, format!("'{key}' expects a number, got '{token}'")))
}
