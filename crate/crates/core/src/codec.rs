//! Fixed-precision trajectory text.
//!
//! A trajectory is written as `[(x1,y1), (x2,y2), ...]` with exactly
//! `decimals` fractional digits per coordinate, so `23.17` reaches the
//! tokenizer as the integer part `23`, the point and the fractional part `17`.
//! The same text appears in prompts, fine-tune targets and completions.
//!
//! Rounding is half-away-from-zero on the shortest decimal representation of
//! the value (the digits `{}` prints), and the quantized value is the `f64`
//! nearest to the rounded decimal. Serializing a quantized value therefore
//! reproduces exactly the digits it was parsed from, which makes
//! `parse(serialize(t)) == quantize(t)` hold bitwise.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scenario::{Horizon, Trajectory, Waypoint, COORD_LIMIT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CodecError {
    #[error("non-finite value {0}")]
    NonFinite(f64),
    #[error("empty input")]
    Empty,
    #[error("no coordinate pairs found")]
    NoPairs,
    #[error("trajectory length mismatch: found {found}, expected {expected}")]
    LengthMismatch { found: usize, expected: usize },
    #[error("unparseable number {text:?} at byte {offset}")]
    BadNumber { text: String, offset: usize },
    #[error("malformed coordinate list at byte {offset}")]
    Malformed { offset: usize },
    #[error("coordinate {0} outside +/-{COORD_LIMIT} m")]
    OutOfRange(f64),
    #[error("invalid codec config: {0}")]
    Config(String),
}

/// Delimiters and precision of the trajectory text. List brackets are always
/// `[` and `]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CodecConfig {
    pub decimals: u32,
    pub pair_open: String,
    pub pair_close: String,
    pub pair_sep: String,
    pub list_sep: String,
}

impl Default for CodecConfig {
    fn default() -> Self {
        Self {
            decimals: 2,
            pair_open: "(".into(),
            pair_close: ")".into(),
            pair_sep: ",".into(),
            list_sep: ", ".into(),
        }
    }
}

impl CodecConfig {
    pub fn validate(&self) -> Result<(), CodecError> {
        let delims = [
            ("pair_open", &self.pair_open),
            ("pair_close", &self.pair_close),
            ("pair_sep", &self.pair_sep),
            ("list_sep", &self.list_sep),
        ];
        for (name, d) in delims {
            if d.is_empty() {
                return Err(CodecError::Config(format!("{name} is empty")));
            }
            if d.chars().any(|c| c.is_ascii_digit() || matches!(c, '.' | '+' | '-' | '[' | ']')) {
                return Err(CodecError::Config(format!(
                    "{name} {d:?} may not contain digits, signs, '.', '[' or ']'"
                )));
            }
        }
        for (name, d) in &delims[..3] {
            if d.trim().is_empty() {
                return Err(CodecError::Config(format!("{name} must not be whitespace only")));
            }
        }
        for (i, (a_name, a)) in delims.iter().enumerate() {
            for (b_name, b) in &delims[i + 1..] {
                if a == b {
                    return Err(CodecError::Config(format!("{a_name} and {b_name} are both {a:?}")));
                }
            }
        }
        if self.decimals > 12 {
            return Err(CodecError::Config(format!("{} decimals is more than 12", self.decimals)));
        }
        Ok(())
    }
}

/// Canonical fixed-point text of `v` rounded half-away-from-zero to
/// `decimals` digits. Values that round to zero are written unsigned.
pub fn format_fixed(v: f64, decimals: u32) -> Result<String, CodecError> {
    if !v.is_finite() {
        return Err(CodecError::NonFinite(v));
    }
    let decimals = decimals as usize;
    // Display never uses an exponent for f64 and prints the shortest digits
    // that round-trip.
    let shortest = format!("{}", v.abs());
    let (int_part, frac_part) = shortest.split_once('.').unwrap_or((&shortest, ""));

    let mut digits: Vec<u8> = int_part.bytes().map(|b| b - b'0').collect();
    let frac: Vec<u8> = frac_part.bytes().map(|b| b - b'0').collect();
    digits.extend((0..decimals).map(|i| frac.get(i).copied().unwrap_or(0)));
    if frac.get(decimals).is_some_and(|d| *d >= 5) {
        let mut i = digits.len();
        loop {
            if i == 0 {
                digits.insert(0, 1);
                break;
            }
            i -= 1;
            if digits[i] == 9 {
                digits[i] = 0;
            } else {
                digits[i] += 1;
                break;
            }
        }
    }

    let split = digits.len() - decimals;
    let mut out = String::with_capacity(digits.len() + 2);
    if v < 0.0 && digits.iter().any(|d| *d != 0) {
        out.push('-');
    }
    let int_digits = &digits[..split];
    let first_nonzero = int_digits.iter().position(|d| *d != 0).unwrap_or(int_digits.len() - 1);
    out.extend(int_digits[first_nonzero..].iter().map(|d| (b'0' + d) as char));
    if decimals > 0 {
        out.push('.');
        out.extend(digits[split..].iter().map(|d| (b'0' + d) as char));
    }
    Ok(out)
}

/// Rounds half-away-from-zero to `decimals` fractional digits.
pub fn quantize(v: f64, decimals: u32) -> Result<f64, CodecError> {
    let text = format_fixed(v, decimals)?;
    let q: f64 = text.parse().expect("format_fixed emits a plain decimal");
    Ok(q)
}

fn format_pair(w: &Waypoint, cfg: &CodecConfig, out: &mut String) -> Result<(), CodecError> {
    out.push_str(&cfg.pair_open);
    out.push_str(&format_fixed(w.x, cfg.decimals)?);
    out.push_str(&cfg.pair_sep);
    out.push_str(&format_fixed(w.y, cfg.decimals)?);
    out.push_str(&cfg.pair_close);
    Ok(())
}

/// Renders a single waypoint, e.g. `(-3.20,12.40)`.
pub fn serialize_waypoint(w: &Waypoint, cfg: &CodecConfig) -> Result<String, CodecError> {
    let mut out = String::new();
    format_pair(w, cfg, &mut out)?;
    Ok(out)
}

/// Renders any waypoint list in the canonical bracketed form.
pub fn serialize_waypoints(ws: &[Waypoint], cfg: &CodecConfig) -> Result<String, CodecError> {
    let mut out = String::with_capacity(ws.len() * 16 + 2);
    out.push('[');
    for (i, w) in ws.iter().enumerate() {
        if i > 0 {
            out.push_str(&cfg.list_sep);
        }
        format_pair(w, cfg, &mut out)?;
    }
    out.push(']');
    Ok(out)
}

pub fn serialize_trajectory(t: &Trajectory, cfg: &CodecConfig) -> Result<String, CodecError> {
    serialize_waypoints(&t.waypoints, cfg)
}

/// Byte cursor over the input. Only ASCII is ever consumed as syntax, so
/// every slice taken between two syntax positions is valid UTF-8.
struct Cursor<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str, pos: usize) -> Self {
        Self { text, pos }
    }

    fn bytes(&self) -> &'a [u8] {
        self.text.as_bytes()
    }

    fn skip_ws(&mut self) {
        while self.pos < self.text.len() && self.bytes()[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn eat(&mut self, token: &str) -> bool {
        if token.is_empty() {
            return true;
        }
        if self.text.as_bytes()[self.pos..].starts_with(token.as_bytes()) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    /// `[+-]?digits(.digits)?`
    fn number(&mut self) -> Option<Result<f64, CodecError>> {
        let b = self.bytes();
        let start = self.pos;
        let mut i = start;
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            i += 1;
        }
        let int_start = i;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == int_start {
            return None;
        }
        if i + 1 < b.len() && b[i] == b'.' && b[i + 1].is_ascii_digit() {
            i += 1;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
        }
        self.pos = i;
        let text = &self.text[start..i];
        let text = text.strip_prefix('+').unwrap_or(text);
        Some(text.parse::<f64>().map_err(|_| CodecError::BadNumber {
            text: text.to_string(),
            offset: start,
        }))
    }
}

/// Raw pair parse at the cursor: `open ws num ws sep ws num ws close`.
/// `Ok(None)` means the text there is not a pair.
fn pair_at(c: &mut Cursor<'_>, cfg: &CodecConfig) -> Result<Option<(f64, f64)>, CodecError> {
    let open = cfg.pair_open.trim();
    let sep = cfg.pair_sep.trim();
    let close = cfg.pair_close.trim();
    if !c.eat(open) {
        return Ok(None);
    }
    c.skip_ws();
    let Some(x) = c.number() else { return Ok(None) };
    c.skip_ws();
    if !c.eat(sep) {
        return Ok(None);
    }
    c.skip_ws();
    let Some(y) = c.number() else { return Ok(None) };
    c.skip_ws();
    if !c.eat(close) {
        return Ok(None);
    }
    Ok(Some((x?, y?)))
}

/// Strict list parse starting at a `[`. `Ok(None)` when the text there is not
/// a coordinate list at all; errors once the list has clearly started.
fn list_at(
    text: &str,
    start: usize,
    cfg: &CodecConfig,
) -> Result<Option<(Vec<(f64, f64)>, usize)>, CodecError> {
    let mut c = Cursor::new(text, start);
    if !c.eat("[") {
        return Ok(None);
    }
    c.skip_ws();
    if c.eat("]") {
        return Ok(Some((Vec::new(), c.pos)));
    }
    if !c.text.as_bytes()[c.pos..].starts_with(cfg.pair_open.trim().as_bytes()) {
        return Ok(None);
    }
    let sep = cfg.list_sep.trim();
    let mut pairs = Vec::new();
    loop {
        let at = c.pos;
        match pair_at(&mut c, cfg)? {
            Some(p) => pairs.push(p),
            None => return Err(CodecError::Malformed { offset: at }),
        }
        c.skip_ws();
        if c.eat("]") {
            return Ok(Some((pairs, c.pos)));
        }
        if !sep.is_empty() && !c.eat(sep) {
            return Err(CodecError::Malformed { offset: c.pos });
        }
        c.skip_ws();
    }
}

fn to_waypoints(pairs: &[(f64, f64)], decimals: u32) -> Result<Vec<Waypoint>, CodecError> {
    pairs
        .iter()
        .map(|&(x, y)| {
            for v in [x, y] {
                if !v.is_finite() {
                    return Err(CodecError::NonFinite(v));
                }
                if v.abs() > COORD_LIMIT {
                    return Err(CodecError::OutOfRange(v));
                }
            }
            Waypoint::new(x, y).quantized(decimals)
        })
        .collect()
}

/// Parses the bracketed list that starts at `text[start..]` (after optional
/// whitespace) and requires exactly `horizon.steps` pairs.
pub fn parse_list_at(
    text: &str,
    start: usize,
    horizon: &Horizon,
    cfg: &CodecConfig,
) -> Result<Trajectory, CodecError> {
    let mut c = Cursor::new(text, start.min(text.len()));
    c.skip_ws();
    match list_at(text, c.pos, cfg)? {
        Some((pairs, _)) => finish(&pairs, horizon, cfg),
        None => Err(CodecError::Malformed { offset: c.pos }),
    }
}

fn finish(pairs: &[(f64, f64)], horizon: &Horizon, cfg: &CodecConfig) -> Result<Trajectory, CodecError> {
    if pairs.len() != horizon.steps {
        return Err(CodecError::LengthMismatch {
            found: pairs.len(),
            expected: horizon.steps,
        });
    }
    Ok(Trajectory::new(to_waypoints(pairs, cfg.decimals)?, horizon.dt))
}

/// Every maximal run of pairs separated only by whitespace or the list
/// separator.
fn pair_runs(text: &str, cfg: &CodecConfig) -> Vec<Vec<(f64, f64)>> {
    let open = cfg.pair_open.trim().as_bytes();
    let sep = cfg.list_sep.trim();
    let bytes = text.as_bytes();
    let mut runs: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut current: Vec<(f64, f64)> = Vec::new();
    let mut run_end = 0usize;
    let mut i = 0usize;
    while i < bytes.len() {
        if !bytes[i..].starts_with(open) {
            i += 1;
            continue;
        }
        let mut c = Cursor::new(text, i);
        match pair_at(&mut c, cfg) {
            Ok(Some(p)) => {
                if !current.is_empty() && !is_gap(&text[run_end..i], sep) {
                    runs.push(std::mem::take(&mut current));
                }
                current.push(p);
                run_end = c.pos;
                i = c.pos;
            }
            _ => i += 1,
        }
    }
    if !current.is_empty() {
        runs.push(current);
    }
    runs
}

fn is_gap(between: &str, sep: &str) -> bool {
    let rest = between.trim();
    rest.is_empty() || (!sep.is_empty() && rest == sep)
}

/// Extracts a trajectory of exactly `horizon.steps` waypoints from arbitrary
/// text.
///
/// Bracketed lists are tried first and the last one of the expected length
/// wins; otherwise runs of loose pairs are scanned the same way. Values are
/// returned quantized.
pub fn parse_trajectory(text: &str, horizon: &Horizon, cfg: &CodecConfig) -> Result<Trajectory, CodecError> {
    if text.trim().is_empty() {
        return Err(CodecError::Empty);
    }

    let mut first_error = None;
    let mut last_list: Option<Vec<(f64, f64)>> = None;
    let mut matching: Option<Vec<(f64, f64)>> = None;
    for (start, _) in text.match_indices('[') {
        match list_at(text, start, cfg) {
            Ok(Some((pairs, _))) => {
                if pairs.len() == horizon.steps {
                    matching = Some(pairs.clone());
                }
                last_list = Some(pairs);
            }
            Ok(None) => {}
            Err(e) => {
                first_error.get_or_insert(e);
            }
        }
    }
    if let Some(pairs) = matching {
        return finish(&pairs, horizon, cfg);
    }

    let runs = pair_runs(text, cfg);
    if let Some(run) = runs.iter().rev().find(|r| r.len() == horizon.steps) {
        return finish(run, horizon, cfg);
    }
    if let Some(pairs) = last_list {
        return finish(&pairs, horizon, cfg);
    }
    if let Some(e) = first_error {
        return Err(e);
    }
    match runs.iter().map(Vec::len).max() {
        Some(found) => Err(CodecError::LengthMismatch {
            found,
            expected: horizon.steps,
        }),
        None => Err(CodecError::NoPairs),
    }
}
