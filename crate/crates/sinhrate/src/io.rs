//! CSV file formats: model directories, instrument lists and quote surfaces.
//!
//! Times are ACT/365-fixed year fractions. Numbers use '.' as the decimal
//! separator; lines starting with '#' are comments.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;
use sinhrate_core::marketcal::Quote;
use sinhrate_core::pricing::{InstrumentKind, InstrumentSpec};
use sinhrate_core::{DiscountCurve, ModelParams, PiecewiseCurve};

use crate::error::{CliError, CliResult};

pub const DISCOUNT_FILE: &str = "discount.csv";
pub const SIGMA_FILE: &str = "sigma.csv";
pub const ALPHA_FILE: &str = "alpha.csv";
pub const GAMMA_FILE: &str = "gamma.csv";
pub const Y_STAR_FILE: &str = "y_star.csv";

/// The files making up a model directory, in a fixed order.
pub const MODEL_FILES: [&str; 5] = [DISCOUNT_FILE, SIGMA_FILE, ALPHA_FILE, GAMMA_FILE, Y_STAR_FILE];

/// An instrument with its identifier from the instrument file.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedInstrument {
    pub id: String,
    pub spec: InstrumentSpec,
}

fn reader(path: &Path, headers: bool) -> CliResult<csv::Reader<File>> {
    let f = File::open(path).map_err(|e| CliError::io(path, e))?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(headers)
        .flexible(!headers)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(f))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.position() {
        Some(p) => CliError::at_line(path, p.line(), &e),
        None => CliError::input(format!("{}: {e}", path.display())),
    }
}

fn check_header(path: &Path, rdr: &mut csv::Reader<File>, expected: &[&str]) -> CliResult<()> {
    let h = rdr.headers().map_err(|e| csv_error(path, e))?;
    let got: Vec<String> = h.iter().map(|s| s.to_ascii_lowercase()).collect();
    if got != expected {
        return Err(CliError::at_line(
            path,
            1,
            format!("expected header `{}`, found `{}`", expected.join(","), got.join(",")),
        ));
    }
    Ok(())
}

fn number(path: &Path, line: u64, field: &str, what: &str) -> CliResult<f64> {
    let x: f64 = field
        .parse()
        .map_err(|_| CliError::at_line(path, line, format!("{what}: `{field}` is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::at_line(path, line, format!("{what} must be finite")));
    }
    Ok(x)
}

/// Two-column numeric file with the given header.
fn read_pairs(path: &Path, header: [&str; 2]) -> CliResult<Vec<(u64, f64, f64)>> {
    let mut rdr = reader(path, true)?;
    check_header(path, &mut rdr, &header)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 2 {
            return Err(CliError::at_line(path, line, format!("expected 2 fields, found {}", rec.len())));
        }
        out.push((line, number(path, line, &rec[0], header[0])?, number(path, line, &rec[1], header[1])?));
    }
    if out.is_empty() {
        return Err(CliError::input(format!("{}: no data rows", path.display())));
    }
    Ok(out)
}

/// Piecewise-constant curve from a `time,value` file; each row starts a piece.
pub fn read_curve(path: &Path) -> CliResult<PiecewiseCurve> {
    let rows = read_pairs(path, ["time", "value"])?;
    let (t, v): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.1, r.2)).unzip();
    PiecewiseCurve::new(t, v).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

/// Log-linear discount curve from a `time,discount` file.
pub fn read_discount(path: &Path) -> CliResult<DiscountCurve> {
    let rows = read_pairs(path, ["time", "discount"])?;
    let (t, d): (Vec<f64>, Vec<f64>) = rows.iter().map(|r| (r.1, r.2)).unzip();
    DiscountCurve::new(&t, &d).map_err(|e| CliError::input(format!("{}: {e}", path.display())))
}

pub fn read_model_dir(dir: &Path) -> CliResult<ModelParams> {
    let discount = read_discount(&dir.join(DISCOUNT_FILE))?;
    let sigma = read_curve(&dir.join(SIGMA_FILE))?;
    let alpha = read_curve(&dir.join(ALPHA_FILE))?;
    let gamma = read_curve(&dir.join(GAMMA_FILE))?;
    let y_star = read_curve(&dir.join(Y_STAR_FILE))?;
    ModelParams::new(sigma, alpha, gamma, y_star, discount)
        .map_err(|e| CliError::input(format!("{}: {e}", dir.display())))
}

fn create(path: &Path) -> CliResult<File> {
    File::create(path).map_err(|e| CliError::io(path, e))
}

pub fn write_curve(path: &Path, c: &PiecewiseCurve) -> CliResult<()> {
    let mut s = String::from("time,value\n");
    for (t, v) in c.breakpoints().iter().zip(c.values()) {
        s.push_str(&format!("{t},{v}\n"));
    }
    create(path)?.write_all(s.as_bytes()).map_err(|e| CliError::io(path, e))
}

/// Writes the pillars plus one point a year past the last, which pins the
/// extrapolation rate (a flat curve has a single pillar at 0).
pub fn write_discount(path: &Path, d: &DiscountCurve) -> CliResult<()> {
    let mut s = String::from("time,discount\n");
    let pillars = d.pillars();
    let last = pillars.last().copied().unwrap_or(0.0);
    for &t in pillars.iter().chain(std::iter::once(&(last + 1.0))) {
        s.push_str(&format!("{t},{}\n", d.df(t)));
    }
    create(path)?.write_all(s.as_bytes()).map_err(|e| CliError::io(path, e))
}

pub fn write_model_dir(dir: &Path, p: &ModelParams) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    write_discount(&dir.join(DISCOUNT_FILE), &p.discount)?;
    write_curve(&dir.join(SIGMA_FILE), &p.sigma)?;
    write_curve(&dir.join(ALPHA_FILE), &p.alpha)?;
    write_curve(&dir.join(GAMMA_FILE), &p.gamma)?;
    write_curve(&dir.join(Y_STAR_FILE), &p.y_star)
}

/// Instrument rows `id,kind,T0,...,Tn,strike,δ1,...,δn`. A header row whose
/// first field is `id` is skipped. Caplets have `n = 1`.
pub fn read_instruments(path: &Path) -> CliResult<Vec<NamedInstrument>> {
    let mut rdr = reader(path, false)?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rec[0].eq_ignore_ascii_case("id") {
            continue;
        }
        if rec.len() < 6 || rec.len() % 2 != 0 {
            return Err(CliError::at_line(
                path,
                line,
                format!("expected id,kind,T0..Tn,strike,δ1..δn (an even count of at least 6 fields), found {}", rec.len()),
            ));
        }
        let n = (rec.len() - 4) / 2;
        let kind = InstrumentKind::parse(&rec[1])
            .ok_or_else(|| CliError::at_line(path, line, format!("unknown instrument kind `{}`", &rec[1])))?;
        let nums = (2..rec.len())
            .map(|i| number(path, line, &rec[i], "field"))
            .collect::<CliResult<Vec<f64>>>()?;
        let times = nums[..=n].to_vec();
        let strike = nums[n + 1];
        let accruals = nums[n + 2..].to_vec();
        let spec = match kind {
            InstrumentKind::PayerSwaption => InstrumentSpec::swaption(times, strike, accruals),
            _ if n != 1 => {
                return Err(CliError::at_line(path, line, "caplets take exactly two dates and one accrual"))
            }
            _ => InstrumentSpec::caplet(kind, times[0], times[1], strike, accruals[0]),
        }
        .map_err(|e| CliError::at_line(path, line, e))?;
        if out.iter().any(|x: &NamedInstrument| x.id == rec[0]) {
            return Err(CliError::at_line(path, line, format!("duplicate instrument id `{}`", &rec[0])));
        }
        out.push(NamedInstrument { id: rec[0].to_string(), spec });
    }
    Ok(out)
}

#[derive(Deserialize)]
struct QuoteRow {
    maturity: f64,
    tenor: f64,
    strike: f64,
    implied_vol: f64,
}

/// Quotes `maturity,tenor,strike,implied_vol`; vols are Hull-White normal
/// vols, the maturity is the end of the caplet period.
pub fn read_quotes(path: &Path) -> CliResult<Vec<Quote>> {
    let mut rdr = reader(path, true)?;
    check_header(path, &mut rdr, &["maturity", "tenor", "strike", "implied_vol"])?;
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| csv_error(path, e))?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: QuoteRow = rec.deserialize(None).map_err(|e| CliError::at_line(path, line, e))?;
        let q = Quote { maturity: row.maturity, tenor: row.tenor, strike: row.strike, implied_vol: row.implied_vol };
        if ![q.maturity, q.tenor, q.strike, q.implied_vol].iter().all(|x| x.is_finite()) {
            return Err(CliError::at_line(path, line, "non-finite number"));
        }
        if !(q.tenor > 0.0 && q.maturity - q.tenor >= 0.0 && q.implied_vol > 0.0) {
            return Err(CliError::at_line(path, line, "need tenor > 0, maturity ≥ tenor and a positive vol"));
        }
        out.push(q);
    }
    Ok(out)
}

/// Minimal CSV table writer with deterministic number formatting.
#[derive(Debug, Clone, Default)]
pub struct Table {
    buf: String,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { buf: header.join(",") + "\n" }
    }

    pub fn row(&mut self, cells: &[Cell]) {
        let s: Vec<String> = cells.iter().map(Cell::render).collect();
        self.buf.push_str(&s.join(","));
        self.buf.push('\n');
    }

    pub fn as_str(&self) -> &str {
        &self.buf
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        create(path)?.write_all(self.buf.as_bytes()).map_err(|e| CliError::io(path, e))
    }
}

pub enum Cell {
    Text(String),
    Num(f64),
    /// Empty field for a value that is not defined.
    Missing,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Text(s) if s.contains([',', '"', '\n']) => format!("\"{}\"", s.replace('"', "\"\"")),
            Cell::Text(s) => s.clone(),
            Cell::Num(x) => format!("{x}"),
            Cell::Missing => String::new(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<Option<f64>> for Cell {
    fn from(x: Option<f64>) -> Self {
        x.map_or(Cell::Missing, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}
