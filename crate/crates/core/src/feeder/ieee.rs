//! Reader for the IEEE European LV Test Feeder delimited text files.
//!
//! Each table file may start with free-form preamble rows (`Number of
//! lines:,905`); the first row whose first cell matches the expected key
//! column is the header. Column names are case-insensitive. Shape and
//! profile files are ignored.

use std::collections::HashMap;
use std::fs::File;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use super::{Bus, BusId, FeederModel, FeederParts, LineCode, LineSegment, LoadPoint, Phase, SourceSpec};
use crate::error::FeederError;
use crate::matrix::PhaseMatrix;

/// File names read from a feeder directory, in hashing order.
pub const IEEE_FILES: [&str; 5] = ["LineCodes.csv", "Lines.csv", "Loads.csv", "Source.csv", "Buscoords.csv"];

/// Names and SHA-256 digests of the files a feeder was read from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeederFiles {
    pub digests: Vec<(String, String)>,
}

impl FeederFiles {
    pub fn hash_dir(dir: &Path) -> Result<Self, FeederError> {
        let mut digests = Vec::new();
        for name in IEEE_FILES {
            let path = dir.join(name);
            if !path.exists() {
                continue;
            }
            let bytes = std::fs::read(&path).map_err(|source| FeederError::Io { path, source })?;
            let digest = Sha256::digest(&bytes);
            let hex: String = digest.iter().map(|b| format!("{b:02x}")).collect();
            digests.push((name.to_string(), hex));
        }
        Ok(Self { digests })
    }
}

struct Table {
    file: String,
    columns: HashMap<String, usize>,
    rows: Vec<(u64, csv::StringRecord)>,
}

impl Table {
    fn read(dir: &Path, name: &str, key: &[&str]) -> Result<Self, FeederError> {
        let path = dir.join(name);
        let rows = read_records(&path)?;
        let header_at = rows
            .iter()
            .position(|(_, r)| {
                r.get(0)
                    .map(|c| key.iter().any(|k| c.trim().eq_ignore_ascii_case(k)))
                    .unwrap_or(false)
            })
            .ok_or_else(|| FeederError::Parse {
                file: name.to_string(),
                line: 1,
                column: key[0].to_string(),
                message: "header row not found".into(),
            })?;
        let columns = rows[header_at]
            .1
            .iter()
            .enumerate()
            .map(|(i, c)| (c.trim().to_ascii_lowercase(), i))
            .collect();
        let rows = rows
            .into_iter()
            .skip(header_at + 1)
            .filter(|(_, r)| r.iter().any(|c| !c.trim().is_empty()))
            .collect();
        Ok(Self {
            file: name.to_string(),
            columns,
            rows,
        })
    }

    fn err(&self, line: u64, column: &str, message: impl Into<String>) -> FeederError {
        FeederError::Parse {
            file: self.file.clone(),
            line,
            column: column.to_string(),
            message: message.into(),
        }
    }

    fn text<'r>(&self, line: u64, row: &'r csv::StringRecord, column: &str) -> Result<&'r str, FeederError> {
        let idx = *self
            .columns
            .get(&column.to_ascii_lowercase())
            .ok_or_else(|| self.err(line, column, "missing column"))?;
        let cell = row.get(idx).map(str::trim).unwrap_or("");
        if cell.is_empty() {
            return Err(self.err(line, column, "empty cell"));
        }
        Ok(cell)
    }

    fn optional<'r>(&self, row: &'r csv::StringRecord, column: &str) -> Option<&'r str> {
        let idx = *self.columns.get(&column.to_ascii_lowercase())?;
        row.get(idx).map(str::trim).filter(|c| !c.is_empty())
    }

    fn number(&self, line: u64, row: &csv::StringRecord, column: &str) -> Result<f64, FeederError> {
        let cell = self.text(line, row, column)?;
        parse_f64(cell).ok_or_else(|| self.err(line, column, format!("'{cell}' is not a finite number")))
    }

    fn optional_number(&self, line: u64, row: &csv::StringRecord, column: &str, default: f64) -> Result<f64, FeederError> {
        match self.optional(row, column) {
            None => Ok(default),
            Some(cell) => parse_f64(cell).ok_or_else(|| self.err(line, column, format!("'{cell}' is not a finite number"))),
        }
    }
}

fn parse_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn read_records(path: &Path) -> Result<Vec<(u64, csv::StringRecord)>, FeederError> {
    let file = File::open(path).map_err(|source| FeederError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(file);
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let mut out = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| FeederError::Parse {
            file: name.clone(),
            line: e.position().map(|p| p.line()).unwrap_or(0),
            column: String::new(),
            message: e.to_string(),
        })?;
        let line = rec.position().map(|p| p.line()).unwrap_or(0);
        out.push((line, rec));
    }
    Ok(out)
}

/// Metres per unit of the length unit names used in the dataset.
fn metres_per(unit: &str) -> Option<f64> {
    match unit.to_ascii_lowercase().as_str() {
        "m" => Some(1.0),
        "km" => Some(1000.0),
        "ft" => Some(0.3048),
        "kft" => Some(304.8),
        "mi" => Some(1609.344),
        _ => None,
    }
}

fn line_codes(dir: &Path) -> Result<Vec<LineCode>, FeederError> {
    let t = Table::read(dir, "LineCodes.csv", &["name"])?;
    let mut out = Vec::new();
    for (line, row) in &t.rows {
        let line = *line;
        let per_km = match t.optional(row, "units") {
            None => 1.0,
            Some(u) => {
                let m = metres_per(u).ok_or_else(|| t.err(line, "Units", format!("unknown unit '{u}'")))?;
                1000.0 / m
            }
        };
        out.push(LineCode {
            name: t.text(line, row, "name")?.to_string(),
            r1_ohm_per_km: t.number(line, row, "r1")? * per_km,
            x1_ohm_per_km: t.number(line, row, "x1")? * per_km,
            r0_ohm_per_km: t.number(line, row, "r0")? * per_km,
            x0_ohm_per_km: t.number(line, row, "x0")? * per_km,
            c1_nf_per_km: t.optional_number(line, row, "c1", 0.0)? * per_km,
            c0_nf_per_km: t.optional_number(line, row, "c0", 0.0)? * per_km,
        });
    }
    Ok(out)
}

fn segments(dir: &Path) -> Result<Vec<LineSegment>, FeederError> {
    let t = Table::read(dir, "Lines.csv", &["name"])?;
    let mut out = Vec::new();
    for (line, row) in &t.rows {
        let line = *line;
        let scale = match t.optional(row, "units") {
            None => 1.0,
            Some(u) => metres_per(u).ok_or_else(|| t.err(line, "Units", format!("unknown unit '{u}'")))?,
        };
        let length = t.number(line, row, "length")?;
        if length <= 0.0 {
            return Err(t.err(line, "Length", format!("length must be positive, got {length}")));
        }
        out.push(LineSegment {
            name: t.text(line, row, "name")?.to_string(),
            from_bus: t.text(line, row, "bus1")?.into(),
            to_bus: t.text(line, row, "bus2")?.into(),
            length_m: length * scale,
            line_code: t.text(line, row, "linecode")?.to_string(),
        });
    }
    Ok(out)
}

fn loads(dir: &Path) -> Result<Vec<LoadPoint>, FeederError> {
    let t = Table::read(dir, "Loads.csv", &["name"])?;
    let mut out = Vec::new();
    for (line, row) in &t.rows {
        let line = *line;
        let phase_text = t.text(line, row, "phases")?;
        let phase: Phase = phase_text.parse().map_err(|m: String| t.err(line, "phases", m))?;
        let kw = t.number(line, row, "kw")?;
        if kw < 0.0 {
            return Err(t.err(line, "kW", "negative load"));
        }
        let pf = t.optional_number(line, row, "pf", 0.95)?;
        if !(pf > 0.0 && pf <= 1.0) {
            return Err(t.err(line, "PF", format!("power factor {pf} outside (0, 1]")));
        }
        out.push(LoadPoint {
            name: t.text(line, row, "name")?.to_string(),
            bus: t.text(line, row, "bus")?.into(),
            phase,
            kw,
            power_factor: pf,
        });
    }
    Ok(out)
}

fn buses(dir: &Path) -> Result<Vec<Bus>, FeederError> {
    let path = dir.join("Buscoords.csv");
    if !path.exists() {
        return Ok(Vec::new());
    }
    let rows = read_records(&path)?;
    let mut out = Vec::new();
    for (line, row) in rows {
        let id = row.get(0).map(str::trim).unwrap_or("");
        if id.is_empty() || id.eq_ignore_ascii_case("busname") || id.eq_ignore_ascii_case("bus") {
            continue;
        }
        let coord = |i: usize, name: &str| -> Result<Option<f64>, FeederError> {
            match row.get(i).map(str::trim).filter(|c| !c.is_empty()) {
                None => Ok(None),
                Some(c) => parse_f64(c).map(Some).ok_or_else(|| FeederError::Parse {
                    file: "Buscoords.csv".into(),
                    line,
                    column: name.into(),
                    message: format!("'{c}' is not a finite number"),
                }),
            }
        };
        out.push(Bus {
            id: id.into(),
            x_m: coord(1, "x")?,
            y_m: coord(2, "y")?,
        });
    }
    Ok(out)
}

/// Key/value rows: `Voltage` (kV line-to-line), `pu`, `Angle` (degrees,
/// phase a), `Bus`, and optionally `R1`, `X1`, `R0`, `X0` in ohms.
fn source(dir: &Path, fallback_bus: Option<&BusId>) -> Result<SourceSpec, FeederError> {
    let path = dir.join("Source.csv");
    let mut values: HashMap<String, (u64, String)> = HashMap::new();
    for (line, row) in read_records(&path)? {
        let key = row.get(0).map(str::trim).unwrap_or("");
        if key.is_empty() {
            continue;
        }
        let value = row.get(1).map(str::trim).unwrap_or("").to_string();
        values.insert(key.to_ascii_lowercase(), (line, value));
    }
    let number = |key: &str| -> Result<Option<f64>, FeederError> {
        match values.get(key) {
            None => Ok(None),
            Some((line, v)) => parse_f64(v).map(Some).ok_or_else(|| FeederError::Parse {
                file: "Source.csv".into(),
                line: *line,
                column: key.into(),
                message: format!("'{v}' is not a finite number"),
            }),
        }
    };
    let bus = match values.get("bus") {
        Some((_, b)) if !b.is_empty() => BusId::new(b.clone()),
        _ => fallback_bus
            .cloned()
            .ok_or_else(|| FeederError::Invalid("Source.csv names no bus and there are no lines".into()))?,
    };
    let mut spec = SourceSpec::default_at(bus);
    if let Some(kv) = number("voltage")? {
        spec.base_kv_ll = kv;
    }
    if let Some(pu) = number("pu")? {
        spec.voltage_pu = [pu; 3];
    }
    if let Some(angle) = number("angle")? {
        spec.angle_deg = [angle, angle - 120.0, angle + 120.0];
    }
    let seq = [number("r1")?, number("x1")?, number("r0")?, number("x0")?];
    if seq.iter().any(Option::is_some) {
        let [r1, x1, r0, x0] = seq.map(|v| v.unwrap_or(0.0));
        spec.impedance_ohm = PhaseMatrix::from_sequence(Complex64::new(r1, x1), Complex64::new(r0, x0));
    }
    Ok(spec)
}

/// Reads and validates a feeder directory in the IEEE European LV layout.
pub fn load_feeder(dir: &Path) -> Result<FeederModel, FeederError> {
    if !dir.is_dir() {
        return Err(FeederError::Io {
            path: PathBuf::from(dir),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        });
    }
    let line_codes = line_codes(dir)?;
    let segments = segments(dir)?;
    let loads = loads(dir)?;
    let buses = buses(dir)?;
    let source = source(dir, segments.first().map(|s| &s.from_bus))?;
    let name = dir
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "feeder".into());
    FeederModel::from_parts(FeederParts {
        name,
        source,
        line_codes,
        buses,
        segments,
        loads,
        generators: Vec::new(),
    })
}
