//! CSV and JSON output. Numbers are rounded to 15 significant digits and
//! files are written to a temporary sibling and renamed into place.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use tempfile::NamedTempFile;

use crate::duality::DualityRecord;
use crate::error::{Error, Result};
use crate::hbt::FringePattern;
use crate::sampling::{EventBatch, Events, HomOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(format!("unknown format `{other}` (csv, json)")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        })
    }
}

/// `x` rounded to 15 significant digits.
pub fn round15(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    format!("{x:.14e}").parse().unwrap_or(x)
}

/// Shortest decimal form of `x` rounded to 15 significant digits.
pub fn format15(x: f64) -> String {
    let r = round15(x);
    let a = r.abs();
    if r == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn format_err(path: &Path, message: impl fmt::Display) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

/// Writes through `body` into a temporary file next to `path`, then renames
/// it over `path`.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = NamedTempFile::new_in(dir).map_err(io_err(path))?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        body(&mut w)?;
        w.flush().map_err(io_err(path))?;
    }
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e.error,
    })?;
    Ok(())
}

fn write_csv(path: &Path, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(header).map_err(|e| format_err(path, e))?;
        for row in rows {
            csv.write_record(&row).map_err(|e| format_err(path, e))?;
        }
        csv.flush().map_err(io_err(path))
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(|e| format_err(path, e))?;
        writeln!(w).map_err(io_err(path))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PatternColumns {
    dx: Vec<f64>,
    density: Vec<f64>,
    corrected: Vec<f64>,
}

fn rounded(v: &[f64]) -> Vec<f64> {
    v.iter().copied().map(round15).collect()
}

/// Writes `dx,density,corrected`. Empty patterns are rejected before any
/// file is touched.
pub fn emit_pattern(pattern: &FringePattern, path: &Path, format: OutputFormat) -> Result<()> {
    if pattern.is_empty() {
        return Err(Error::EmptyPattern);
    }
    match format {
        OutputFormat::Csv => write_csv(
            path,
            &["dx", "density", "corrected"],
            (0..pattern.len()).map(|i| {
                vec![
                    format15(pattern.separations[i]),
                    format15(pattern.densities[i]),
                    format15(pattern.corrected[i]),
                ]
            }),
        ),
        OutputFormat::Json => write_json(
            path,
            &PatternColumns {
                dx: rounded(&pattern.separations),
                density: rounded(&pattern.densities),
                corrected: rounded(&pattern.corrected),
            },
        ),
    }
}

fn parse_f64(path: &Path, field: &str) -> Result<f64> {
    field
        .trim()
        .parse()
        .map_err(|_| format_err(path, format!("not a number: `{field}`")))
}

fn read_csv_columns(path: &Path, header: &[&str]) -> Result<Vec<Vec<String>>> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::Reader::from_reader(BufReader::new(file));
    let found = rdr.headers().map_err(|e| format_err(path, e))?.clone();
    if found.iter().collect::<Vec<_>>() != header {
        return Err(format_err(path, format!("expected header {header:?}, found {found:?}")));
    }
    rdr.records()
        .map(|r| {
            r.map(|rec| rec.iter().map(str::to_owned).collect())
                .map_err(|e| format_err(path, e))
        })
        .collect()
}

/// Reads a file written by [`emit_pattern`]. The fringe period is not stored
/// and must be supplied.
pub fn read_pattern(path: &Path, format: OutputFormat, period: f64) -> Result<FringePattern> {
    let cols = match format {
        OutputFormat::Csv => {
            let rows = read_csv_columns(path, &["dx", "density", "corrected"])?;
            let mut cols = PatternColumns {
                dx: Vec::with_capacity(rows.len()),
                density: Vec::with_capacity(rows.len()),
                corrected: Vec::with_capacity(rows.len()),
            };
            for r in rows {
                cols.dx.push(parse_f64(path, &r[0])?);
                cols.density.push(parse_f64(path, &r[1])?);
                cols.corrected.push(parse_f64(path, &r[2])?);
            }
            cols
        }
        OutputFormat::Json => {
            let file = File::open(path).map_err(io_err(path))?;
            serde_json::from_reader(BufReader::new(file)).map_err(|e| format_err(path, e))?
        }
    };
    FringePattern::new(cols.dx, cols.density, cols.corrected, period)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityRow {
    pub s: f64,
    #[serde(rename = "D")]
    pub d: f64,
    #[serde(rename = "V")]
    pub v: f64,
    pub sum: f64,
    pub residual: f64,
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub std_error: Option<f64>,
}

impl From<&DualityRecord> for DualityRow {
    fn from(r: &DualityRecord) -> Self {
        Self {
            s: round15(r.overlap_modulus),
            d: round15(r.distinguishability),
            v: round15(r.visibility),
            sum: round15(r.sum),
            residual: round15(r.residual),
            experiment: r.experiment.to_string(),
            std_error: r.std_error.map(round15),
        }
    }
}

const DUALITY_HEADER: [&str; 6] = ["s", "D", "V", "sum", "residual", "experiment"];

/// Writes `s,D,V,sum,residual,experiment`.
pub fn emit_duality(records: &[DualityRecord], path: &Path, format: OutputFormat) -> Result<()> {
    let rows: Vec<DualityRow> = records.iter().map(DualityRow::from).collect();
    match format {
        OutputFormat::Csv => write_csv(
            path,
            &DUALITY_HEADER,
            rows.iter().map(|r| {
                vec![
                    format15(r.s),
                    format15(r.d),
                    format15(r.v),
                    format15(r.sum),
                    format15(r.residual),
                    r.experiment.clone(),
                ]
            }),
        ),
        OutputFormat::Json => write_json(path, &rows),
    }
}

pub fn read_duality(path: &Path, format: OutputFormat) -> Result<Vec<DualityRow>> {
    match format {
        OutputFormat::Csv => read_csv_columns(path, &DUALITY_HEADER)?
            .into_iter()
            .map(|r| {
                Ok(DualityRow {
                    s: parse_f64(path, &r[0])?,
                    d: parse_f64(path, &r[1])?,
                    v: parse_f64(path, &r[2])?,
                    sum: parse_f64(path, &r[3])?,
                    residual: parse_f64(path, &r[4])?,
                    experiment: r[5].clone(),
                    std_error: None,
                })
            })
            .collect(),
        OutputFormat::Json => {
            let file = File::open(path).map_err(io_err(path))?;
            serde_json::from_reader(BufReader::new(file)).map_err(|e| format_err(path, e))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct HbtEventRow {
    x1: f64,
    x2: f64,
}

#[derive(Serialize, Deserialize)]
struct HomEventRow {
    outcome: HomOutcome,
}

/// Writes `x1,x2` rows (HBT) or `outcome` rows (HOM).
pub fn emit_events(batch: &EventBatch, path: &Path, format: OutputFormat) -> Result<()> {
    match (&batch.events, format) {
        (Events::Hbt(e), OutputFormat::Csv) => write_csv(
            path,
            &["x1", "x2"],
            e.iter().map(|&(x1, x2)| vec![format15(x1), format15(x2)]),
        ),
        (Events::Hom(e), OutputFormat::Csv) => {
            write_csv(path, &["outcome"], e.iter().map(|o| vec![o.label().to_owned()]))
        }
        (Events::Hbt(e), OutputFormat::Json) => {
            let rows: Vec<HbtEventRow> = e
                .iter()
                .map(|&(x1, x2)| HbtEventRow {
                    x1: round15(x1),
                    x2: round15(x2),
                })
                .collect();
            write_json(path, &rows)
        }
        (Events::Hom(e), OutputFormat::Json) => {
            let rows: Vec<HomEventRow> = e.iter().map(|&outcome| HomEventRow { outcome }).collect();
            write_json(path, &rows)
        }
    }
}

/// Reads an event file written by [`emit_events`]; the seed is not stored.
pub fn read_events(path: &Path, format: OutputFormat, seed: u64) -> Result<EventBatch> {
    let events = match format {
        OutputFormat::Csv => {
            let file = File::open(path).map_err(io_err(path))?;
            let mut rdr = csv::Reader::from_reader(BufReader::new(file));
            let header: Vec<String> = rdr
                .headers()
                .map_err(|e| format_err(path, e))?
                .iter()
                .map(str::to_owned)
                .collect();
            match header.iter().map(String::as_str).collect::<Vec<_>>().as_slice() {
                ["x1", "x2"] => Events::Hbt(
                    rdr.deserialize::<HbtEventRow>()
                        .map(|r| r.map(|r| (r.x1, r.x2)).map_err(|e| format_err(path, e)))
                        .collect::<Result<_>>()?,
                ),
                ["outcome"] => Events::Hom(
                    rdr.records()
                        .map(|r| {
                            let r = r.map_err(|e| format_err(path, e))?;
                            HomOutcome::from_label(&r[0])
                                .ok_or_else(|| format_err(path, format!("unknown outcome `{}`", &r[0])))
                        })
                        .collect::<Result<_>>()?,
                ),
                other => return Err(format_err(path, format!("unrecognized header {other:?}"))),
            }
        }
        OutputFormat::Json => {
            let text = std::fs::read_to_string(path).map_err(io_err(path))?;
            if let Ok(rows) = serde_json::from_str::<Vec<HbtEventRow>>(&text) {
                Events::Hbt(rows.into_iter().map(|r| (r.x1, r.x2)).collect())
            } else {
                let rows: Vec<HomEventRow> = serde_json::from_str(&text).map_err(|e| format_err(path, e))?;
                Events::Hom(rows.into_iter().map(|r| r.outcome).collect())
            }
        }
    };
    Ok(EventBatch {
        seed,
        events,
        acceptance_rate: None,
    })
}

/// Writes `tau,p_c` rows of a HOM delay scan.
pub fn emit_delay_scan(scan: &[(f64, f64)], path: &Path, format: OutputFormat) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        tau: f64,
        p_c: f64,
    }
    match format {
        OutputFormat::Csv => write_csv(
            path,
            &["tau", "p_c"],
            scan.iter().map(|&(t, p)| vec![format15(t), format15(p)]),
        ),
        OutputFormat::Json => {
            let rows: Vec<Row> = scan
                .iter()
                .map(|&(t, p)| Row {
                    tau: round15(t),
                    p_c: round15(p),
                })
                .collect();
            write_json(path, &rows)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_pattern_creates_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let empty = FringePattern::new(vec![], vec![], vec![], 1.0).unwrap();
        assert!(matches!(
            emit_pattern(&empty, &path, OutputFormat::Csv),
            Err(Error::EmptyPattern)
        ));
        assert!(!path.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }

    #[test]
    fn three_point_pattern_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let p = FringePattern::new(vec![-1.0, 0.0, 1.0], vec![0.25, 0.5, 0.125], vec![0.5, 2.0, 0.5], 2.0).unwrap();
        for format in [OutputFormat::Csv, OutputFormat::Json] {
            let path = dir.path().join(format!("p.{format}"));
            emit_pattern(&p, &path, format).unwrap();
            let back = read_pattern(&path, format, 2.0).unwrap();
            assert_eq!(back, p);
        }
    }

    #[test]
    fn io_errors_carry_the_path() {
        let p = FringePattern::new(vec![0.0], vec![1.0], vec![1.0], 1.0).unwrap();
        let path = Path::new("/nonexistent-dir/for/sure/p.csv");
        let err = emit_pattern(&p, path, OutputFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("/nonexistent-dir/for/sure/p.csv"));
    }

    #[test]
    fn format15_examples() {
        assert_eq!(format15(0.5), "0.5");
        assert_eq!(format15(0.32), "0.32");
        assert_eq!(format15(1.0 / 3.0), "0.333333333333333");
        assert_eq!(format15(0.0), "0");
        assert_eq!(format15(1e-20), "1e-20");
        assert_eq!("csv".parse::<OutputFormat>().unwrap(), OutputFormat::Csv);
        assert!("xml".parse::<OutputFormat>().is_err());
    }

    proptest! {
        #[test]
        fn fifteen_digit_fidelity(x in proptest::num::f64::NORMAL) {
            let text = format15(x);
            let back: f64 = text.parse().unwrap();
            prop_assert_eq!(back, round15(x));
            prop_assert!((back - x).abs() <= 5e-15 * x.abs());
            // re-emission is a fixed point
            prop_assert_eq!(format15(back), text);
        }
    }
}
