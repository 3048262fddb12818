//! Sweep CSV: `#` metadata lines, a header row, then one row per point.

use std::io::{BufRead, BufReader, Read, Write};

use qdot_core::Mechanism;
use thiserror::Error;

use crate::config::RunConfig;
use crate::sweep::SweepRow;

pub const COLUMNS: [&str; 26] = [
    "index",
    "w",
    "big_r_nm",
    "r_nm",
    "eps10_J",
    "t_not_s",
    "t_not0_s",
    "t_not1_s",
    "t_cnot_s",
    "n_real",
    "n",
    "v_b_tuned_J",
    "fidelity_identity",
    "fidelity_not",
    "w_photon_per_s",
    "w_photon_bound_per_s",
    "w_da_per_s",
    "w_pa_t_per_s",
    "w_pa_l_per_s",
    "total_per_s",
    "dominant",
    "solver_iterations",
    "quadrature_nodes",
    "quadrature_change",
    "succeeded",
    "error",
];

#[derive(Debug, Error)]
pub enum CsvError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}, column {column}: {message}")]
    Field { row: usize, column: &'static str, message: String },
    #[error("header mismatch: expected {expected:?}")]
    Header { expected: Vec<&'static str> },
}

/// Metadata written as `# key: value` lines ahead of the table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CsvMeta {
    pub entries: Vec<(String, String)>,
}

impl CsvMeta {
    /// Metadata for a run. `timestamp` is the only non-deterministic entry.
    pub fn for_run(cfg: &RunConfig, timestamp: Option<u64>) -> Self {
        let mut entries = vec![
            ("generator".to_string(), format!("qdot {}", env!("CARGO_PKG_VERSION"))),
            ("config_sha256".to_string(), cfg.hash()),
            ("omega_convention".to_string(), format!("{:?}", cfg.convention)),
            ("longitudinal_piezo_integrand".to_string(), cfg.eq57.to_string()),
            ("sweep_parameter".to_string(), cfg.sweep.parameter.to_string()),
            (
                "coulomb_orientation".to_string(),
                "control dot rotated 90 degrees, axis through both dot centres; control point (x,y) sits at (-y, -R-x) in target coordinates"
                    .to_string(),
            ),
            (
                "units".to_string(),
                "lengths nm, energies J, times s, rates 1/s; w dimensionless".to_string(),
            ),
        ];
        if let Some(t) = timestamp {
            entries.push(("timestamp_unix_s (non-deterministic)".to_string(), t.to_string()));
        }
        Self { entries }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}

fn float(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

fn int<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn record(row: &SweepRow) -> Vec<String> {
    vec![
        row.index.to_string(),
        format!("{:.16e}", row.w),
        float(row.big_r_nm),
        float(row.r_nm),
        float(row.eps10_j),
        float(row.t_not_s),
        float(row.t_not0_s),
        float(row.t_not1_s),
        float(row.t_cnot_s),
        float(row.n_real),
        int(row.n),
        float(row.v_b_tuned_j),
        float(row.fidelity_identity),
        float(row.fidelity_not),
        float(row.w_photon),
        float(row.w_photon_bound),
        float(row.w_da),
        float(row.w_pa_t),
        float(row.w_pa_l),
        float(row.total),
        int(row.dominant),
        int(row.solver_iterations),
        int(row.quadrature_nodes),
        float(row.quadrature_change),
        row.succeeded().to_string(),
        row.error.clone().unwrap_or_default(),
    ]
}

pub fn write_csv<W: Write>(mut out: W, meta: &CsvMeta, rows: &[SweepRow]) -> Result<(), CsvError> {
    for (k, v) in &meta.entries {
        writeln!(out, "# {k}: {v}")?;
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(COLUMNS)?;
    for row in rows {
        w.write_record(record(row))?;
    }
    w.flush()?;
    Ok(())
}

fn parse<T: std::str::FromStr>(s: &str, row: usize, column: &'static str) -> Result<Option<T>, CsvError>
where
    T::Err: std::fmt::Display,
{
    if s.is_empty() {
        return Ok(None);
    }
    s.parse().map(Some).map_err(|e: T::Err| CsvError::Field { row, column, message: e.to_string() })
}

fn required<T>(v: Option<T>, row: usize, column: &'static str) -> Result<T, CsvError> {
    v.ok_or(CsvError::Field { row, column, message: "missing value".to_string() })
}

/// Reads what [`write_csv`] wrote. Floats round-trip bit for bit.
pub fn read_csv<R: Read>(input: R) -> Result<(CsvMeta, Vec<SweepRow>), CsvError> {
    let mut text = String::new();
    BufReader::new(input).read_to_string(&mut text)?;
    let mut meta = CsvMeta::default();
    for line in text.as_bytes().lines() {
        let line = line?;
        let Some(rest) = line.strip_prefix('#') else { break };
        if let Some((k, v)) = rest.trim().split_once(": ") {
            meta.entries.push((k.to_string(), v.to_string()));
        }
    }
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    if reader.headers()?.iter().ne(COLUMNS.iter().copied()) {
        return Err(CsvError::Header { expected: COLUMNS.to_vec() });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let f = |c: usize| rec.get(c).unwrap_or("");
        let fl = |c: usize| parse::<f64>(f(c), i, COLUMNS[c]);
        let error = f(25);
        rows.push(SweepRow {
            index: required(parse(f(0), i, COLUMNS[0])?, i, COLUMNS[0])?,
            w: required(fl(1)?, i, COLUMNS[1])?,
            big_r_nm: fl(2)?,
            r_nm: fl(3)?,
            eps10_j: fl(4)?,
            t_not_s: fl(5)?,
            t_not0_s: fl(6)?,
            t_not1_s: fl(7)?,
            t_cnot_s: fl(8)?,
            n_real: fl(9)?,
            n: parse(f(10), i, COLUMNS[10])?,
            v_b_tuned_j: fl(11)?,
            fidelity_identity: fl(12)?,
            fidelity_not: fl(13)?,
            w_photon: fl(14)?,
            w_photon_bound: fl(15)?,
            w_da: fl(16)?,
            w_pa_t: fl(17)?,
            w_pa_l: fl(18)?,
            total: fl(19)?,
            dominant: parse::<Mechanism>(f(20), i, COLUMNS[20])?,
            solver_iterations: parse(f(21), i, COLUMNS[21])?,
            quadrature_nodes: parse(f(22), i, COLUMNS[22])?,
            quadrature_change: fl(23)?,
            error: (!error.is_empty()).then(|| error.to_string()),
        });
    }
    Ok((meta, rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Vec<SweepRow> {
        vec![
            SweepRow {
                index: 0,
                w: 0.1,
                big_r_nm: Some(60.0),
                r_nm: Some(std::f64::consts::PI * 3.0),
                eps10_j: Some(1.234_567_890_123_456_7e-23),
                t_not_s: Some(2.0e-11 / 3.0),
                n: Some(391),
                n_real: Some(391.0),
                total: Some(f64::MIN_POSITIVE),
                dominant: Some(Mechanism::Piezoelectric),
                solver_iterations: Some(1234),
                quadrature_change: Some(3.5e-9),
                ..Default::default()
            },
            SweepRow {
                index: 1,
                w: 0.2,
                error: Some("eigensolver did not converge, \"quoted\"\nand multi-line".to_string()),
                ..Default::default()
            },
        ]
    }

    #[test]
    fn round_trip_is_exact() {
        let cfg = RunConfig::default();
        let meta = CsvMeta::for_run(&cfg, Some(42));
        let mut buf = Vec::new();
        write_csv(&mut buf, &meta, &sample()).unwrap();
        let (m, rows) = read_csv(buf.as_slice()).unwrap();
        assert_eq!(rows, sample());
        assert_eq!(m, meta);
        assert_eq!(m.get("config_sha256"), Some(cfg.hash().as_str()));
    }

    #[test]
    fn bad_cells_are_reported() {
        let mut buf = Vec::new();
        write_csv(&mut buf, &CsvMeta::default(), &sample()[..1]).unwrap();
        let text = String::from_utf8(buf).unwrap().replace("391,", "many,");
        assert!(matches!(read_csv(text.as_bytes()), Err(CsvError::Field { column: "n", .. })));
        assert!(matches!(read_csv("a,b\n1,2\n".as_bytes()), Err(CsvError::Header { .. })));
    }
}
