use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dr::Method;
use crate::error::{Error, Result};
use crate::experiments::ExperimentKind;
use crate::metrics::mean_std;

/// Column order of `results.csv`.
pub const RESULTS_HEADER: [&str; 16] = [
    "method",
    "t",
    "n_x",
    "n_y",
    "m_self",
    "m_shared",
    "k",
    "gamma_self",
    "gamma_shared",
    "rc",
    "rc0",
    "rc_prime",
    "trial",
    "proj_trial",
    "status",
    "rc0_std",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    /// The method could not be fitted (plain CCA with a singular block).
    Degenerate,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Degenerate => "degenerate",
        }
    }
}

/// One fitted-and-evaluated trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub method: Method,
    pub t: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub m_self: usize,
    pub m_shared: usize,
    pub k: usize,
    pub gamma_self: f64,
    pub gamma_shared: f64,
    pub rc: Option<f64>,
    pub rc0: f64,
    pub rc_prime: Option<f64>,
    pub trial: usize,
    pub proj_trial: usize,
    pub status: Status,
    pub rc0_std: f64,
}

/// Identity of a grid cell: everything but the trial indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CellKey {
    pub method: Method,
    pub t: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub m_self: usize,
    pub m_shared: usize,
    pub k: usize,
    /// `f64::to_bits` of the SNRs; the order matches numeric order for
    /// non-negative values.
    pub gamma_self_bits: u64,
    pub gamma_shared_bits: u64,
}

impl TrialRecord {
    pub fn cell_key(&self) -> CellKey {
        CellKey {
            method: self.method,
            t: self.t,
            n_x: self.n_x,
            n_y: self.n_y,
            m_self: self.m_self,
            m_shared: self.m_shared,
            k: self.k,
            gamma_self_bits: self.gamma_self.to_bits(),
            gamma_shared_bits: self.gamma_shared.to_bits(),
        }
    }

    fn sort_key(&self) -> (CellKey, usize, usize) {
        (self.cell_key(), self.proj_trial, self.trial)
    }
}

/// Aggregate of all trials in a cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub method: Method,
    pub t: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub m_self: usize,
    pub m_shared: usize,
    pub k: usize,
    pub gamma_self: f64,
    pub gamma_shared: f64,
    pub n_ok: usize,
    pub n_degenerate: usize,
    /// Mean RC′ over successful trials; `None` when every trial failed.
    pub mean: Option<f64>,
    /// Sample std over the flattened trials.
    pub std: Option<f64>,
    /// Std of the per-projection means.
    pub std_between_proj: Option<f64>,
    /// Mean over projections of the within-projection std.
    pub std_within_proj: Option<f64>,
    pub rc_mean: Option<f64>,
    pub rc0: f64,
    pub rc0_std: f64,
}

impl CellSummary {
    pub fn is_degenerate(&self) -> bool {
        self.n_ok == 0
    }

    /// `sqrt((s_a² + s_b²) / 2)`, the pooled std of two equally sized cells.
    pub fn pooled_std(&self, other: &CellSummary) -> f64 {
        let a = self.std.unwrap_or(0.0);
        let b = other.std.unwrap_or(0.0);
        ((a * a + b * b) / 2.0).sqrt()
    }
}

/// RC₀ estimate used for one `(T_test, k)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rc0Cell {
    pub t: usize,
    pub k_x: usize,
    pub k_y: usize,
    pub m_shared: usize,
    pub n_trials: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, values: impl IntoIterator<Item = f64>) -> Self {
        Axis { name: name.to_string(), values: values.into_iter().collect() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub kind: ExperimentKind,
    pub axes: Vec<Axis>,
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
    pub rc0: Vec<Rc0Cell>,
    /// Echo of the spec and seeds.
    pub metadata: serde_json::Value,
}

#[derive(Serialize, Deserialize)]
struct GridJson {
    format: String,
    version: u32,
    kind: ExperimentKind,
    axes: Vec<Axis>,
    rc0: Vec<Rc0Cell>,
    metadata: serde_json::Value,
    #[serde(default, skip_deserializing)]
    cells: Vec<CellSummary>,
}

fn summarize(key: &CellKey, rows: &[&TrialRecord]) -> CellSummary {
    let ok: Vec<&&TrialRecord> = rows.iter().filter(|r| r.status == Status::Ok).collect();
    let values: Vec<f64> = ok.iter().filter_map(|r| r.rc_prime).collect();
    let rcs: Vec<f64> = ok.iter().filter_map(|r| r.rc).collect();
    let (mean, std) = if values.is_empty() {
        (None, None)
    } else {
        let (m, s) = mean_std(&values);
        (Some(m), Some(s))
    };

    let mut by_proj: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in &ok {
        if let Some(v) = r.rc_prime {
            by_proj.entry(r.proj_trial).or_default().push(v);
        }
    }
    let (std_between_proj, std_within_proj) = if by_proj.is_empty() {
        (None, None)
    } else {
        let means: Vec<f64> = by_proj.values().map(|v| mean_std(v).0).collect();
        let within: Vec<f64> = by_proj.values().map(|v| mean_std(v).1).collect();
        (Some(mean_std(&means).1), Some(mean_std(&within).0))
    };

    let first = rows[0];
    CellSummary {
        method: key.method,
        t: key.t,
        n_x: key.n_x,
        n_y: key.n_y,
        m_self: key.m_self,
        m_shared: key.m_shared,
        k: key.k,
        gamma_self: first.gamma_self,
        gamma_shared: first.gamma_shared,
        n_ok: ok.len(),
        n_degenerate: rows.len() - ok.len(),
        mean,
        std,
        std_between_proj,
        std_within_proj,
        rc_mean: if rcs.is_empty() { None } else { Some(mean_std(&rcs).0) },
        rc0: first.rc0,
        rc0_std: first.rc0_std,
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn parse_f64(s: &str, line: usize, field: &str) -> Result<f64> {
    s.parse::<f64>().map_err(|e| Error::Csv { line, message: format!("{field}: {e}") })
}

fn parse_usize(s: &str, line: usize, field: &str) -> Result<usize> {
    s.parse::<usize>().map_err(|e| Error::Csv { line, message: format!("{field}: {e}") })
}

impl GridResult {
    /// Sort the records by cell and trial and rebuild the cell summaries.
    pub fn from_parts(
        kind: ExperimentKind,
        axes: Vec<Axis>,
        mut records: Vec<TrialRecord>,
        mut rc0: Vec<Rc0Cell>,
        metadata: serde_json::Value,
    ) -> Self {
        records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        rc0.sort_by_key(|c| (c.t, c.k_x, c.k_y, c.m_shared, c.n_trials));
        let mut groups: BTreeMap<CellKey, Vec<&TrialRecord>> = BTreeMap::new();
        for r in &records {
            groups.entry(r.cell_key()).or_default().push(r);
        }
        let cells = groups.iter().map(|(k, rows)| summarize(k, rows)).collect();
        GridResult { kind, axes, records, cells, rc0, metadata }
    }

    /// Cells of one method, in key order.
    pub fn cells_for(&self, method: Method) -> impl Iterator<Item = &CellSummary> {
        self.cells.iter().filter(move |c| c.method == method)
    }

    /// The cell matching every given coordinate.
    pub fn cell(&self, method: Method, t: usize, k: usize, gamma_self: f64, gamma_shared: f64) -> Option<&CellSummary> {
        self.cells.iter().find(|c| {
            c.method == method
                && c.t == t
                && c.k == k
                && c.gamma_self.to_bits() == gamma_self.to_bits()
                && c.gamma_shared.to_bits() == gamma_shared.to_bits()
        })
    }

    pub fn methods(&self) -> Vec<Method> {
        let mut m: Vec<Method> = self.cells.iter().map(|c| c.method).collect();
        m.sort();
        m.dedup();
        m
    }

    pub fn write_results_csv<W: Write>(&self, out: W) -> Result<()> {
        write_records_csv(out, &self.records)
    }

    pub fn write_grid_json<W: Write>(&self, out: W) -> Result<()> {
        let doc = GridJson {
            format: "sdrbench-grid".into(),
            version: 1,
            kind: self.kind,
            axes: self.axes.clone(),
            rc0: self.rc0.clone(),
            metadata: self.metadata.clone(),
            cells: self.cells.clone(),
        };
        serde_json::to_writer_pretty(out, &doc)?;
        Ok(())
    }

    /// Rebuild from `grid.json` and `results.csv`.
    pub fn read<R1: Read, R2: Read>(grid_json: R1, results_csv: R2) -> Result<Self> {
        let doc: GridJson = serde_json::from_reader(grid_json)?;
        if doc.format != "sdrbench-grid" || doc.version != 1 {
            return Err(Error::Inconsistent(format!("unsupported grid file {} v{}", doc.format, doc.version)));
        }
        let records = read_records_csv(results_csv)?;
        Ok(GridResult::from_parts(doc.kind, doc.axes, records, doc.rc0, doc.metadata))
    }

    /// Write `results.csv` and `grid.json` into `dir`.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let mut csv = Vec::new();
        self.write_results_csv(&mut csv)?;
        atomic_write(&dir.join("results.csv"), &csv)?;
        let mut json = Vec::new();
        self.write_grid_json(&mut json)?;
        atomic_write(&dir.join("grid.json"), &json)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let g = std::fs::File::open(dir.join("grid.json"))?;
        let r = std::fs::File::open(dir.join("results.csv"))?;
        GridResult::read(std::io::BufReader::new(g), std::io::BufReader::new(r))
    }
}

/// Write `bytes` to a sibling temp file, then rename over `path`.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_records_csv<W: Write>(out: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::Csv { line: 0, message: e.to_string() };
    w.write_record(RESULTS_HEADER).map_err(csv_err)?;
    for r in records {
        let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        w.write_record([
            r.method.as_str().to_string(),
            r.t.to_string(),
            r.n_x.to_string(),
            r.n_y.to_string(),
            r.m_self.to_string(),
            r.m_shared.to_string(),
            r.k.to_string(),
            fmt_f64(r.gamma_self),
            fmt_f64(r.gamma_shared),
            opt(r.rc),
            fmt_f64(r.rc0),
            opt(r.rc_prime),
            r.trial.to_string(),
            r.proj_trial.to_string(),
            r.status.as_str().to_string(),
            fmt_f64(r.rc0_std),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
    let header = rdr.headers().map_err(|e| Error::Csv { line: 1, message: e.to_string() })?.clone();
    if header.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(Error::Csv { line: 1, message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()) });
    }
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Csv { line, message: e.to_string() })?;
        let f = |j: usize| rec.get(j).unwrap_or("");
        let opt = |j: usize| -> Result<Option<f64>> {
            if f(j).is_empty() {
                Ok(None)
            } else {
                parse_f64(f(j), line, RESULTS_HEADER[j]).map(Some)
            }
        };
        let status = match f(14) {
            "ok" => Status::Ok,
            "degenerate" => Status::Degenerate,
            other => return Err(Error::Csv { line, message: format!("unknown status {other:?}") }),
        };
        out.push(TrialRecord {
            method: f(0).parse().map_err(|e: Error| Error::Csv { line, message: e.to_string() })?,
            t: parse_usize(f(1), line, "t")?,
            n_x: parse_usize(f(2), line, "n_x")?,
            n_y: parse_usize(f(3), line, "n_y")?,
            m_self: parse_usize(f(4), line, "m_self")?,
            m_shared: parse_usize(f(5), line, "m_shared")?,
            k: parse_usize(f(6), line, "k")?,
            gamma_self: parse_f64(f(7), line, "gamma_self")?,
            gamma_shared: parse_f64(f(8), line, "gamma_shared")?,
            rc: opt(9)?,
            rc0: parse_f64(f(10), line, "rc0")?,
            rc_prime: opt(11)?,
            trial: parse_usize(f(12), line, "trial")?,
            proj_trial: parse_usize(f(13), line, "proj_trial")?,
            status,
            rc0_std: parse_f64(f(15), line, "rc0_std")?,
        });
    }
    Ok(out)
}
