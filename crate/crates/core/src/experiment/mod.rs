//! Batch runs, tabular output and result persistence for the `pairflip`
//! binary.
//!
//! Artifacts are written through a temporary file in the target directory and
//! renamed into place. Every artifact gets a `<path>.meta.json` sidecar with
//! the full configuration, the crate version and a timestamp.

pub mod verify;

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::bounds::{
    entropy_bound_curve, gap_upper_bound, entropy_time_lower_bound, charge_time_lower_bound, charge_time_gamma_zero_limit,
    Bound,
};
use crate::census::SectorCensus;
use crate::error::{invalid, Result};
use crate::montecarlo::{estimate_tq, SimConfig};

pub use verify::{run_suite, Check, Suite, VerifyOptions, VerifyReport};

/// Version of the CSV/JSON layouts written by this module.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub schema_version: u32,
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config: Value,
    pub threads: Option<usize>,
    pub timestamp_unix: u64,
}

impl Metadata {
    pub fn new(command: impl Into<String>, config: Value, threads: Option<usize>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            config,
            threads,
            timestamp_unix: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        }
    }
}

/// `out.csv` → `out.csv.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

/// Writes `bytes` to `path` via a temporary file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Writes an artifact and its metadata sidecar.
pub fn write_artifact(path: &Path, bytes: &[u8], meta: &Metadata) -> Result<()> {
    write_atomic(path, bytes)?;
    let mut side = serde_json::to_vec_pretty(meta)?;
    side.push(b'\n');
    write_atomic(&sidecar_path(path), &side)
}

fn opt<T: ToString>(x: &Option<T>) -> String {
    x.as_ref().map(ToString::to_string).unwrap_or_default()
}

/// `d,multiplicity,dim_exact,dim_asymptotic,cone_volume,cone_expansion_exact,cone_expansion_asymptotic`
pub fn census_csv(census: &SectorCensus) -> String {
    let mut s = String::from(
        "d,multiplicity,dim_exact,dim_asymptotic,cone_volume,cone_expansion_exact,cone_expansion_asymptotic\n",
    );
    for r in census.rows() {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.d,
            r.multiplicity,
            r.dim_exact,
            opt(&r.dim_asymptotic),
            opt(&r.cone_volume),
            opt(&r.cone_expansion_exact),
            opt(&r.cone_expansion_asymptotic)
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub len: usize,
    pub t_q: Option<u64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub censored: bool,
    pub steps_simulated: u64,
}

/// `t_Q(γ)` for each length, with everything else taken from `base`.
pub fn sweep(base: &SimConfig, lens: &[usize]) -> Result<Vec<SweepRow>> {
    if lens.is_empty() {
        return Err(invalid("sweep needs at least one length"));
    }
    lens.iter()
        .map(|&len| {
            let cfg = SimConfig { len, ..base.clone() };
            cfg.validate()?;
            let fp = estimate_tq(&cfg)?;
            Ok(SweepRow {
                len,
                t_q: fp.t_q,
                ci_low: fp.ci_low,
                ci_high: fp.ci_high,
                censored: fp.censored,
                steps_simulated: fp.steps_simulated,
            })
        })
        .collect()
}

/// `L,t_Q,ci_lo,ci_hi,censored,steps`
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut s = String::from("L,t_Q,ci_lo,ci_hi,censored,steps\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.len,
            opt(&r.t_q),
            opt(&r.ci_low),
            opt(&r.ci_high),
            r.censored,
            r.steps_simulated
        );
    }
    s
}

/// Which bound to tabulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundCurve {
    /// Gap upper bound against `L`.
    Gap,
    /// Entanglement saturation time against `L`.
    EntropyTime,
    /// Charge relaxation time against `L`.
    Charge,
    /// Averaged entropy against `t` at fixed `L` and `d`.
    Entropy,
}

impl std::str::FromStr for BoundCurve {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gap" => Ok(Self::Gap),
            "entropy-time" => Ok(Self::EntropyTime),
            "charge" => Ok(Self::Charge),
            "entropy" => Ok(Self::Entropy),
            _ => Err(crate::Error::Parse(format!(
                "unknown curve {s:?} (expected gap, entropy-time, charge or entropy)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveRequest {
    pub curve: BoundCurve,
    pub n: u32,
    /// x-axis for the `L` curves; the single length for `entropy`.
    pub lens: Vec<usize>,
    pub gamma: f64,
    pub d: f64,
    pub times: Vec<f64>,
    pub bipartite: bool,
}

/// The evaluated bounds behind one curve, one per x value.
pub fn bound_curve(req: &CurveRequest) -> Result<Vec<Bound>> {
    match req.curve {
        BoundCurve::Gap => req.lens.iter().map(|&l| gap_upper_bound(req.n, l)).collect(),
        BoundCurve::EntropyTime => req
            .lens
            .iter()
            .map(|&l| entropy_time_lower_bound(req.n, l, req.gamma))
            .collect(),
        BoundCurve::Charge => req
            .lens
            .iter()
            .map(|&l| {
                let mut b = charge_time_lower_bound(req.n, l, req.gamma)?;
                if b.valid {
                    b.metadata.insert("gamma_zero_limit", charge_time_gamma_zero_limit(req.n, l)?);
                }
                Ok(b)
            })
            .collect(),
        BoundCurve::Entropy => {
            let &[len] = req.lens.as_slice() else {
                return Err(invalid("the entropy curve takes exactly one length"));
            };
            req.times
                .iter()
                .map(|&t| entropy_bound_curve(req.n, len, req.d, t, req.bipartite))
                .collect()
        }
    }
}

/// One row per bound: the x value, `value`, `valid`, then every metadata key
/// that appears in any row (sorted), blank where absent.
pub fn bounds_csv(curve: BoundCurve, rows: &[Bound]) -> String {
    let x_name = if curve == BoundCurve::Entropy { "t" } else { "L" };
    let mut keys: Vec<&str> = rows.iter().flat_map(|b| b.metadata.keys().copied()).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut s = format!("{x_name},value,valid");
    for k in &keys {
        let _ = write!(s, ",{k}");
    }
    s.push('\n');
    for b in rows {
        let x = if curve == BoundCurve::Entropy {
            b.t.unwrap_or_default().to_string()
        } else {
            b.len.to_string()
        };
        let _ = write!(s, "{x},{},{}", opt(&b.value), b.valid);
        for k in &keys {
            let _ = write!(s, ",{}", opt(&b.metadata.get(k)));
        }
        s.push('\n');
    }
    s
}
