//! Record persistence: a fixed-column CSV schema and a JSONL mirror,
//! both ending in a metadata trailer.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CSV_COLUMNS: &str = "kind,p,D,m,value,vptor,v_cl,v_w,delta,c_p,gap,h,flags";

/// The flat on-disk shape every scan record maps onto. Big integers are
/// carried as decimal strings; absent fields stay empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SinkRecord {
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<i64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub vptor: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_cl: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_w: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub flags: String,
}

/// Trailer payload: what produced the file and under which ceilings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SinkMeta {
    pub kind: String,
    pub range: String,
    pub version: String,
    pub ceilings: String,
}

impl SinkMeta {
    pub fn new(kind: &str, range: String, ceilings: String) -> Self {
        SinkMeta {
            kind: kind.to_string(),
            range,
            version: env!("CARGO_PKG_VERSION").to_string(),
            ceilings,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SinkFormat {
    Csv,
    Jsonl,
}

impl std::str::FromStr for SinkFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(SinkFormat::Csv),
            "jsonl" => Ok(SinkFormat::Jsonl),
            other => Err(Error::Usage(format!("unknown format {other:?}"))),
        }
    }
}

fn opt<T: std::fmt::Display>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn fopt(v: &Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn csv_line(r: &SinkRecord) -> String {
    // flags tokens are ;-joined and never contain commas
    debug_assert!(!r.flags.contains(','));
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.kind,
        opt(&r.p),
        opt(&r.d),
        opt(&r.m),
        opt(&r.value),
        opt(&r.vptor),
        opt(&r.v_cl),
        opt(&r.v_w),
        opt(&r.delta),
        fopt(&r.c_p),
        fopt(&r.gap),
        opt(&r.h),
        r.flags
    )
}

fn parse_opt<T: std::str::FromStr>(s: &str) -> Result<Option<T>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<T>()
        .map(Some)
        .map_err(|_| Error::Usage(format!("unparsable field {s:?}")))
}

fn parse_csv_line(line: &str) -> Result<SinkRecord> {
    let cols: Vec<&str> = line.split(',').collect();
    if cols.len() != 13 {
        return Err(Error::Usage(format!(
            "expected 13 columns, got {}",
            cols.len()
        )));
    }
    Ok(SinkRecord {
        kind: cols[0].to_string(),
        p: parse_opt(cols[1])?,
        d: (!cols[2].is_empty()).then(|| cols[2].to_string()),
        m: (!cols[3].is_empty()).then(|| cols[3].to_string()),
        value: parse_opt(cols[4])?,
        vptor: parse_opt(cols[5])?,
        v_cl: parse_opt(cols[6])?,
        v_w: parse_opt(cols[7])?,
        delta: parse_opt(cols[8])?,
        c_p: parse_opt(cols[9])?,
        gap: parse_opt(cols[10])?,
        h: (!cols[11].is_empty()).then(|| cols[11].to_string()),
        flags: cols[12].to_string(),
    })
}

/// Write records plus trailer; returns the record count. On an I/O
/// failure a partial-file marker is appended on a best-effort basis.
pub fn sink_write(
    records: &[SinkRecord],
    path: &Path,
    format: SinkFormat,
    meta: &SinkMeta,
) -> Result<usize> {
    let mut buf = String::new();
    match format {
        SinkFormat::Csv => {
            buf.push_str(CSV_COLUMNS);
            buf.push('\n');
            for r in records {
                buf.push_str(&csv_line(r));
                buf.push('\n');
            }
            let _ = writeln!(
                buf,
                "# meta kind={} range={} version={} ceilings={}",
                meta.kind, meta.range, meta.version, meta.ceilings
            );
        }
        SinkFormat::Jsonl => {
            for r in records {
                buf.push_str(&serde_json::to_string(r).map_err(|e| Error::Usage(e.to_string()))?);
                buf.push('\n');
            }
            let _ = writeln!(buf, "{}", serde_json::json!({ "meta": meta }));
        }
    }
    if let Err(e) = fs::write(path, &buf) {
        let _ = fs::write(path, format!("# PARTIAL: write aborted ({e})\n"));
        return Err(e.into());
    }
    Ok(records.len())
}

/// Read a sink file back; trailer meta returned when present.
pub fn sink_read(path: &Path, format: SinkFormat) -> Result<(Vec<SinkRecord>, Option<SinkMeta>)> {
    let text = fs::read_to_string(path)?;
    let mut records = Vec::new();
    let mut meta = None;
    match format {
        SinkFormat::Csv => {
            for (i, line) in text.lines().enumerate() {
                if i == 0 {
                    if line != CSV_COLUMNS {
                        return Err(Error::Usage("missing or wrong CSV header".into()));
                    }
                    continue;
                }
                if let Some(rest) = line.strip_prefix("# meta ") {
                    let mut kind = String::new();
                    let mut range = String::new();
                    let mut version = String::new();
                    let mut ceilings = String::new();
                    for tok in rest.split_whitespace() {
                        if let Some((k, v)) = tok.split_once('=') {
                            match k {
                                "kind" => kind = v.to_string(),
                                "range" => range = v.to_string(),
                                "version" => version = v.to_string(),
                                "ceilings" => ceilings = v.to_string(),
                                _ => {}
                            }
                        }
                    }
                    meta = Some(SinkMeta {
                        kind,
                        range,
                        version,
                        ceilings,
                    });
                    continue;
                }
                if line.starts_with('#') || line.is_empty() {
                    continue;
                }
                records.push(parse_csv_line(line)?);
            }
        }
        SinkFormat::Jsonl => {
            for line in text.lines() {
                if line.is_empty() {
                    continue;
                }
                let v: serde_json::Value =
                    serde_json::from_str(line).map_err(|e| Error::Usage(e.to_string()))?;
                if let Some(mv) = v.get("meta") {
                    meta = serde_json::from_value(mv.clone()).ok();
                    continue;
                }
                records.push(serde_json::from_value(v).map_err(|e| Error::Usage(e.to_string()))?);
            }
        }
    }
    Ok((records, meta))
}
