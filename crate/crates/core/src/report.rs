//! CSV and human-readable renderings of datasets and analysis results.
//!
//! Column orders are part of the interface: `raw` CSVs are
//! `trial,x,y,a,b` (empty setting = unknown), click CSVs are
//! `time,setting,polarity`, final CSVs are `x,y,a,b`, quadruple CSVs are
//! `a1,a2,b1,b2`. All numbers are written with shortest-round-trip
//! formatting, so identical values always produce identical bytes.

use serde::Serialize;

use crate::coupling::CouplingQuadruple;
use crate::error::{Error, Result};
use crate::exact::ChshValues;
use crate::model::SettingPair;
use crate::pipeline::FinalDataset;
use crate::sim::{ClickStream, RawDataset};
use crate::stats::{CorrelationTable, NoSignalingReport};

fn csv_string<T: Serialize>(rows: impl Iterator<Item = T>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(csv_error)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::InvalidInput(e.to_string()))
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv serialization failed: {e}"))
}

#[derive(Serialize)]
struct RawRow {
    trial: i64,
    x: Option<u8>,
    y: Option<u8>,
    a: i8,
    b: i8,
}

pub fn raw_to_csv(ds: &RawDataset) -> Result<String> {
    csv_string(ds.records.iter().map(|r| RawRow {
        trial: r.trial_index,
        x: r.x.map(|s| s.label()),
        y: r.y.map(|s| s.label()),
        a: r.a,
        b: r.b,
    }))
}

#[derive(Serialize)]
struct ClickRow {
    time: f64,
    setting: u8,
    polarity: i8,
}

pub fn clicks_to_csv(stream: &ClickStream) -> Result<String> {
    csv_string(stream.events.iter().map(|e| ClickRow {
        time: e.time,
        setting: e.setting.label(),
        polarity: e.polarity,
    }))
}

#[derive(Serialize)]
struct FinalRow {
    x: u8,
    y: u8,
    a: i8,
    b: i8,
}

pub fn final_to_csv(fin: &FinalDataset) -> Result<String> {
    let rows = SettingPair::ALL.into_iter().flat_map(|pair| {
        fin.pairs[pair.index()].outcomes.iter().map(move |(a, b)| FinalRow {
            x: pair.x.label(),
            y: pair.y.label(),
            a: *a,
            b: *b,
        })
    });
    csv_string(rows)
}

#[derive(Serialize)]
struct QuadRow {
    a1: i8,
    a2: i8,
    b1: i8,
    b2: i8,
}

pub fn quadruples_to_csv(samples: &[CouplingQuadruple]) -> Result<String> {
    csv_string(samples.iter().map(|q| QuadRow {
        a1: q.a1,
        a2: q.a2,
        b1: q.b1,
        b2: q.b2,
    }))
}

fn opt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:+.6}"),
        None => "   --   ".into(),
    }
}

/// Aligned text table of per-pair estimates.
pub fn correlation_text(table: &CorrelationTable, chsh: Option<&ChshValues<f64>>) -> String {
    let mut out = String::new();
    out.push_str("pair    n_kept      E(ab)      se        E(a)       E(b)\n");
    for pair in SettingPair::ALL {
        let p = &table.pairs[pair.index()];
        out.push_str(&format!(
            "({},{})  {:>9}  {}  {}  {}  {}\n",
            pair.x,
            pair.y,
            p.n_kept,
            opt(p.e_ab),
            opt(p.se_ab),
            opt(p.e_a),
            opt(p.e_b),
        ));
    }
    if let Some(s) = chsh {
        out.push_str(&format!(
            "CHSH: canonical = {:+.6}, max over facets = {:+.6}\n",
            s.s_canonical, s.s_max
        ));
    }
    out
}

/// Aligned text table of the marginal comparisons.
pub fn no_signaling_text(report: &NoSignalingReport) -> String {
    let mut out = String::new();
    out.push_str("station  setting   delta        pooled_se    z           p\n");
    for c in &report.comparisons {
        match (c.delta, c.pooled_se, c.z, c.p_value) {
            (Some(d), Some(se), Some(z), Some(p)) => out.push_str(&format!(
                "{}        {}        {:+.6}    {:.6}     {:+8.2}    {:.3e}\n",
                c.station, c.local_setting, d, se, z, p
            )),
            _ => out.push_str(&format!(
                "{}        {}        untestable (arms n = {} / {})\n",
                c.station, c.local_setting, c.n.0, c.n.1
            )),
        }
    }
    out
}
