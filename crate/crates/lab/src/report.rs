//! Result rows and deterministic CSV emission.
//!
//! The CSV schema is fixed: a `#`-prefixed JSON header carrying the config
//! hash and reference tolerance, the column line
//! `scenario,method,N,h,M,k,metric,value,walltime_s`, then rows in
//! canonical sorted order. With timings disabled (the default) every
//! volatile field is zeroed, so reruns of the same (config, seed) are
//! byte-identical.

use std::io::Write;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    OperatorError,
    VectorError,
    CommutatorNorm,
    BoundRatio,
}

impl Metric {
    pub fn name(&self) -> &'static str {
        match self {
            Metric::OperatorError => "operator_error",
            Metric::VectorError => "vector_error",
            Metric::CommutatorNorm => "commutator_norm",
            Metric::BoundRatio => "bound_ratio",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ResultRow {
    pub scenario: String,
    pub method: String,
    pub n: usize,
    pub h: f64,
    pub m: usize,
    pub k: i64,
    pub metric: Metric,
    pub value: f64,
    pub walltime_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunMeta {
    pub config_hash: String,
    pub reference_tolerance: f64,
    pub walltime_s: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<ResultRow>,
    pub meta: RunMeta,
}

impl RunOutput {
    /// Canonical row order: everything that identifies a cell, so output
    /// is independent of generation order.
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            (a.scenario.as_str(), a.method.as_str(), a.n)
                .cmp(&(b.scenario.as_str(), b.method.as_str(), b.n))
                .then(a.h.total_cmp(&b.h))
                .then(a.m.cmp(&b.m))
                .then(a.k.cmp(&b.k))
                .then(a.metric.name().cmp(b.metric.name()))
        });
    }

    pub fn write_csv(&self, out: &mut impl Write, timings: bool) -> Result<()> {
        if timings {
            writeln!(
                out,
                "# {{\"config_hash\":\"{}\",\"reference_tolerance\":{:e},\"walltime_s\":{:.3}}}",
                self.meta.config_hash, self.meta.reference_tolerance, self.meta.walltime_s
            )?;
        } else {
            writeln!(
                out,
                "# {{\"config_hash\":\"{}\",\"reference_tolerance\":{:e}}}",
                self.meta.config_hash, self.meta.reference_tolerance
            )?;
        }
        writeln!(out, "scenario,method,N,h,M,k,metric,value,walltime_s")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{:.12e},{},{},{},{:.12e},{:.3}",
                r.scenario,
                r.method,
                r.n,
                r.h,
                r.m,
                r.k,
                r.metric.name(),
                r.value,
                if timings { r.walltime_s } else { 0.0 }
            )?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self, timings: bool) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf, timings)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

/// FNV-1a over the canonical JSON serialization of the parsed config plus
/// the effective seed.
pub fn config_hash(config: &RunConfig, seed: u64) -> String {
    #[derive(Serialize)]
    struct Hashed<'a> {
        config: &'a RunConfig,
        seed: u64,
    }
    let text = serde_json::to_string(&Hashed { config, seed }).expect("config serializes");
    let mut hash: u64 = 0xcbf29ce484222325;
    for byte in text.as_bytes() {
        hash ^= *byte as u64;
        hash = hash.wrapping_mul(0x100000001b3);
    }
    format!("{hash:016x}")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(method: &str, h: f64, value: f64) -> ResultRow {
        ResultRow {
            scenario: "schrodinger".into(),
            method: method.into(),
            n: 8,
            h,
            m: 4,
            k: 0,
            metric: Metric::OperatorError,
            value,
            walltime_s: 1.25,
        }
    }

    #[test]
    fn csv_is_sorted_and_zeroes_walltime_by_default() {
        let mut out = RunOutput {
            rows: vec![row("trotter2", 0.5, 1.0), row("qhop", 0.25, 2.0), row("qhop", 0.5, 3.0)],
            meta: RunMeta {
                config_hash: "deadbeef".into(),
                reference_tolerance: 1e-10,
                walltime_s: 9.0,
            },
        };
        out.sort_rows();
        let text = out.to_csv_string(false).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# {\"config_hash\":\"deadbeef\""));
        assert!(!lines[0].contains("walltime"));
        assert_eq!(lines[1], "scenario,method,N,h,M,k,metric,value,walltime_s");
        assert!(lines[2].starts_with("schrodinger,qhop,8,2.5"));
        assert!(lines[3].starts_with("schrodinger,qhop,8,5.0"));
        assert!(lines[4].starts_with("schrodinger,trotter2"));
        assert!(lines.iter().skip(2).all(|l| l.ends_with(",0.000")));

        let timed = out.to_csv_string(true).unwrap();
        assert!(timed.lines().next().unwrap().contains("walltime_s"));
        assert!(timed.lines().nth(2).unwrap().ends_with(",1.250"));
    }

    #[test]
    fn config_hash_is_stable_and_seed_sensitive() {
        let cfg = RunConfig::default();
        let h1 = config_hash(&cfg, 7);
        let h2 = config_hash(&cfg, 7);
        let h3 = config_hash(&cfg, 8);
        assert_eq!(h1, h2);
        assert_ne!(h1, h3);
    }
}
