use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{gen_dataset, DatasetKind, DatasetParams};
use crate::error::{Error, Result};
use crate::extractor::{extract_prepared, Branch, ExtractorConfig, PreparedInput};
use crate::stream::substream_seed;

/// One pipeline run. `size_S` is the pipeline's own output, before the
/// singleton fallback.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExperimentRow {
    pub kind: DatasetKind,
    #[serde(rename = "N")]
    pub n: usize,
    pub trial: u64,
    pub seed: u64,
    pub branch: Option<Branch>,
    pub p: Option<u64>,
    #[serde(rename = "size_A2")]
    pub size_a2: usize,
    #[serde(rename = "size_B")]
    pub size_b: usize,
    #[serde(rename = "size_Btilde")]
    pub size_btilde: usize,
    #[serde(rename = "size_S")]
    pub size_s: usize,
    pub wall_ms: u64,
}

/// Seed of trial `trial` for dataset `(kind, n)` under the run seed.
pub fn row_seed(seed: u64, kind: DatasetKind, n: usize, trial: u64) -> u64 {
    let dataset = substream_seed(seed, ((kind as u64) << 48) ^ n as u64);
    substream_seed(dataset, trial)
}

/// `nmin, nmin·factor, …` up to `nmax`.
pub fn geometric_sizes(nmin: usize, nmax: usize, factor: usize) -> Result<Vec<usize>> {
    if nmin == 0 || nmin > nmax || factor < 2 {
        return Err(Error::InvalidInput(format!(
            "need 1 <= nmin <= nmax and factor >= 2, got {nmin}, {nmax}, {factor}"
        )));
    }
    let mut out = vec![nmin];
    while let Some(next) = out
        .last()
        .and_then(|&n| n.checked_mul(factor))
        .filter(|&n| n <= nmax)
    {
        out.push(next);
    }
    Ok(out)
}

/// Runs one pipeline per `(kind, N, trial)`; each dataset is generated with
/// `cfg.seed` and its energies are computed once. Rows come back sorted by
/// `(kind, N, trial)`.
pub fn scaling_experiment(
    kinds: &[DatasetKind],
    sizes: &[usize],
    trials: u64,
    cfg: &ExtractorConfig,
) -> Result<Vec<ExperimentRow>> {
    if kinds.is_empty() || sizes.is_empty() || trials == 0 {
        return Err(Error::InvalidInput(
            "experiment needs kinds, sizes and trials".into(),
        ));
    }
    cfg.validate()?;
    let mut rows = Vec::new();
    for &kind in kinds {
        for &n in sizes {
            let params = DatasetParams {
                seed: cfg.seed,
                ..DatasetParams::with_n(n)
            };
            let prep = PreparedInput::new(&gen_dataset(kind, &params)?.elements)?;
            let batch: Vec<ExperimentRow> = (0..trials)
                .into_par_iter()
                .map(|trial| {
                    let seed = row_seed(cfg.seed, kind, n, trial);
                    let run = ExtractorConfig {
                        seed,
                        trials: 1,
                        ..cfg.clone()
                    };
                    let t = extract_prepared(&prep, &run)?.trace;
                    Ok(ExperimentRow {
                        kind,
                        n,
                        trial,
                        seed,
                        branch: t.branch,
                        p: t.p,
                        size_a2: t.size_a2,
                        size_b: t.size_b,
                        size_btilde: t.size_btilde,
                        size_s: t.size_s,
                        wall_ms: t.wall_ms,
                    })
                })
                .collect::<Result<_>>()?;
            rows.extend(batch);
        }
    }
    rows.sort_by_key(|r| (r.kind, r.n, r.trial));
    Ok(rows)
}

pub fn write_rows<W: Write>(rows: &[ExperimentRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_rows<R: Read>(input: R) -> Result<Vec<ExperimentRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

fn median(sorted: &[usize]) -> f64 {
    let m = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[m] as f64
    } else {
        (sorted[m - 1] + sorted[m]) as f64 / 2.0
    }
}

/// Median `|S|` per `N`, ascending in `N`.
pub fn medians(rows: &[ExperimentRow]) -> Vec<(usize, f64)> {
    let mut by_n: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for r in rows {
        by_n.entry(r.n).or_default().push(r.size_s);
    }
    by_n.into_iter()
        .map(|(n, mut s)| {
            s.sort_unstable();
            (n, median(&s))
        })
        .collect()
}

/// Least-squares slope of `log median|S|` against `log N`. Sizes whose
/// median is 0 have no logarithm and are left out; at least two sizes must remain.
pub fn fit_exponent(rows: &[ExperimentRow]) -> Result<f64> {
    let points: Vec<(f64, f64)> = medians(rows)
        .into_iter()
        .filter(|&(_, m)| m > 0.0)
        .map(|(n, m)| ((n as f64).ln(), m.ln()))
        .collect();
    if points.len() < 2 {
        return Err(Error::InvalidInput(
            "fit needs two sizes with a positive median".into(),
        ));
    }
    let k = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / k;
    let my = points.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = points.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = points.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
