use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{is_prime, NumberSet, RationalNumber};
use crate::stream::rng_from_seed;

/// Largest order handled by the difference-set search.
pub const PDS_MAX_ORDER: u64 = 11;

pub const DEFAULT_RANDOM_MAX: u64 = 1_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetKind {
    Interval,
    Geometric,
    Random,
    Pds,
    File,
}

impl DatasetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetKind::Interval => "interval",
            DatasetKind::Geometric => "geometric",
            DatasetKind::Random => "random",
            DatasetKind::Pds => "pds",
            DatasetKind::File => "file",
        }
    }
}

impl fmt::Display for DatasetKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "interval" => Ok(DatasetKind::Interval),
            "geometric" => Ok(DatasetKind::Geometric),
            "random" => Ok(DatasetKind::Random),
            "pds" => Ok(DatasetKind::Pds),
            "file" => Ok(DatasetKind::File),
            _ => Err(Error::InvalidInput(format!("unknown dataset kind {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetParams {
    pub n: Option<usize>,
    /// Ratio of the geometric progression, default 2.
    pub gamma: Option<RationalNumber>,
    /// Upper end of the range for random sets.
    pub max: Option<u64>,
    /// Order of the difference set.
    pub p: Option<u64>,
    pub seed: u64,
}

impl DatasetParams {
    pub fn with_n(n: usize) -> Self {
        DatasetParams {
            n: Some(n),
            gamma: None,
            max: None,
            p: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Dataset {
    pub kind: DatasetKind,
    pub params: DatasetParams,
    pub elements: NumberSet,
}

fn need_n(params: &DatasetParams) -> Result<usize> {
    match params.n {
        Some(n) if n >= 1 => Ok(n),
        _ => Err(Error::InvalidInput("N must be at least 1".into())),
    }
}

pub fn gen_dataset(kind: DatasetKind, params: &DatasetParams) -> Result<Dataset> {
    let elements = match kind {
        DatasetKind::Interval => {
            let n = need_n(params)?;
            NumberSet::from_distinct((1..=n as u64).map(RationalNumber::from_integer).collect())
        }
        DatasetKind::Geometric => {
            let n = need_n(params)?;
            let gamma = params
                .gamma
                .clone()
                .unwrap_or_else(|| RationalNumber::from(2));
            geometric(&gamma, n)?
        }
        DatasetKind::Random => {
            let n = need_n(params)?;
            let max = params.max.unwrap_or(DEFAULT_RANDOM_MAX);
            if max < n as u64 {
                return Err(Error::InvalidInput(format!(
                    "cannot draw {n} distinct values from [1, {max}]"
                )));
            }
            let mut rng = rng_from_seed(params.seed);
            let mut values = BTreeSet::new();
            while values.len() < n {
                values.insert(rng.random_range(1..=max));
            }
            NumberSet::from_distinct(
                values
                    .into_iter()
                    .map(RationalNumber::from_integer)
                    .collect(),
            )
        }
        DatasetKind::Pds => {
            let p = params
                .p
                .ok_or_else(|| Error::InvalidInput("pds needs --p".into()))?;
            let set = perfect_difference_set(p)?;
            NumberSet::from_distinct(
                set.into_iter()
                    .map(|r| RationalNumber::from_integer(r + 1))
                    .collect(),
            )
        }
        DatasetKind::File => {
            return Err(Error::InvalidInput(
                "file datasets are read, not generated".into(),
            ))
        }
    };
    Ok(Dataset {
        kind,
        params: params.clone(),
        elements,
    })
}

/// `{γ, γ², …, γ^N}`.
pub fn geometric(gamma: &RationalNumber, n: usize) -> Result<NumberSet> {
    if gamma.is_zero() || gamma.abs() == RationalNumber::one() {
        return Err(Error::InvalidInput(format!(
            "ratio {gamma} must avoid -1, 0 and 1"
        )));
    }
    let mut out = Vec::with_capacity(n);
    let mut x = gamma.clone();
    for _ in 0..n {
        let next = &x * gamma;
        out.push(std::mem::replace(&mut x, next));
    }
    Ok(NumberSet::from_distinct(out))
}

fn is_prime_power(q: u64) -> bool {
    (2..=q).find(|d| q.is_multiple_of(*d)).is_some_and(|d| {
        let mut r = q;
        while r.is_multiple_of(d) {
            r /= d;
        }
        r == 1 && is_prime(d)
    })
}

/// `p + 1` residues mod `p² + p + 1` with all differences distinct, the
/// lexicographically first one containing 0 and 1. Only prime powers
/// `p <= 11` are accepted (other orders have no such set in this range).
pub fn perfect_difference_set(p: u64) -> Result<Vec<u64>> {
    if p > PDS_MAX_ORDER || !is_prime_power(p) {
        return Err(Error::InvalidInput(format!(
            "pds order must be a prime power at most {PDS_MAX_ORDER}, got {p}"
        )));
    }
    let m = (p * p + p + 1) as usize;
    let mut used = vec![false; m];
    used[1] = true;
    used[m - 1] = true;
    let mut set = vec![0usize, 1];
    if extend(&mut set, &mut used, p as usize + 1, m) {
        Ok(set.into_iter().map(|r| r as u64).collect())
    } else {
        Err(Error::Internal(format!(
            "no difference set of order {p} found"
        )))
    }
}

fn extend(set: &mut Vec<usize>, used: &mut [bool], k: usize, m: usize) -> bool {
    if set.len() == k {
        return true;
    }
    let start = set.last().expect("nonempty") + 1;
    for x in start..m {
        let diffs: Vec<usize> = set
            .iter()
            .flat_map(|&y| [(x + m - y) % m, (y + m - x) % m])
            .collect();
        if diffs.iter().any(|&d| used[d]) {
            continue;
        }
        let mut sorted = diffs.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            continue;
        }
        for &d in &diffs {
            used[d] = true;
        }
        set.push(x);
        if extend(set, used, k, m) {
            return true;
        }
        set.pop();
        for &d in &diffs {
            used[d] = false;
        }
    }
    false
}

/// One value per line, an integer or `a/b`; blank lines and lines starting
/// with `#` are skipped. Repeated values are rejected.
pub fn parse_numbers(text: &str) -> Result<NumberSet> {
    let mut values = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let value: RationalNumber = line
            .parse()
            .map_err(|e| Error::InvalidInput(format!("line {}: {e}", lineno + 1)))?;
        values.push(value);
    }
    NumberSet::new(values)
}

pub fn read_numbers(path: &Path) -> Result<NumberSet> {
    parse_numbers(&std::fs::read_to_string(path)?)
}

pub fn format_numbers(set: &NumberSet) -> String {
    set.iter().map(|x| format!("{x}\n")).collect()
}
