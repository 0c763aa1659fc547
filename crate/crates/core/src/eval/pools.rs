use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::corpus::DatasetId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PoolError {
    #[error("a pool needs at least one dataset")]
    Empty,
    #[error("invalid pool `{0}`")]
    Invalid(String),
}

/// A non-empty set of datasets whose training folds are concatenated.
/// Members are kept in canonical order (BVA < CB < ISC).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Pool(Vec<DatasetId>);

impl Pool {
    pub fn new<I: IntoIterator<Item = DatasetId>>(members: I) -> Result<Self, PoolError> {
        let set: BTreeSet<DatasetId> = members.into_iter().collect();
        if set.is_empty() {
            return Err(PoolError::Empty);
        }
        Ok(Pool(set.into_iter().collect()))
    }

    pub fn single(d: DatasetId) -> Self {
        Pool(vec![d])
    }

    pub fn members(&self) -> &[DatasetId] {
        &self.0
    }

    pub fn contains(&self, d: DatasetId) -> bool {
        self.0.contains(&d)
    }

    pub fn name(&self) -> String {
        self.0.iter().map(|d| d.as_str()).collect::<Vec<_>>().join("+")
    }
}

/// Smaller pools first, then lexicographic over canonical member order.
impl Ord for Pool {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.len().cmp(&other.0.len()).then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Pool {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Pool {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Pool {
    type Err = PoolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let members = s
            .split(['+', ','])
            .filter(|p| !p.trim().is_empty())
            .map(|p| p.parse::<DatasetId>().map_err(|_| PoolError::Invalid(s.to_string())))
            .collect::<Result<Vec<_>, _>>()?;
        Pool::new(members)
    }
}

impl Serialize for Pool {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Pool {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Every non-empty subset of `datasets`, in canonical pool order.
pub fn enumerate_pools(datasets: &[DatasetId]) -> Result<Vec<Pool>, PoolError> {
    let set: BTreeSet<DatasetId> = datasets.iter().copied().collect();
    if set.is_empty() {
        return Err(PoolError::Empty);
    }
    let members: Vec<DatasetId> = set.into_iter().collect();
    let mut pools: Vec<Pool> = (1u32..(1 << members.len()))
        .map(|mask| {
            Pool(
                members
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, d)| *d)
                    .collect(),
            )
        })
        .collect();
    pools.sort();
    Ok(pools)
}
