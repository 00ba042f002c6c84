//! Mapping continuous powers onto the radio's discrete levels.

use serde::{Deserialize, Serialize};

use crate::channel::{dbm_to_strategy, RadioEnv, STRATEGY_MAX};
use crate::error::{invalid, Error, Result};
use crate::game::{solve_with, EquilibriumResult, GameParams, NodeView};
use crate::profile::StrategyProfile;
use crate::scalar::Scalar;

pub const MIN_DBM: f64 = -STRATEGY_MAX;
pub const MAX_DBM: f64 = 0.0;

/// Sorted set of admissible transmit levels in dBm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<T>", into = "Vec<T>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct DiscreteLevelSet<T> {
    levels_dbm: Vec<T>,
}

impl<T: Scalar> DiscreteLevelSet<T> {
    pub fn new(levels_dbm: Vec<T>) -> Result<Self> {
        if levels_dbm.is_empty() {
            return Err(invalid("levels_dbm", "need at least one level"));
        }
        if levels_dbm.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(invalid("levels_dbm", "levels must be strictly increasing"));
        }
        let (lo, hi) = (T::lit(MIN_DBM), T::lit(MAX_DBM));
        if levels_dbm.iter().any(|&l| !(l >= lo && l <= hi)) {
            return Err(invalid("levels_dbm", "levels must lie in [-25, 0] dBm"));
        }
        Ok(Self { levels_dbm })
    }

    /// `-24, -23, ..., 0`: 25 levels at 1 dB spacing.
    pub fn one_db_25() -> Self {
        Self {
            levels_dbm: (-24..=0).map(|l| T::lit(l as f64)).collect(),
        }
    }

    /// `-25, -24, ..., 0`: 26 levels at 1 dB spacing.
    pub fn one_db_26() -> Self {
        Self {
            levels_dbm: (-25..=0).map(|l| T::lit(l as f64)).collect(),
        }
    }

    pub fn levels(&self) -> &[T] {
        &self.levels_dbm
    }

    pub fn len(&self) -> usize {
        self.levels_dbm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels_dbm.is_empty()
    }

    /// Levels whose strategy value lies inside `[s_min, s_max]`.
    pub fn restricted_to(&self, s_min: T, s_max: T) -> Result<Self> {
        let kept: Vec<T> = self
            .levels_dbm
            .iter()
            .copied()
            .filter(|&l| {
                let s = dbm_to_strategy(l);
                s >= s_min && s <= s_max
            })
            .collect();
        if kept.is_empty() {
            return Err(invalid("levels_dbm", "no level inside the strategy bounds"));
        }
        Ok(Self { levels_dbm: kept })
    }
}

impl<T: Scalar> Default for DiscreteLevelSet<T> {
    fn default() -> Self {
        Self::one_db_25()
    }
}

impl<T: Scalar> TryFrom<Vec<T>> for DiscreteLevelSet<T> {
    type Error = Error;
    fn try_from(v: Vec<T>) -> Result<Self> {
        Self::new(v)
    }
}

impl<T: Scalar> From<DiscreteLevelSet<T>> for Vec<T> {
    fn from(l: DiscreteLevelSet<T>) -> Self {
        l.levels_dbm
    }
}

/// Nearest level to `dbm` after clamping to `[-25, 0]`; an exact midpoint
/// goes to the lower level.
pub fn quantize<T: Scalar>(dbm: T, levels: &DiscreteLevelSet<T>) -> T {
    let x = dbm.max(T::lit(MIN_DBM)).min(T::lit(MAX_DBM));
    let l = levels.levels();
    let idx = l.partition_point(|&v| v < x);
    if idx == 0 {
        return l[0];
    }
    if idx == l.len() {
        return l[l.len() - 1];
    }
    let (below, above) = (l[idx - 1], l[idx]);
    if x - below <= above - x {
        below
    } else {
        above
    }
}

/// Quantises every node's dBm value; levels outside the profile's bounds
/// are not used.
pub fn discretize_profile<T: Scalar>(
    profile: &StrategyProfile<T>,
    levels: &DiscreteLevelSet<T>,
) -> Result<StrategyProfile<T>> {
    let usable = levels.restricted_to(profile.s_min(), profile.s_max())?;
    let s = profile
        .dbm()
        .into_iter()
        .map(|d| dbm_to_strategy(quantize(d, &usable)))
        .collect();
    StrategyProfile::new(s, profile.s_min(), profile.s_max())
}

/// Exhaustive best response over the level set, ties to the lower level.
/// Returns the chosen level in dBm.
pub fn discrete_best_response<T: Scalar>(
    i: usize,
    profile: &StrategyProfile<T>,
    env: &RadioEnv<T>,
    params: &GameParams<T>,
    levels: &DiscreteLevelSet<T>,
) -> Result<T> {
    let usable = levels.restricted_to(profile.s_min(), profile.s_max())?;
    let view = NodeView::new(i, profile, env, params);
    let mut best: Option<(T, T)> = None;
    for &level in usable.levels() {
        let u = view.utility_at(dbm_to_strategy(level)).0;
        if best.is_none_or(|(_, bu)| u > bu) {
            best = Some((level, u));
        }
    }
    Ok(best.expect("non-empty level set").0)
}

/// Gauss-Seidel play restricted to the level set.
pub fn solve_discrete<T: Scalar>(
    profile0: &StrategyProfile<T>,
    env: &RadioEnv<T>,
    params: &GameParams<T>,
    levels: &DiscreteLevelSet<T>,
) -> Result<EquilibriumResult<T>> {
    let usable = levels.restricted_to(profile0.s_min(), profile0.s_max())?;
    let start = discretize_profile(profile0, &usable)?;
    Ok(solve_with(&start, env, params, |i, p| {
        let level = discrete_best_response(i, p, env, params, &usable).expect("levels already restricted");
        (dbm_to_strategy(level), false)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegisterEntry<T> {
    pub dbm: T,
    pub id: u32,
}

/// Monotone correspondence between dBm levels and transceiver register ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<RegisterEntry<T>>", into = "Vec<RegisterEntry<T>>")]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct RegisterMap<T> {
    entries: Vec<RegisterEntry<T>>,
}

/// PA_LEVEL range of the CC2420 transmit power register.
pub const CC2420_PA_LEVEL_RANGE: (u32, u32) = (3, 31);

impl<T: Scalar> RegisterMap<T> {
    pub fn new(mut entries: Vec<RegisterEntry<T>>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid("registers", "need at least one entry"));
        }
        entries.sort_by(|a, b| a.dbm.partial_cmp(&b.dbm).expect("finite dBm"));
        if entries.windows(2).any(|w| !(w[0].dbm < w[1].dbm && w[0].id < w[1].id)) {
            return Err(invalid("registers", "ids must increase strictly with dBm"));
        }
        Ok(Self { entries })
    }

    /// Linear map of `[-25, 0]` dBm onto `[id_lo, id_hi]`, rounded.
    pub fn linear(levels: &DiscreteLevelSet<T>, id_lo: u32, id_hi: u32) -> Result<Self> {
        let span = T::from_u32(id_hi - id_lo).expect("u32 fits");
        let entries = levels
            .levels()
            .iter()
            .map(|&dbm| {
                let frac = (dbm - T::lit(MIN_DBM)) / T::lit(MAX_DBM - MIN_DBM);
                let id = T::from_u32(id_lo).expect("u32 fits") + (frac * span).round();
                RegisterEntry {
                    dbm,
                    id: id.to_u32().expect("id in range"),
                }
            })
            .collect();
        Self::new(entries)
    }

    /// The eight documented CC2420 output power settings.
    pub fn cc2420() -> Self {
        let table = [(-25.0, 3), (-15.0, 7), (-10.0, 11), (-7.0, 15), (-5.0, 19), (-3.0, 23), (-1.0, 27), (0.0, 31)];
        Self {
            entries: table
                .iter()
                .map(|&(dbm, id)| RegisterEntry { dbm: T::lit(dbm), id })
                .collect(),
        }
    }

    pub fn entries(&self) -> &[RegisterEntry<T>] {
        &self.entries
    }
}

impl<T: Scalar> TryFrom<Vec<RegisterEntry<T>>> for RegisterMap<T> {
    type Error = Error;
    fn try_from(v: Vec<RegisterEntry<T>>) -> Result<Self> {
        Self::new(v)
    }
}

impl<T: Scalar> From<RegisterMap<T>> for Vec<RegisterEntry<T>> {
    fn from(m: RegisterMap<T>) -> Self {
        m.entries
    }
}

pub fn to_register<T: Scalar>(dbm: T, map: &RegisterMap<T>) -> Result<u32> {
    map.entries
        .iter()
        .find(|e| (e.dbm - dbm).abs() <= T::lit(1e-9))
        .map(|e| e.id)
        .ok_or(Error::LevelOutsideMap(dbm.as_f64()))
}

/// Level set and register table as stored on disk:
/// `{"levels_dbm": [..], "registers": [{"dbm": .., "id": ..}]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Scalar + Serialize", deserialize = "T: Scalar + Deserialize<'de>"))]
pub struct QuantizerSpec<T> {
    pub levels_dbm: DiscreteLevelSet<T>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registers: Option<RegisterMap<T>>,
}

impl<T: Scalar> Default for QuantizerSpec<T> {
    fn default() -> Self {
        Self {
            levels_dbm: DiscreteLevelSet::default(),
            registers: None,
        }
    }
}

impl<T: Scalar> QuantizerSpec<T> {
    /// Explicit register table, or the linear PA_LEVEL map over the levels.
    pub fn register_map(&self) -> Result<RegisterMap<T>> {
        match &self.registers {
            Some(map) => Ok(map.clone()),
            None => RegisterMap::linear(&self.levels_dbm, CC2420_PA_LEVEL_RANGE.0, CC2420_PA_LEVEL_RANGE.1),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_level_examples() {
        let l = DiscreteLevelSet::<f64>::default();
        assert_eq!(l.len(), 25);
        assert_eq!(quantize(-12.4, &l), -12.0);
        assert_eq!(quantize(0.0, &l), 0.0);
        assert_eq!(quantize(-24.0, &l), -24.0);
        assert_eq!(quantize(-12.5, &l), -13.0);
        assert_eq!(quantize(-1.25, &l), -1.0);
        assert_eq!(quantize(3.0, &l), 0.0);
        assert_eq!(quantize(-40.0, &l), -24.0);
        assert_eq!(DiscreteLevelSet::<f64>::one_db_26().len(), 26);
    }

    #[test]
    fn level_set_validation() {
        assert!(DiscreteLevelSet::new(vec![-3.0, -3.0]).is_err());
        assert!(DiscreteLevelSet::new(vec![-30.0, 0.0]).is_err());
        assert!(DiscreteLevelSet::<f64>::new(vec![]).is_err());
        let l = DiscreteLevelSet::<f64>::one_db_26().restricted_to(0.5, 25.0).unwrap();
        assert_eq!(l.levels()[0], -24.0);
    }

    #[test]
    fn on_grid_profile_is_unchanged() {
        let p = StrategyProfile::new(vec![1.0, 13.0, 25.0], 0.5, 25.0).unwrap();
        assert_eq!(discretize_profile(&p, &DiscreteLevelSet::default()).unwrap(), p);
    }

    #[test]
    fn register_maps_are_monotone() {
        let levels = DiscreteLevelSet::<f64>::default();
        let map = RegisterMap::linear(&levels, 3, 31).unwrap();
        assert_eq!(to_register(0.0, &map).unwrap(), 31);
        let ids: Vec<u32> = levels.levels().iter().map(|&d| to_register(d, &map).unwrap()).collect();
        assert!(ids.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(ids[0], to_register(-24.0, &map).unwrap());
        assert!(matches!(to_register(-12.3, &map), Err(Error::LevelOutsideMap(_))));

        let cc = RegisterMap::<f64>::cc2420();
        assert_eq!(to_register(-25.0, &cc).unwrap(), 3);
        assert_eq!(to_register(0.0, &cc).unwrap(), 31);
        assert!(RegisterMap::new(vec![RegisterEntry { dbm: -1.0, id: 9 }, RegisterEntry { dbm: 0.0, id: 2 }]).is_err());
    }

    #[test]
    fn spec_json_round_trip() {
        let text = r#"{"levels_dbm": [-25, -15, -10, -7, -5, -3, -1, 0],
                       "registers": [{"dbm": -25, "id": 3}, {"dbm": -15, "id": 7}, {"dbm": -10, "id": 11},
                                     {"dbm": -7, "id": 15}, {"dbm": -5, "id": 19}, {"dbm": -3, "id": 23},
                                     {"dbm": -1, "id": 27}, {"dbm": 0, "id": 31}]}"#;
        let spec: QuantizerSpec<f64> = serde_json::from_str(text).unwrap();
        assert_eq!(spec.levels_dbm.len(), 8);
        assert_eq!(spec.register_map().unwrap(), RegisterMap::cc2420());
        let back: QuantizerSpec<f64> = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<QuantizerSpec<f64>>(r#"{"levels_dbm": [0, -1]}"#).is_err());
    }
}
