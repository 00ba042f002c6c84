use serde::{Deserialize, Serialize};

use crate::channel::{strategy_to_dbm, strategy_to_mw, STRATEGY_MAX};
use crate::error::{invalid, Result};
use crate::scalar::Scalar;

/// Per-node power strategies in strategy units, confined to the box
/// `[s_min, s_max]` with `0 < s_min < s_max <= 25`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyProfile<T> {
    s: Vec<T>,
    s_min: T,
    s_max: T,
}

impl<T: Scalar> StrategyProfile<T> {
    pub fn new(s: Vec<T>, s_min: T, s_max: T) -> Result<Self> {
        check_bounds(s_min, s_max)?;
        if let Some((i, v)) = s.iter().enumerate().find(|(_, v)| !(**v >= s_min && **v <= s_max)) {
            return Err(invalid("s", format!("node {i} strategy {v} outside [{s_min}, {s_max}]")));
        }
        Ok(Self { s, s_min, s_max })
    }

    /// Every node at the same strategy.
    pub fn uniform(n: usize, value: T, s_min: T, s_max: T) -> Result<Self> {
        Self::new(vec![value; n], s_min, s_max)
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }

    pub fn bounds(&self) -> (T, T) {
        (self.s_min, self.s_max)
    }

    pub fn s_min(&self) -> T {
        self.s_min
    }

    pub fn s_max(&self) -> T {
        self.s_max
    }

    pub fn strategies(&self) -> &[T] {
        &self.s
    }

    #[inline]
    pub fn get(&self, i: usize) -> T {
        self.s[i]
    }

    /// Sets node `i`, clamping into the box.
    pub fn set(&mut self, i: usize, value: T) {
        self.s[i] = value.max(self.s_min).min(self.s_max);
    }

    /// Copy with node `i` moved to `value` (clamped).
    pub fn with(&self, i: usize, value: T) -> Self {
        let mut out = self.clone();
        out.set(i, value);
        out
    }

    pub fn dbm(&self) -> Vec<T> {
        self.s.iter().map(|&s| strategy_to_dbm(s)).collect()
    }

    pub fn powers_mw(&self) -> Vec<T> {
        self.s.iter().map(|&s| strategy_to_mw(s)).collect()
    }

    /// Largest per-node absolute difference.
    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.s
            .iter()
            .zip(&other.s)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max)
    }
}

fn check_bounds<T: Scalar>(s_min: T, s_max: T) -> Result<()> {
    if !(s_min > T::zero() && s_min < s_max && s_max <= T::lit(STRATEGY_MAX)) {
        return Err(invalid(
            "bounds",
            format!("need 0 < s_min < s_max <= 25, got [{s_min}, {s_max}]"),
        ));
    }
    Ok(())
}
