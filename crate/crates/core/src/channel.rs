//! Radio physics: log-distance path loss, SINR, bit error rate and the
//! analytic packet reception ratio of every directed link.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::{db_to_linear, linear_to_db, Scalar};

/// Upper end of the strategy variable; `s = 25` is 0 dBm (1 mW).
pub const STRATEGY_MAX: f64 = 25.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Position<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Log-distance path loss with optional log-normal shadowing.
///
/// `gain_db(d) = reference_gain_db - 10 * exponent * log10(max(d, d0) / d0) + X`,
/// where `X ~ N(0, shadowing_sigma_db^2)` is drawn once per unordered node pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PathLossModel<T> {
    pub reference_distance_m: T,
    pub reference_gain_db: T,
    pub exponent: T,
    pub shadowing_sigma_db: T,
    pub seed: u64,
}

impl<T: Scalar> Default for PathLossModel<T> {
    fn default() -> Self {
        Self {
            reference_distance_m: T::one(),
            reference_gain_db: T::lit(-40.0),
            exponent: T::lit(3.3),
            shadowing_sigma_db: T::zero(),
            seed: 0,
        }
    }
}

impl<T: Scalar> PathLossModel<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.reference_distance_m > T::zero() && self.reference_distance_m.is_finite()) {
            return Err(invalid("reference_distance_m", "must be positive and finite"));
        }
        if !(self.reference_gain_db <= T::zero()) {
            return Err(invalid("reference_gain_db", "must be <= 0 dB"));
        }
        if !(self.exponent > T::zero() && self.exponent.is_finite()) {
            return Err(invalid("exponent", "must be positive and finite"));
        }
        if !(self.shadowing_sigma_db >= T::zero() && self.shadowing_sigma_db.is_finite()) {
            return Err(invalid("shadowing_sigma_db", "must be >= 0"));
        }
        Ok(())
    }

    pub fn is_deterministic(&self) -> bool {
        self.shadowing_sigma_db == T::zero()
    }

    /// Shadowing draw in dB for the unordered pair `{a, b}`.
    fn shadowing_db(&self, a: &Position<T>, b: &Position<T>) -> T {
        if self.is_deterministic() {
            return T::zero();
        }
        let ka = position_key(a);
        let kb = position_key(b);
        let (lo, hi) = if ka <= kb { (ka, kb) } else { (kb, ka) };
        let mut state = self.seed;
        for word in [lo.0, lo.1, hi.0, hi.1] {
            state = splitmix64(state ^ word);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(state);
        let z: f64 = StandardNormal.sample(&mut rng);
        self.shadowing_sigma_db * T::lit(z)
    }
}

fn position_key<T: Scalar>(p: &Position<T>) -> (u64, u64) {
    (p.x.as_f64().to_bits(), p.y.as_f64().to_bits())
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Linear channel gain between two positions. Distances below the
/// reference distance (including coincident nodes) are clamped to it.
pub fn gain<T: Scalar>(model: &PathLossModel<T>, a: &Position<T>, b: &Position<T>) -> T {
    let d = a.distance(b).max(model.reference_distance_m);
    let gain_db = model.reference_gain_db
        - T::lit(10.0) * model.exponent * (d / model.reference_distance_m).log10()
        + model.shadowing_db(a, b);
    db_to_linear(gain_db)
}

/// Square matrix of linear gains `H[i][j]` from transmitter `i` to receiver
/// `j`. The diagonal is stored but never read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelGainMatrix<T> {
    n: usize,
    gains: Vec<T>,
}

impl<T: Scalar> ChannelGainMatrix<T> {
    /// Builds a matrix from explicit rows. Off-diagonal entries must be
    /// strictly positive and finite.
    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::TooFewNodes { required: 1, got: 0 });
        }
        let mut gains = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(invalid("gains", format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, g) in row.iter().enumerate() {
                if i != j && !(*g > T::zero() && g.is_finite()) {
                    return Err(invalid("gains", format!("entry ({i},{j}) = {g} is not positive and finite")));
                }
            }
            gains.extend(row);
        }
        Ok(Self { n, gains })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, tx: usize, rx: usize) -> T {
        self.gains[tx * self.n + rx]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (i + 1..self.n).all(|j| self.get(i, j) == self.get(j, i)))
    }
}

pub fn build_gain_matrix<T: Scalar>(
    positions: &[Position<T>],
    model: &PathLossModel<T>,
) -> Result<ChannelGainMatrix<T>> {
    if positions.len() < 2 {
        return Err(Error::TooFewNodes {
            required: 2,
            got: positions.len(),
        });
    }
    model.validate()?;
    if let Some(bad) = positions.iter().position(|p| !p.is_finite()) {
        return Err(invalid("positions", format!("node {bad} has a non-finite coordinate")));
    }
    let n = positions.len();
    let mut gains = vec![T::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let g = gain(model, &positions[i], &positions[j]);
            gains[i * n + j] = g;
            gains[j * n + i] = g;
        }
    }
    Ok(ChannelGainMatrix { n, gains })
}

/// White noise power at every receiver, in mW.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseFloor<T> {
    pub n0_mw: T,
}

impl<T: Scalar> NoiseFloor<T> {
    pub fn new(n0_mw: T) -> Result<Self> {
        if !(n0_mw > T::zero() && n0_mw.is_finite()) {
            return Err(invalid("n0_mw", "noise floor must be positive"));
        }
        Ok(Self { n0_mw })
    }

    pub fn from_dbm(dbm: T) -> Result<Self> {
        Self::new(db_to_linear(dbm))
    }
}

/// Transmit power expressed in strategy units `s` in `[0, 25]`; `dbm = s - 25`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct TxPower<T> {
    strategy_units: T,
}

impl<T: Scalar> TxPower<T> {
    pub fn new(strategy_units: T) -> Result<Self> {
        if !(strategy_units >= T::zero() && strategy_units <= T::lit(STRATEGY_MAX)) {
            return Err(invalid("strategy_units", format!("{strategy_units} outside [0, 25]")));
        }
        Ok(Self { strategy_units })
    }

    pub fn from_dbm(dbm: T) -> Result<Self> {
        Self::new(dbm + T::lit(STRATEGY_MAX))
    }

    pub fn strategy_units(&self) -> T {
        self.strategy_units
    }

    pub fn dbm(&self) -> T {
        strategy_to_dbm(self.strategy_units)
    }

    pub fn linear_mw(&self) -> T {
        strategy_to_mw(self.strategy_units)
    }
}

#[inline]
pub fn strategy_to_dbm<T: Scalar>(s: T) -> T {
    s - T::lit(STRATEGY_MAX)
}

#[inline]
pub fn dbm_to_strategy<T: Scalar>(dbm: T) -> T {
    dbm + T::lit(STRATEGY_MAX)
}

#[inline]
pub fn strategy_to_mw<T: Scalar>(s: T) -> T {
    db_to_linear(strategy_to_dbm(s))
}

#[inline]
pub fn mw_to_strategy<T: Scalar>(mw: T) -> T {
    dbm_to_strategy(linear_to_db(mw))
}

fn check_pair(i: usize, j: usize, n: usize) -> Result<()> {
    if i == j {
        return Err(Error::SelfLink(i));
    }
    for index in [i, j] {
        if index >= n {
            return Err(Error::NodeOutOfRange { index, len: n });
        }
    }
    Ok(())
}

fn interference_at<T: Scalar>(i: usize, j: usize, powers_mw: &[T], h: &ChannelGainMatrix<T>) -> T {
    powers_mw
        .iter()
        .enumerate()
        .filter(|&(t, _)| t != i && t != j)
        .map(|(t, &p)| h.get(t, j) * p)
        .sum()
}

/// SINR of the transmission `i -> j` with every other node transmitting
/// concurrently: `H_ij p_i / (sum_{t != i, j} H_tj p_t + N0)`.
pub fn sinr<T: Scalar>(
    i: usize,
    j: usize,
    powers_mw: &[T],
    h: &ChannelGainMatrix<T>,
    n0: &NoiseFloor<T>,
) -> Result<T> {
    check_pair(i, j, h.len())?;
    if powers_mw.len() != h.len() {
        return Err(invalid("powers_mw", "length differs from gain matrix"));
    }
    let signal = h.get(i, j) * powers_mw[i];
    Ok(signal / (interference_at(i, j, powers_mw, h) + n0.n0_mw))
}

/// `BER = (1 - sqrt(x / (1 + x))) / 2`, evaluated without cancellation for
/// large `x` via `1 - sqrt(r) = (1 - r) / (1 + sqrt(r))`.
pub fn ber<T: Scalar>(sinr_value: T) -> Result<T> {
    if !(sinr_value >= T::zero()) {
        return Err(invalid("sinr", format!("{sinr_value} is negative or NaN")));
    }
    Ok(ber_unchecked(sinr_value))
}

#[inline]
pub(crate) fn ber_unchecked<T: Scalar>(x: T) -> T {
    if x.is_infinite() {
        return T::zero();
    }
    let one = T::one();
    let r = x / (one + x);
    let half = T::lit(0.5);
    half * (one / (one + x)) / (one + r.sqrt())
}

/// `PRR = (1 - BER)^(8 f)` for a packet of `f_bytes` bytes.
pub fn prr<T: Scalar>(ber_value: T, f_bytes: u32) -> T {
    if ber_value >= T::one() {
        return T::zero();
    }
    let bits = T::from_u32(8 * f_bytes).expect("bit count fits");
    (bits * (-ber_value).ln_1p()).exp()
}

/// `prr(ber(sinr(i, j)))`.
pub fn link_prr<T: Scalar>(
    i: usize,
    j: usize,
    powers_mw: &[T],
    h: &ChannelGainMatrix<T>,
    n0: &NoiseFloor<T>,
    f_bytes: u32,
) -> Result<T> {
    let x = sinr(i, j, powers_mw, h, n0)?;
    Ok(prr(ber(x)?, f_bytes))
}

/// SINR that a link needs for its PRR to reach `target`.
pub(crate) fn sinr_for_prr<T: Scalar>(target: T, f_bytes: u32) -> T {
    let one = T::one();
    if target <= T::zero() {
        return T::zero();
    }
    if target >= one {
        return T::infinity();
    }
    let bits = T::from_u32(8 * f_bytes).expect("bit count fits");
    // 1 - BER = target^(1/bits); r = 1 - 2 BER; x = r^2 / (1 - r^2)
    let ber_target = -(target.ln() / bits).exp_m1();
    let r = one - T::lit(2.0) * ber_target;
    let r2 = r * r;
    r2 / (one - r2)
}

/// Gain matrix, noise floor and the fraction of time each interferer is on
/// the air. `interference_activity = 1` is the all-concurrent worst case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadioEnv<T> {
    pub gains: ChannelGainMatrix<T>,
    pub noise: NoiseFloor<T>,
    pub interference_activity: T,
}

impl<T: Scalar> RadioEnv<T> {
    pub fn new(gains: ChannelGainMatrix<T>, noise: NoiseFloor<T>, interference_activity: T) -> Result<Self> {
        if !(interference_activity >= T::zero() && interference_activity <= T::one()) {
            return Err(invalid("interference_activity", "must lie in [0, 1]"));
        }
        Ok(Self {
            gains,
            noise,
            interference_activity,
        })
    }

    /// Every node interferes all the time.
    pub fn worst_case(gains: ChannelGainMatrix<T>, noise: NoiseFloor<T>) -> Self {
        Self {
            gains,
            noise,
            interference_activity: T::one(),
        }
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    /// Denominator of the SINR of `i -> j`: scaled interference plus noise.
    #[inline]
    pub(crate) fn impairment(&self, i: usize, j: usize, powers_mw: &[T]) -> T {
        self.interference_activity * interference_at(i, j, powers_mw, &self.gains) + self.noise.n0_mw
    }

    pub fn sinr(&self, i: usize, j: usize, powers_mw: &[T]) -> Result<T> {
        check_pair(i, j, self.len())?;
        Ok(self.gains.get(i, j) * powers_mw[i] / self.impairment(i, j, powers_mw))
    }

    pub fn link_prr(&self, i: usize, j: usize, powers_mw: &[T], f_bytes: u32) -> Result<T> {
        Ok(prr(ber_unchecked(self.sinr(i, j, powers_mw)?), f_bytes))
    }

    /// Full PRR matrix, row = transmitter. Diagonal is zero.
    pub fn prr_matrix(&self, powers_mw: &[T], f_bytes: u32) -> Vec<Vec<T>> {
        let n = self.len();
        // received power at each j summed over all transmitters
        let totals: Vec<T> = (0..n)
            .map(|j| (0..n).filter(|&t| t != j).map(|t| self.gains.get(t, j) * powers_mw[t]).sum())
            .collect();
        let mut out = vec![vec![T::zero(); n]; n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                if i == j {
                    continue;
                }
                let signal = self.gains.get(i, j) * powers_mw[i];
                let interference = (totals[j] - signal).max(T::zero());
                let x = signal / (self.interference_activity * interference + self.noise.n0_mw);
                *cell = prr(ber_unchecked(x), f_bytes);
            }
        }
        out
    }
}
