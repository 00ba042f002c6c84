//! Node placement, PRR-thresholded neighbourhoods, degree thresholds and
//! connectivity checks.

pub mod spectral;

use std::collections::{BTreeSet, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{prr, ber_unchecked, strategy_to_mw, Position, RadioEnv};
use crate::error::{invalid, Error, Result};
use crate::profile::StrategyProfile;
use crate::scalar::Scalar;

/// Constant of the random geometric graph connectivity bound `c * log N`.
pub const RGG_DEGREE_CONSTANT: f64 = 5.1774;

/// Node degree the game asks every node to reach by default.
pub const DEFAULT_DEGREE_TARGET: usize = 6;

/// Deployment area in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Area<T> {
    pub width: T,
    pub height: T,
}

impl<T: Scalar> Area<T> {
    pub fn new(width: T, height: T) -> Result<Self> {
        if !(width > T::zero() && height > T::zero() && width.is_finite() && height.is_finite()) {
            return Err(invalid("area", "width and height must be positive"));
        }
        Ok(Self { width, height })
    }

    pub fn contains(&self, p: &Position<T>) -> bool {
        p.x >= T::zero() && p.x <= self.width && p.y >= T::zero() && p.y <= self.height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TopologyFile<T>", into = "TopologyFile<T>")]
#[serde(bound(
    serialize = "T: Scalar + Serialize",
    deserialize = "T: Scalar + Deserialize<'de>"
))]
pub struct Topology<T> {
    pub positions: Vec<Position<T>>,
    pub area: Area<T>,
    pub seed: u64,
}

impl<T: Scalar> Topology<T> {
    pub fn new(positions: Vec<Position<T>>, area: Area<T>, seed: u64) -> Result<Self> {
        if positions.len() < 2 {
            return Err(Error::TooFewNodes {
                required: 2,
                got: positions.len(),
            });
        }
        if let Some(i) = positions.iter().position(|p| !p.is_finite() || !area.contains(p)) {
            return Err(invalid("positions", format!("node {i} lies outside the area")));
        }
        Ok(Self { positions, area, seed })
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct NodeRecord<T> {
    id: usize,
    x: T,
    y: T,
}

/// On-disk layout: `{"area": {..}, "seed": n, "nodes": [{"id", "x", "y"}, ..]}`.
#[derive(Serialize, Deserialize)]
struct TopologyFile<T> {
    area: Area<T>,
    seed: u64,
    nodes: Vec<NodeRecord<T>>,
}

impl<T: Scalar> TryFrom<TopologyFile<T>> for Topology<T> {
    type Error = Error;

    fn try_from(file: TopologyFile<T>) -> Result<Self> {
        let mut nodes = file.nodes;
        nodes.sort_by_key(|n| n.id);
        if nodes.iter().enumerate().any(|(i, n)| n.id != i) {
            return Err(invalid("nodes", "ids must be 0..M without gaps"));
        }
        let area = Area::new(file.area.width, file.area.height)?;
        Topology::new(nodes.into_iter().map(|n| Position::new(n.x, n.y)).collect(), area, file.seed)
    }
}

impl<T: Scalar> From<Topology<T>> for TopologyFile<T> {
    fn from(t: Topology<T>) -> Self {
        TopologyFile {
            area: t.area,
            seed: t.seed,
            nodes: t
                .positions
                .into_iter()
                .enumerate()
                .map(|(id, p)| NodeRecord { id, x: p.x, y: p.y })
                .collect(),
        }
    }
}

/// Uniform i.i.d. placement of `m` nodes in the area.
pub fn random_topology<T: Scalar>(m: usize, area: Area<T>, seed: u64) -> Result<Topology<T>> {
    if m < 2 {
        return Err(Error::TooFewNodes { required: 2, got: m });
    }
    let area = Area::new(area.width, area.height)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let positions = (0..m)
        .map(|_| {
            let ux: f64 = rng.random();
            let uy: f64 = rng.random();
            Position::new(area.width * T::lit(ux), area.height * T::lit(uy))
        })
        .collect();
    Topology::new(positions, area, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSet<T> {
    pub owner: usize,
    pub members: BTreeSet<usize>,
    pub epsilon_link: T,
}

impl<T> NeighborSet<T> {
    pub fn degree(&self) -> usize {
        self.members.len()
    }
}

/// The outgoing links of one node with everyone else's power frozen.
///
/// The impairment (scaled interference plus noise) seen on `owner -> j`
/// excludes the owner's own transmission, so each link's PRR is a function
/// of the owner's power alone.
#[derive(Debug, Clone)]
pub(crate) struct NodeLinks<T> {
    pub owner: usize,
    pub f_bytes: u32,
    // (receiver, gain, impairment)
    pub links: Vec<(usize, T, T)>,
}

impl<T: Scalar> NodeLinks<T> {
    pub fn new(owner: usize, profile: &StrategyProfile<T>, env: &RadioEnv<T>, f_bytes: u32) -> Self {
        let powers = profile.powers_mw();
        let links = (0..env.len())
            .filter(|&j| j != owner)
            .map(|j| (j, env.gains.get(owner, j), env.impairment(owner, j, &powers)))
            .collect();
        Self { owner, f_bytes, links }
    }

    /// PRR of every outgoing link when the owner plays `s`.
    pub fn prrs_at(&self, s: T) -> impl Iterator<Item = (usize, T)> + '_ {
        let p = strategy_to_mw(s);
        self.links
            .iter()
            .map(move |&(j, g, imp)| (j, prr(ber_unchecked(g * p / imp), self.f_bytes)))
    }

    pub fn degree_at(&self, s: T, epsilon_link: T) -> usize {
        self.prrs_at(s).filter(|&(_, q)| q >= epsilon_link).count()
    }
}

/// Receivers `j` with `link_prr(i, j) >= epsilon_link` under the profile.
pub fn neighbor_set<T: Scalar>(
    i: usize,
    profile: &StrategyProfile<T>,
    env: &RadioEnv<T>,
    f_bytes: u32,
    epsilon_link: T,
) -> NeighborSet<T> {
    let links = NodeLinks::new(i, profile, env, f_bytes);
    let members = links
        .prrs_at(profile.get(i))
        .filter(|&(_, q)| q >= epsilon_link)
        .map(|(j, _)| j)
        .collect();
    NeighborSet {
        owner: i,
        members,
        epsilon_link,
    }
}

/// `5.1774 * ln(N)`.
pub fn rgg_degree_threshold<T: Scalar>(n: usize) -> Result<T> {
    rgg_degree_threshold_base(n, T::lit(std::f64::consts::E))
}

/// `5.1774 * log_base(N)` for an explicit logarithm base.
pub fn rgg_degree_threshold_base<T: Scalar>(n: usize, base: T) -> Result<T> {
    if n < 2 {
        return Err(Error::TooFewNodes { required: 2, got: n });
    }
    if !(base > T::one()) {
        return Err(invalid("base", "logarithm base must exceed 1"));
    }
    Ok(T::lit(RGG_DEGREE_CONSTANT) * T::from_usize_lossy(n).log(base))
}

/// Nearest-neighbour and shortcut counts that keep a small-world graph
/// on `M` nodes connected: both equal `(1 + delta) sqrt(2 ln M)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmallWorldParams<T> {
    pub delta: T,
    pub m_nearest: usize,
    pub shortcut_expectation: T,
}

impl<T: Scalar> SmallWorldParams<T> {
    /// The `m + Np` degree that Algorithm-style play compares against.
    pub fn degree_bound(&self) -> T {
        T::from_usize_lossy(self.m_nearest) + self.shortcut_expectation
    }
}

pub fn smallworld_threshold<T: Scalar>(m: usize, delta: T) -> Result<SmallWorldParams<T>> {
    if m < 2 {
        return Err(Error::TooFewNodes { required: 2, got: m });
    }
    if !(delta > T::zero() && delta.is_finite()) {
        return Err(invalid("delta", "must be positive"));
    }
    let raw = (T::one() + delta) * (T::lit(2.0) * T::from_usize_lossy(m).ln()).sqrt();
    Ok(SmallWorldParams {
        delta,
        m_nearest: raw.ceil().to_usize().expect("small positive count"),
        shortcut_expectation: raw,
    })
}

/// Degree requirement a node must meet for the reliability term to count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum DegreeRule<T> {
    /// degree >= k
    FixedK { k: usize },
    /// degree > m + Np of the small-world bound
    SmallWorld { delta: T },
}

impl<T: Scalar> Default for DegreeRule<T> {
    fn default() -> Self {
        DegreeRule::FixedK {
            k: DEFAULT_DEGREE_TARGET,
        }
    }
}

impl<T: Scalar> DegreeRule<T> {
    /// Smallest integer degree that satisfies the rule in an `m`-node network.
    pub fn required_degree(&self, m: usize) -> usize {
        match *self {
            DegreeRule::FixedK { k } => k,
            DegreeRule::SmallWorld { delta } => match smallworld_threshold(m.max(2), delta) {
                Ok(sw) => sw.degree_bound().floor().to_usize().unwrap_or(usize::MAX) + 1,
                Err(_) => usize::MAX,
            },
        }
    }
}

/// Outcome of the minimum-power search.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegreeFloor<T> {
    Feasible(T),
    Infeasible,
}

impl<T: Copy> DegreeFloor<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            DegreeFloor::Feasible(s) => Some(*s),
            DegreeFloor::Infeasible => None,
        }
    }
}

/// Bisection width of [`min_power_for_degree`].
pub const DEGREE_FLOOR_TOL: f64 = 1e-6;

/// Smallest own strategy (to within `1e-6`) at which node `i` has at least
/// `k` neighbours, others held at the profile. Node `i`'s own entry in the
/// profile is ignored.
pub fn min_power_for_degree<T: Scalar>(
    i: usize,
    profile_others: &StrategyProfile<T>,
    env: &RadioEnv<T>,
    f_bytes: u32,
    epsilon_link: T,
    k: usize,
) -> DegreeFloor<T> {
    let links = NodeLinks::new(i, profile_others, env, f_bytes);
    degree_floor(&links, profile_others.s_min(), profile_others.s_max(), epsilon_link, k)
}

pub(crate) fn degree_floor<T: Scalar>(
    links: &NodeLinks<T>,
    s_min: T,
    s_max: T,
    epsilon_link: T,
    k: usize,
) -> DegreeFloor<T> {
    if k == 0 || links.degree_at(s_min, epsilon_link) >= k {
        return DegreeFloor::Feasible(s_min);
    }
    if links.degree_at(s_max, epsilon_link) < k {
        return DegreeFloor::Infeasible;
    }
    let (mut lo, mut hi) = (s_min, s_max);
    let tol = T::lit(DEGREE_FLOOR_TOL);
    while hi - lo > tol {
        let mid = T::lit(0.5) * (lo + hi);
        if links.degree_at(mid, epsilon_link) >= k {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    DegreeFloor::Feasible(hi)
}

/// Symmetric boolean adjacency with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdjacencyMatrix {
    n: usize,
    edges: Vec<bool>,
}

impl AdjacencyMatrix {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            edges: vec![false; n * n],
        }
    }

    pub fn complete(n: usize) -> Self {
        let mut adj = Self::empty(n);
        for i in 0..n {
            for j in (i + 1)..n {
                adj.set_edge(i, j, true);
            }
        }
        adj
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges[i * self.n + j]
    }

    /// Sets both directions; self-loops are ignored.
    pub fn set_edge(&mut self, i: usize, j: usize, present: bool) {
        if i == j {
            return;
        }
        self.edges[i * self.n + j] = present;
        self.edges[j * self.n + i] = present;
    }

    pub fn degree(&self, i: usize) -> usize {
        (0..self.n).filter(|&j| self.has_edge(i, j)).count()
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| !self.has_edge(i, i) && (0..self.n).all(|j| self.has_edge(i, j) == self.has_edge(j, i)))
    }
}

/// Edge `(i, j)` exists iff both directed links reach `epsilon_link`.
pub fn adjacency<T: Scalar>(
    profile: &StrategyProfile<T>,
    env: &RadioEnv<T>,
    f_bytes: u32,
    epsilon_link: T,
) -> AdjacencyMatrix {
    let prrs = env.prr_matrix(&profile.powers_mw(), f_bytes);
    adjacency_from_prr(&prrs, epsilon_link)
}

pub fn adjacency_from_prr<T: Scalar>(prrs: &[Vec<T>], epsilon_link: T) -> AdjacencyMatrix {
    let n = prrs.len();
    let mut adj = AdjacencyMatrix::empty(n);
    for i in 0..n {
        for j in (i + 1)..n {
            adj.set_edge(i, j, prrs[i][j] >= epsilon_link && prrs[j][i] >= epsilon_link);
        }
    }
    adj
}

/// One breadth-first traversal from node 0 reaches every node.
pub fn is_connected_bfs(adj: &AdjacencyMatrix) -> bool {
    let n = adj.len();
    if n <= 1 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0usize]);
    seen[0] = true;
    let mut reached = 1;
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if !seen[v] && adj.has_edge(u, v) {
                seen[v] = true;
                reached += 1;
                queue.push_back(v);
            }
        }
    }
    reached == n
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralConnectivity {
    pub connected: bool,
    pub lambda2: f64,
    pub isolated_nodes: usize,
}

/// Connected iff no node has degree zero and the Laplacian's zero
/// eigenvalue is simple (`lambda2 > 1e-8`).
pub fn is_connected_spectral(adj: &AdjacencyMatrix) -> SpectralConnectivity {
    let isolated_nodes = (0..adj.len()).filter(|&i| adj.degree(i) == 0).count();
    if adj.len() <= 1 {
        return SpectralConnectivity {
            connected: true,
            lambda2: 0.0,
            isolated_nodes: 0,
        };
    }
    let lambda2: f64 = spectral::algebraic_connectivity(adj);
    SpectralConnectivity {
        connected: isolated_nodes == 0 && lambda2 > spectral::ZERO_EIGENVALUE_TOL,
        lambda2,
        isolated_nodes,
    }
}
