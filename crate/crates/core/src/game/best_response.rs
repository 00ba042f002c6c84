use serde::{Deserialize, Serialize};

use crate::channel::{mw_to_strategy, sinr_for_prr, RadioEnv};
use crate::profile::StrategyProfile;
use crate::scalar::Scalar;
use crate::topology::{degree_floor, DegreeFloor};

use super::{GameParams, NodeView};

/// Uniform samples taken over the search interval before refinement.
pub const PRESCAN_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse<T> {
    pub s: T,
    pub utility: T,
    /// Degree rule reachable within the strategy box.
    pub feasible: bool,
    /// Some stretch with a fixed neighbour set showed more than one local
    /// maximum in the pre-scan.
    pub non_unimodal: bool,
}

/// Golden-section search for the maximum of `f` on `[a, b]`.
pub fn golden_section_max<T: Scalar, F: FnMut(T) -> T>(mut f: F, a: T, b: T, tol: T) -> (T, T) {
    let inv_phi = T::lit(0.618_033_988_749_894_9);
    let (mut lo, mut hi) = if a <= b { (a, b) } else { (b, a) };
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

#[derive(Clone, Copy)]
struct Sample<T> {
    s: T,
    u: T,
}

fn better<T: Scalar>(candidate: Sample<T>, incumbent: Sample<T>) -> bool {
    candidate.u > incumbent.u || (candidate.u == incumbent.u && candidate.s < incumbent.s)
}

/// Node `i`'s utility-maximising strategy with everyone else frozen.
///
/// The degree floor is found first. Above it, the own power where each
/// further receiver joins the neighbour set splits the interval into pieces
/// with a fixed neighbour set; the pre-scan samples are assigned to those
/// pieces and the best sample of each piece is refined by golden-section
/// search inside its bracketing samples. The best feasible point is finally
/// compared with the bare-cost option at `s_min`. Candidates keep a
/// distance of `convergence_tol` from both kinds of edge.
pub fn best_response<T: Scalar>(
    i: usize,
    profile: &StrategyProfile<T>,
    env: &RadioEnv<T>,
    params: &GameParams<T>,
) -> BestResponse<T> {
    let view = NodeView::new(i, profile, env, params);
    let (s_min, s_max) = profile.bounds();
    // stay this far inside every edge where the neighbour set changes, so
    // the drift of the others below convergence_tol cannot push the node
    // across it
    let guard = params.convergence_tol;
    let floor = degree_floor(view.links(), s_min, s_max, params.epsilon_link, view.required_degree());
    let lo = match floor {
        DegreeFloor::Infeasible => {
            return BestResponse {
                s: s_min,
                utility: view.utility_at(s_min).0,
                feasible: false,
                non_unimodal: false,
            };
        }
        DegreeFloor::Feasible(pt) if pt > s_min => (pt + guard).min(s_max),
        DegreeFloor::Feasible(_) => s_min,
    };

    let eval = |s: T| Sample {
        s,
        u: view.utility_at(s).0,
    };

    // own strategy where each receiver's PRR reaches epsilon_link
    let entry = sinr_for_prr(params.epsilon_link, params.f_bytes);
    let mut breaks: Vec<T> = view
        .links()
        .links
        .iter()
        .map(|&(_, g, imp)| mw_to_strategy(entry * imp / g))
        .filter(|b| b.is_finite() && *b > lo && *b < s_max)
        .collect();
    breaks.sort_by(|a, b| a.partial_cmp(b).expect("finite break points"));
    breaks.dedup();

    let samples = PRESCAN_SAMPLES.max(2);
    let step = (s_max - lo) / T::from_usize_lossy(samples - 1);
    let grid: Vec<T> = (0..samples).map(|k| lo + step * T::from_usize_lossy(k)).collect();

    let mut best: Option<Sample<T>> = None;
    let mut non_unimodal = false;
    let mut seg_start = lo;
    for seg in 0..=breaks.len() {
        let seg_end = breaks.get(seg).map_or(s_max, |&b| b - guard);
        if seg_end >= seg_start {
            let mut pts: Vec<Sample<T>> = vec![eval(seg_start)];
            pts.extend(grid.iter().filter(|&&g| g > seg_start && g < seg_end).map(|&g| eval(g)));
            if seg_end > seg_start {
                pts.push(eval(seg_end));
            }
            if local_maxima(&pts) > 1 {
                non_unimodal = true;
            }
            let k = (0..pts.len()).fold(0, |acc, k| if better(pts[k], pts[acc]) { k } else { acc });
            let mut seg_best = pts[k];
            if pts.len() > 1 {
                let a = pts[k.saturating_sub(1)].s;
                let b = pts[(k + 1).min(pts.len() - 1)].s;
                if b - a > params.br_tol {
                    let (s, u) = golden_section_max(|s| view.utility_at(s).0, a, b, params.br_tol);
                    let refined = Sample { s, u };
                    if better(refined, seg_best) {
                        seg_best = refined;
                    }
                }
            }
            if best.is_none_or(|b| better(seg_best, b)) {
                best = Some(seg_best);
            }
        }
        if let Some(&b) = breaks.get(seg) {
            seg_start = b + guard;
        }
    }
    let mut best = best.unwrap_or_else(|| eval(lo));

    if lo > s_min {
        let bare = eval(s_min);
        if better(bare, best) {
            best = bare;
        }
    }

    BestResponse {
        s: best.s,
        utility: best.u,
        feasible: true,
        non_unimodal,
    }
}

/// Number of local maxima (endpoints included) of an ordered sample
/// sequence, with runs of equal values merged.
fn local_maxima<T: Scalar>(pts: &[Sample<T>]) -> usize {
    let mut u: Vec<T> = Vec::with_capacity(pts.len());
    for p in pts {
        if u.last() != Some(&p.u) {
            u.push(p.u);
        }
    }
    if u.len() < 2 {
        return u.len();
    }
    let last = u.len() - 1;
    (0..=last)
        .filter(|&k| (k == 0 || u[k] > u[k - 1]) && (k == last || u[k] > u[k + 1]))
        .count()
}
