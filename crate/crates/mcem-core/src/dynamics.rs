//! Graphical construction, kinetic Monte Carlo and transition enumeration.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;

use crate::lattice::{sample_state, Configuration, Domain, SiteState, VacancyType, NEUTRAL};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DynamicsError {
    #[error("state space of {0} configurations exceeds the enumeration cap")]
    RegionTooLarge(u64),
    #[error("burn-in {burn_in} not below trajectory time {t_max}")]
    BurnIn { burn_in: f64, t_max: f64 },
}

/// Enumeration cap for exhaustive checks.
pub const ENUMERATION_CAP: u64 = 1_000_000;

/// Poisson clock ring at site `site` with mark `mark` (a state tag).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ring {
    pub site: usize,
    pub time: f64,
    pub mark: u8,
}

/// Outcome of a ring under the legality rules.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingOutcome {
    /// Legal ring that changes the site to the given state.
    Flip(SiteState),
    /// Legal ring with `mark = ω_x`; nothing changes.
    Unchanged,
    /// Illegal ring; nothing changes.
    Illegal,
}

fn ring_outcome_tag(domain: &Domain, states: &[u8], x: usize, mark: u8) -> Option<u8> {
    let cur = states[x];
    match (mark, cur) {
        (NEUTRAL, NEUTRAL) => None,
        (NEUTRAL, h) => domain.facilitated(states, x, h).then_some(NEUTRAL),
        (h, NEUTRAL) => domain.facilitated(states, x, h).then_some(h),
        (h, c) if h == c => domain.facilitated(states, x, h).then_some(h),
        _ => None,
    }
}

/// Applies the ring rules at `x` for `mark`.
pub fn legal_ring(cfg: &Configuration, x: usize, mark: SiteState) -> RingOutcome {
    let Some(tag) = cfg.spec().tag_of_state(mark) else {
        return RingOutcome::Illegal;
    };
    match ring_outcome_tag(cfg.domain(), cfg.states(), x, tag) {
        None => RingOutcome::Illegal,
        Some(t) if t == cfg.tag(x) => RingOutcome::Unchanged,
        Some(t) => RingOutcome::Flip(cfg.spec().state_of_tag(t)),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FlipDirection {
    /// `⋆ → h`
    Create,
    /// `h → ⋆`
    Remove,
}

impl FlipDirection {
    pub fn symbol(self) -> &'static str {
        match self {
            FlipDirection::Create => "+",
            FlipDirection::Remove => "-",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionRate {
    pub site: usize,
    pub h: VacancyType,
    pub direction: FlipDirection,
    pub rate: f64,
}

pub(crate) fn for_each_transition<F: FnMut(usize, u8, u8, f64)>(domain: &Domain, states: &[u8], mut f: F) {
    let spec = domain.spec();
    for (x, &cur) in states.iter().enumerate() {
        if cur == NEUTRAL {
            for t in 1..=spec.num_types() as u8 {
                if domain.facilitated(states, x, t) {
                    f(x, t, t, spec.weight(t));
                }
            }
        } else if domain.facilitated(states, x, cur) {
            f(x, cur, NEUTRAL, spec.p());
        }
    }
}

/// Every positive-rate transition out of `cfg`.
pub fn enumerate_transitions(cfg: &Configuration) -> Vec<TransitionRate> {
    let spec = cfg.spec();
    let mut out = Vec::new();
    for_each_transition(cfg.domain(), cfg.states(), |x, t, new, rate| {
        out.push(TransitionRate {
            site: x,
            h: spec.vacancy(t),
            direction: if new == NEUTRAL { FlipDirection::Remove } else { FlipDirection::Create },
            rate,
        });
    });
    out
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AppliedTransition {
    pub time: f64,
    pub site: usize,
    pub old: u8,
    pub new: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    /// Per-site rate-1 clocks with marks drawn from `ν`.
    GraphicalConstruction,
    /// Aggregate-rate event sampling over enumerated transitions.
    Gillespie,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::GraphicalConstruction => "graphical",
            Engine::Gillespie => "gillespie",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub initial: Configuration,
    pub transitions: Vec<AppliedTransition>,
    pub final_state: Configuration,
    pub t_max: f64,
    pub engine: Engine,
}

impl Trajectory {
    /// Replays the transitions, checking legality of each; returns the index
    /// of the first bad transition on failure.
    pub fn replay(&self) -> Result<Configuration, usize> {
        let domain = self.initial.domain();
        let mut states = self.initial.states().to_vec();
        let mut last = 0.0;
        for (i, tr) in self.transitions.iter().enumerate() {
            if tr.time < last || tr.time > self.t_max || states[tr.site] != tr.old {
                return Err(i);
            }
            let h = if tr.old == NEUTRAL { tr.new } else { tr.old };
            let ok = (tr.old == NEUTRAL) != (tr.new == NEUTRAL) && domain.facilitated(&states, tr.site, h);
            if !ok {
                return Err(i);
            }
            states[tr.site] = tr.new;
            last = tr.time;
        }
        Ok(self.initial.with_states(states))
    }

    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> Configuration {
        let mut states = self.initial.states().to_vec();
        for tr in &self.transitions {
            if tr.time > t {
                break;
            }
            states[tr.site] = tr.new;
        }
        self.initial.with_states(states)
    }
}

#[derive(PartialEq)]
struct Clock {
    time: f64,
    site: usize,
}

impl Eq for Clock {}

impl Ord for Clock {
    // Min-heap on (time, site).
    fn cmp(&self, other: &Self) -> Ordering {
        other.time.total_cmp(&self.time).then_with(|| other.site.cmp(&self.site))
    }
}

impl PartialOrd for Clock {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u: f64 = rng.gen();
    -libm::log1p(-u)
}

/// Reference engine: replays every site's rate-1 clock up to `t_max`.
pub fn kmc_run<R: Rng + ?Sized>(cfg0: &Configuration, t_max: f64, rng: &mut R) -> Trajectory {
    let domain = cfg0.domain();
    let spec = domain.spec();
    let mut states = cfg0.states().to_vec();
    let mut heap: BinaryHeap<Clock> = (0..states.len()).map(|site| Clock { time: exp1(rng), site }).collect();
    let mut transitions = Vec::new();
    while let Some(Clock { time, site }) = heap.pop() {
        if time > t_max {
            break;
        }
        let mark = sample_state(spec, rng);
        if let Some(new) = ring_outcome_tag(domain, &states, site, mark) {
            if new != states[site] {
                transitions.push(AppliedTransition { time, site, old: states[site], new });
                states[site] = new;
            }
        }
        heap.push(Clock { time: time + exp1(rng), site });
    }
    Trajectory {
        initial: cfg0.clone(),
        final_state: cfg0.with_states(states),
        transitions,
        t_max,
        engine: Engine::GraphicalConstruction,
    }
}

/// Aggregate engine: exponential holding times at the total rate.
pub fn kmc_run_gillespie<R: Rng + ?Sized>(cfg0: &Configuration, t_max: f64, rng: &mut R) -> Trajectory {
    let domain = cfg0.domain();
    let mut states = cfg0.states().to_vec();
    let mut transitions = Vec::new();
    let mut t = 0.0;
    let mut events: Vec<(usize, u8, f64)> = Vec::new();
    loop {
        events.clear();
        for_each_transition(domain, &states, |x, _, new, rate| events.push((x, new, rate)));
        let total: f64 = events.iter().map(|e| e.2).sum();
        if total <= 0.0 {
            break;
        }
        t += exp1(rng) / total;
        if t > t_max {
            break;
        }
        let target = rng.gen::<f64>() * total;
        let mut acc = 0.0;
        let mut pick = events.len() - 1;
        for (i, e) in events.iter().enumerate() {
            acc += e.2;
            if target < acc {
                pick = i;
                break;
            }
        }
        let (site, new, _) = events[pick];
        transitions.push(AppliedTransition { time: t, site, old: states[site], new });
        states[site] = new;
    }
    Trajectory {
        initial: cfg0.clone(),
        final_state: cfg0.with_states(states),
        transitions,
        t_max,
        engine: Engine::Gillespie,
    }
}

/// Time-weighted occupancy of each state per site over `[burn_in, t_max]`;
/// `out[x][tag]`.
pub fn empirical_marginals(traj: &Trajectory, burn_in: f64) -> Result<Vec<Vec<f64>>, DynamicsError> {
    if !(burn_in < traj.t_max) {
        return Err(DynamicsError::BurnIn { burn_in, t_max: traj.t_max });
    }
    let k = traj.initial.spec().num_states();
    let n = traj.initial.states().len();
    let span = traj.t_max - burn_in;
    let mut occ = vec![vec![0.0; k]; n];
    let mut states = traj.initial.states().to_vec();
    let mut since = vec![burn_in; n];
    for tr in &traj.transitions {
        if tr.time > burn_in {
            occ[tr.site][states[tr.site] as usize] += tr.time - since[tr.site];
            since[tr.site] = tr.time;
        }
        states[tr.site] = tr.new;
    }
    for x in 0..n {
        occ[x][states[x] as usize] += traj.t_max - since[x];
        for v in occ[x].iter_mut() {
            *v /= span;
        }
    }
    Ok(occ)
}

/// Calls `f(index, states)` for every configuration of the domain in
/// mixed-radix order (site 0 least significant).
pub(crate) fn for_each_state<F: FnMut(usize, &[u8])>(n_sites: usize, base: u8, mut f: F) {
    let mut states = vec![0u8; n_sites];
    let mut idx = 0usize;
    loop {
        f(idx, &states);
        idx += 1;
        let mut i = 0;
        loop {
            if i == n_sites {
                return;
            }
            states[i] += 1;
            if states[i] < base {
                break;
            }
            states[i] = 0;
            i += 1;
        }
    }
}

/// Max over single-site pairs of `|μ(ω) r(ω→η) − μ(η) r(η→ω)|`, with rates
/// supplied by `rates(domain, states)` as `(site, new_tag, rate)` triples.
pub fn detailed_balance_with<F>(domain: &Domain, rates: F) -> Result<f64, DynamicsError>
where
    F: Fn(&Domain, &[u8]) -> Vec<(usize, u8, f64)>,
{
    let total = domain.state_space_size().unwrap_or(u64::MAX);
    if total > ENUMERATION_CAP {
        return Err(DynamicsError::RegionTooLarge(total));
    }
    let base = domain.spec().num_states() as u8;
    let mut worst: f64 = 0.0;
    for_each_state(domain.len(), base, |_, states| {
        let mw = domain.weight(states);
        let out = rates(domain, states);
        let mut eta = states.to_vec();
        for x in 0..states.len() {
            for new in 0..base {
                if new == states[x] {
                    continue;
                }
                let fwd = out.iter().filter(|r| r.0 == x && r.1 == new).map(|r| r.2).sum::<f64>();
                eta[x] = new;
                let me = domain.weight(&eta);
                let back =
                    rates(domain, &eta).iter().filter(|r| r.0 == x && r.1 == states[x]).map(|r| r.2).sum::<f64>();
                eta[x] = states[x];
                worst = worst.max(libm::fabs(mw * fwd - me * back));
            }
        }
    });
    Ok(worst)
}

/// Detailed-balance residual of the model's own rates.
pub fn detailed_balance_check(domain: &Domain) -> Result<f64, DynamicsError> {
    detailed_balance_with(domain, model_rates)
}

/// The model's rates as `(site, new_tag, rate)`.
pub fn model_rates(domain: &Domain, states: &[u8]) -> Vec<(usize, u8, f64)> {
    let mut v = Vec::new();
    for_each_transition(domain, states, |x, _, new, rate| v.push((x, new, rate)));
    v
}
