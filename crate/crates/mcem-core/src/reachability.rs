//! Reachability, legal paths and the constructive ergodicity paths.

use alloc::boxed::Box;
use alloc::collections::{BTreeSet, VecDeque};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use hashbrown::HashMap;

use crate::dynamics::{for_each_transition, FlipDirection};
use crate::lattice::{
    constraint, directions, BoundaryCondition, Configuration, Domain, LatticeError, ModelSpec, Point, Region,
    SiteState, VacancyType, NEUTRAL,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReachError {
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("hypothesis violated: {0}")]
    Hypothesis(&'static str),
    #[error("no facilitating chain found for site {0}")]
    NoChain(usize),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Default BFS cap.
pub const DEFAULT_CAP: usize = 1_000_000;

/// Certificate of one step: site, vacancy type and flip direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Step {
    pub site: usize,
    pub h: VacancyType,
    pub direction: FlipDirection,
}

/// Consecutive configurations with per-step certificates
/// (`steps.len() + 1 == configs.len()`).
#[derive(Clone, Debug, PartialEq)]
pub struct LegalPath {
    pub domain: Arc<Domain>,
    pub configs: Vec<Vec<u8>>,
    pub steps: Vec<Step>,
}

impl LegalPath {
    /// Number of configurations.
    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn first(&self) -> Configuration {
        Configuration::new(self.domain.clone(), self.configs[0].clone()).expect("path states")
    }

    pub fn last(&self) -> Configuration {
        Configuration::new(self.domain.clone(), self.configs[self.configs.len() - 1].clone()).expect("path states")
    }

    pub fn reversed(&self) -> LegalPath {
        let configs: Vec<Vec<u8>> = self.configs.iter().rev().cloned().collect();
        let steps = self
            .steps
            .iter()
            .rev()
            .map(|s| Step {
                direction: match s.direction {
                    FlipDirection::Create => FlipDirection::Remove,
                    FlipDirection::Remove => FlipDirection::Create,
                },
                ..*s
            })
            .collect();
        LegalPath { domain: self.domain.clone(), configs, steps }
    }

    /// Rebuilds the configurations from a start state and step list.
    pub fn from_steps(start: &Configuration, steps: Vec<Step>) -> Result<LegalPath, ReachError> {
        let spec = start.spec();
        let mut configs = vec![start.states().to_vec()];
        let mut cur = start.states().to_vec();
        for s in &steps {
            let tag = spec.tag_of(s.h).ok_or(LatticeError::TypeNotInModel)?;
            if s.site >= cur.len() {
                return Err(LatticeError::SiteOutsideRegion.into());
            }
            cur[s.site] = match s.direction {
                FlipDirection::Create => tag,
                FlipDirection::Remove => NEUTRAL,
            };
            configs.push(cur.clone());
        }
        Ok(LegalPath { domain: start.domain().clone(), configs, steps })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PathReport {
    pub valid: bool,
    pub first_bad_index: Option<usize>,
    /// Sites that change somewhere along the path.
    pub touched_sites: Vec<usize>,
    pub length: usize,
}

/// Checks single-site differences, certificates and constraints step by step.
///
/// `first_bad_index` is the index `i` of the first failing transition
/// `ω^(i) → ω^(i+1)` (0-based).
pub fn verify_legal_path(path: &LegalPath) -> PathReport {
    let domain = &path.domain;
    let spec = domain.spec();
    let mut touched = BTreeSet::new();
    let mut bad = None;
    if path.configs.is_empty() || path.steps.len() + 1 != path.configs.len() {
        bad = Some(0);
    }
    for (i, pair) in path.configs.windows(2).enumerate() {
        if bad.is_some() {
            break;
        }
        let (a, b) = (&pair[0], &pair[1]);
        if a.len() != domain.len() || b.len() != domain.len() {
            bad = Some(i);
            break;
        }
        let diff: Vec<usize> = (0..a.len()).filter(|&x| a[x] != b[x]).collect();
        let ok = diff.len() == 1 && {
            let x = diff[0];
            let step = &path.steps[i];
            let h = if a[x] == NEUTRAL { b[x] } else { a[x] };
            let shape = (a[x] == NEUTRAL) != (b[x] == NEUTRAL);
            let cert = step.site == x
                && spec.tag_of(step.h) == Some(h)
                && step.direction == if a[x] == NEUTRAL { FlipDirection::Create } else { FlipDirection::Remove };
            shape
                && cert
                && Configuration::new(domain.clone(), a.clone())
                    .ok()
                    .and_then(|c| constraint(&c, x, step.h).ok())
                    .unwrap_or(false)
        };
        if !ok {
            bad = Some(i);
            break;
        }
        touched.insert(diff[0]);
    }
    PathReport {
        valid: bad.is_none(),
        first_bad_index: bad,
        touched_sites: touched.into_iter().collect(),
        length: path.configs.len(),
    }
}

/// Result of the blocked-core predicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockedCore {
    /// `ω_{t + 1 − h} = h` for every `h ∈ H_d`.
    pub blocked: bool,
    /// Whether `G = H_d`; otherwise the predicate cannot hold.
    pub g_is_hypercube: bool,
}

/// Blocked-core predicate on the copy `t + H_d`.
pub fn is_blocked_core(cfg: &Configuration, t: &Point) -> BlockedCore {
    let d = cfg.spec().dim();
    let g_is_hypercube = cfg.spec().num_types() == 1 << d;
    let blocked = VacancyType::hypercube(d)
        .into_iter()
        .all(|h| cfg.at(&(*t + h.opposite().corner())) == Some(SiteState::Vacancy(h)));
    BlockedCore { blocked, g_is_hypercube }
}

/// The blocked configuration on the box `H_d` itself, `G = H_d`, closed.
pub fn blocked_core_config(spec: &ModelSpec) -> Result<Configuration, ReachError> {
    let d = spec.dim();
    if spec.num_types() != 1 << d {
        return Err(ReachError::InvalidParams("G must be the full hypercube"));
    }
    let region = Region::new_box(&vec![0; d], &vec![2; d])?;
    let domain = Arc::new(Domain::new(spec.clone(), region, BoundaryCondition::Closed)?);
    let mut cfg = Configuration::neutral(domain);
    for h in VacancyType::hypercube(d) {
        cfg.set_at(&h.opposite().corner(), SiteState::Vacancy(h))?;
    }
    Ok(cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Reachable {
    /// Configurations in BFS order, starting with the source.
    pub states: Vec<Vec<u8>>,
    pub truncated: bool,
}

struct Bfs {
    index: HashMap<Box<[u8]>, u32>,
    order: Vec<Box<[u8]>>,
    parent: Vec<u32>,
}

fn bfs(cfg: &Configuration, cap: usize, target: Option<&[u8]>) -> (Bfs, bool, Option<u32>) {
    let domain = cfg.domain();
    let start: Box<[u8]> = cfg.states().into();
    let mut b = Bfs { index: HashMap::new(), order: vec![start.clone()], parent: vec![u32::MAX] };
    b.index.insert(start, 0);
    if target == Some(cfg.states()) {
        return (b, false, Some(0));
    }
    let mut head = 0usize;
    let mut truncated = false;
    let mut scratch: Vec<u8> = Vec::new();
    let mut moves: Vec<(usize, u8)> = Vec::new();
    while head < b.order.len() {
        scratch.clear();
        scratch.extend_from_slice(&b.order[head]);
        moves.clear();
        for_each_transition(domain, &scratch, |x, _, new, _| moves.push((x, new)));
        for &(x, new) in &moves {
            let old = scratch[x];
            scratch[x] = new;
            if !b.index.contains_key(scratch.as_slice()) {
                if b.order.len() >= cap {
                    truncated = true;
                    scratch[x] = old;
                    continue;
                }
                let key: Box<[u8]> = scratch.as_slice().into();
                let id = b.order.len() as u32;
                b.index.insert(key.clone(), id);
                b.order.push(key);
                b.parent.push(head as u32);
                if target == Some(scratch.as_slice()) {
                    return (b, truncated, Some(id));
                }
            }
            scratch[x] = old;
        }
        head += 1;
    }
    (b, truncated, None)
}

/// BFS closure of `cfg` under legal transitions, up to `cap` states.
pub fn reachable_set(cfg: &Configuration, cap: usize) -> Reachable {
    let (b, truncated, _) = bfs(cfg, cap, None);
    Reachable { states: b.order.into_iter().map(|s| s.into_vec()).collect(), truncated }
}

/// Shortest legal path from `from` to `to` within `cap` explored states.
pub fn find_legal_path(from: &Configuration, to: &Configuration, cap: usize) -> Option<LegalPath> {
    if from.domain() != to.domain() {
        return None;
    }
    let (b, _, hit) = bfs(from, cap, Some(to.states()));
    let mut id = hit?;
    let mut chain = vec![id];
    while b.parent[id as usize] != u32::MAX {
        id = b.parent[id as usize];
        chain.push(id);
    }
    chain.reverse();
    let configs: Vec<Vec<u8>> = chain.iter().map(|&i| b.order[i as usize].to_vec()).collect();
    let spec = from.spec();
    let steps = configs
        .windows(2)
        .map(|w| {
            let x = (0..w[0].len()).find(|&x| w[0][x] != w[1][x]).expect("one-site move");
            let (h, direction) =
                if w[0][x] == NEUTRAL { (w[1][x], FlipDirection::Create) } else { (w[0][x], FlipDirection::Remove) };
            Step { site: x, h: spec.vacancy(h), direction }
        })
        .collect();
    Some(LegalPath { domain: from.domain().clone(), configs, steps })
}

/// Incremental path construction with facilitating-chain scaffolds.
struct PathBuilder {
    domain: Arc<Domain>,
    cur: Vec<u8>,
    configs: Vec<Vec<u8>>,
    steps: Vec<Step>,
}

impl PathBuilder {
    fn new(start: &Configuration) -> Self {
        PathBuilder {
            domain: start.domain().clone(),
            cur: start.states().to_vec(),
            configs: vec![start.states().to_vec()],
            steps: Vec::new(),
        }
    }

    fn idx(&self, p: &Point) -> Result<usize, ReachError> {
        self.domain.region().index_of(p).ok_or(ReachError::InvalidParams("site outside construction region"))
    }

    fn flip(&mut self, x: usize, new: u8) {
        let old = self.cur[x];
        let h = if old == NEUTRAL { new } else { old };
        debug_assert!((old == NEUTRAL) != (new == NEUTRAL));
        debug_assert!(self.domain.facilitated(&self.cur, x, h), "builder produced an illegal flip");
        self.cur[x] = new;
        self.configs.push(self.cur.clone());
        self.steps.push(Step {
            site: x,
            h: self.domain.spec().vacancy(h),
            direction: if new == NEUTRAL { FlipDirection::Remove } else { FlipDirection::Create },
        });
    }

    /// Sites to fill with `tag`, in order, so that the last one (or an
    /// existing `tag` site) facilitates `x`. Chain sites are neutral and
    /// satisfy `allowed`.
    fn chain(&self, x: usize, tag: u8, allowed: &dyn Fn(&Point) -> bool) -> Option<Vec<usize>> {
        if self.domain.facilitated(&self.cur, x, tag) {
            return Some(Vec::new());
        }
        let region = self.domain.region();
        let h = self.domain.spec().vacancy(tag);
        let dirs: Vec<Point> = directions(h).iter().map(|d| d.vector()).collect();
        let px = region.point(x);
        let is_goal = |p: &Point| dirs.iter().any(|v| *p + *v == px);
        let n = self.cur.len();
        let mut prev = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        for s in 0..n {
            if self.cur[s] == tag && s != x {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(s) = queue.pop_front() {
            let ps = region.point(s);
            for v in &dirs {
                let py = ps + *v;
                let Some(y) = region.index_of(&py) else { continue };
                if seen[y] || y == x || self.cur[y] != NEUTRAL || !allowed(&py) {
                    continue;
                }
                seen[y] = true;
                prev[y] = s;
                if is_goal(&py) {
                    let mut out = vec![y];
                    let mut c = y;
                    while prev[c] != usize::MAX {
                        c = prev[c];
                        if self.cur[c] == NEUTRAL {
                            out.push(c);
                        }
                    }
                    out.reverse();
                    return Some(out);
                }
                queue.push_back(y);
            }
        }
        None
    }

    fn scaffolded_flip(
        &mut self,
        x: usize,
        tag: u8,
        new: u8,
        allowed: &dyn Fn(&Point) -> bool,
    ) -> Result<(), ReachError> {
        let chain = self.chain(x, tag, allowed).ok_or(ReachError::NoChain(x))?;
        for &y in &chain {
            self.flip(y, tag);
        }
        self.flip(x, new);
        for &y in chain.iter().rev() {
            self.flip(y, NEUTRAL);
        }
        Ok(())
    }

    fn set_neutral(&mut self, x: usize, allowed: &dyn Fn(&Point) -> bool) -> Result<(), ReachError> {
        let tag = self.cur[x];
        if tag == NEUTRAL {
            return Ok(());
        }
        self.scaffolded_flip(x, tag, NEUTRAL, allowed)
    }

    fn set_vacancy(&mut self, x: usize, tag: u8, allowed: &dyn Fn(&Point) -> bool) -> Result<(), ReachError> {
        if self.cur[x] == tag {
            return Ok(());
        }
        self.set_neutral(x, allowed)?;
        self.scaffolded_flip(x, tag, tag, allowed)
    }

    fn config(&self) -> Configuration {
        Configuration::new(self.domain.clone(), self.cur.clone()).expect("builder states")
    }

    fn finish(self) -> LegalPath {
        LegalPath { domain: self.domain, configs: self.configs, steps: self.steps }
    }
}

fn anywhere(_: &Point) -> bool {
    true
}

/// `G = H_{d−1} ⊗ {0}` with equal densities.
pub fn hd_good_spec(d: usize) -> Result<ModelSpec, ReachError> {
    if d < 2 {
        return Err(ReachError::InvalidParams("hd-good requires d >= 2"));
    }
    let types: Vec<VacancyType> = VacancyType::hypercube(d).into_iter().filter(|h| h.bit(d - 1) == 0).collect();
    let q = vec![0.5 / types.len() as f64; types.len()];
    Ok(ModelSpec::new(&types, &q)?)
}

/// `H_d`-good start on `H_{d−1} × {0, …, k}` (closed boundary): `ω_h = h` on
/// the bottom layer, neutral on layer 1, and a fixed mixed pattern on layers
/// `2..=k`. Returns it with a legal path ending neutral on layers `2..=k`.
pub fn build_hd_good_path(d: usize, k: usize) -> Result<(Configuration, LegalPath), ReachError> {
    if k < 2 {
        return Err(ReachError::InvalidParams("hd-good requires k >= 2"));
    }
    let spec = hd_good_spec(d)?;
    let mut sides = vec![2usize; d];
    sides[d - 1] = k + 1;
    let region = Region::new_box(&vec![0; d], &sides)?;
    let domain = Arc::new(Domain::new(spec.clone(), region, BoundaryCondition::Closed)?);
    let mut init = Configuration::neutral(domain.clone());
    let base = spec.num_states();
    for x in 0..domain.len() {
        let p = domain.region().point(x);
        let layer = p[d - 1] as usize;
        if layer == 0 {
            let mask = (0..d - 1).fold(0u8, |m, i| m | ((p[i] as u8) << i));
            let h = VacancyType::from_mask(d, mask);
            init.set(x, SiteState::Vacancy(h))?;
        } else if layer >= 2 {
            init.set_tag(x, ((x + layer) % base) as u8);
        }
    }
    let mut b = PathBuilder::new(&init);
    for layer in 2..=k {
        let below = move |p: &Point| (p[d - 1] as usize) < layer;
        for x in 0..domain.len() {
            if domain.region().point(x)[d - 1] as usize == layer {
                b.set_neutral(x, &below)?;
            }
        }
    }
    Ok((init, b.finish()))
}

/// `σ` is neutral on layers `2..=k` and agrees with `ω` on layers 0 and 1.
pub fn hd_good_endpoint_ok(init: &Configuration, end: &Configuration) -> bool {
    let d = init.spec().dim();
    (0..init.states().len()).all(|x| {
        let layer = init.region().point(x)[d - 1];
        if layer >= 2 {
            end.tag(x) == NEUTRAL
        } else {
            end.tag(x) == init.tag(x)
        }
    })
}

/// Star graph `G = {0, e_1, …, e_d}` with equal densities. Tag of `h_c` is 1
/// and tag of `h_i` is `i + 1`.
pub fn star_spec(d: usize) -> Result<ModelSpec, ReachError> {
    if d == 0 {
        return Err(ReachError::InvalidParams("d >= 1"));
    }
    let mut types = vec![VacancyType::from_mask(d, 0)];
    types.extend((0..d).map(|i| VacancyType::from_mask(d, 1 << i)));
    let q = vec![0.5 / (d + 1) as f64; d + 1];
    Ok(ModelSpec::new(&types, &q)?)
}

fn star_tags(spec: &ModelSpec) -> Option<(u8, Vec<u8>)> {
    let d = spec.dim();
    if spec.num_types() != d + 1 {
        return None;
    }
    let hc = spec.tag_of(VacancyType::from_mask(d, 0))?;
    let hi = (0..d).map(|i| spec.tag_of(VacancyType::from_mask(d, 1 << i))).collect::<Option<Vec<u8>>>()?;
    Some((hc, hi))
}

/// Good box `Λ + x`: `ω_{x+2h} = h` for `h ∈ G` and neutral on the rest of
/// the faces `F_i + x`. False if the box leaves the region or `G` is not the
/// star graph.
pub fn is_good_box(cfg: &Configuration, x: &Point) -> bool {
    let spec = cfg.spec();
    let d = spec.dim();
    let Some((hc, hi)) = star_tags(spec) else { return false };
    let region = cfg.region();
    let mut corners: Vec<(Point, u8)> = vec![(*x, hc)];
    for i in 0..d {
        corners.push((*x + Point::unit(i).scale(2), hi[i]));
    }
    for off in cube_points(d, 3) {
        let p = *x + off;
        let Some(idx) = region.index_of(&p) else { return false };
        let on_face = (0..d).any(|i| off[i] == 0);
        if let Some(&(_, t)) = corners.iter().find(|c| c.0 == p) {
            if cfg.tag(idx) != t {
                return false;
            }
        } else if on_face && cfg.tag(idx) != NEUTRAL {
            return false;
        }
    }
    true
}

/// `{0, …, side−1}^d` in index order (first coordinate fastest).
pub(crate) fn cube_points(d: usize, side: usize) -> Vec<Point> {
    let total = side.pow(d as u32);
    (0..total)
        .map(|mut r| {
            let mut p = Point::zero();
            for i in 0..d {
                p[i] = (r % side) as i64;
                r /= side;
            }
            p
        })
        .collect()
}

fn star_domain(d: usize, side: usize) -> Result<Arc<Domain>, ReachError> {
    let spec = star_spec(d)?;
    let region = Region::new_box(&vec![0; d], &vec![side; d])?;
    Ok(Arc::new(Domain::new(spec, region, BoundaryCondition::Closed)?))
}

fn junk_tag(p: &Point, d: usize, base: usize) -> u8 {
    let mut h: u64 = 0x9e37_79b9;
    for i in 0..d {
        h = h.wrapping_mul(31).wrapping_add(p[i] as u64 + 7);
    }
    h ^= h >> 7;
    (h % base as u64) as u8
}

fn plant_good_box(cfg: &mut Configuration, x: &Point) -> Result<(), ReachError> {
    let d = cfg.spec().dim();
    let (hc, hi) = star_tags(cfg.spec()).ok_or(ReachError::InvalidParams("star graph"))?;
    for off in cube_points(d, 3) {
        if (0..d).any(|i| off[i] == 0) {
            let idx = cfg.region().index_of(&(*x + off)).ok_or(ReachError::InvalidParams("box outside region"))?;
            cfg.set_tag(idx, NEUTRAL);
        }
    }
    let i0 = cfg.region().index_of(x).ok_or(ReachError::InvalidParams("box outside region"))?;
    cfg.set_tag(i0, hc);
    for i in 0..d {
        let idx = cfg.region().index_of(&(*x + Point::unit(i).scale(2))).ok_or(ReachError::InvalidParams("box"))?;
        cfg.set_tag(idx, hi[i]);
    }
    Ok(())
}

/// Start state for the move-good construction: good `Λ` at the origin,
/// `h_i` first found at `v + k_i e_i`, other sites a fixed mixed pattern.
pub fn move_good_fixture(d: usize, k: &[usize]) -> Result<Configuration, ReachError> {
    if d == 0 || k.len() != d || k.iter().any(|&ki| ki < 2) {
        return Err(ReachError::InvalidParams("need d >= 1 and k_i >= 2 for each axis"));
    }
    let kmax = *k.iter().max().unwrap_or(&2);
    let side = (kmax + 3).max(5);
    let domain = star_domain(d, side)?;
    let (_, hi) = star_tags(domain.spec()).expect("star");
    let base = domain.spec().num_states();
    let mut cfg = Configuration::neutral(domain.clone());
    for x in 0..domain.len() {
        let p = domain.region().point(x);
        cfg.set_tag(x, junk_tag(&p, d, base));
    }
    plant_good_box(&mut cfg, &Point::zero())?;
    let v = Point::ones(d);
    for i in 0..d {
        for j in 2..k[i] {
            let idx = cfg.region().index_of(&(v + Point::unit(i).scale(j as i64))).expect("line in region");
            if cfg.tag(idx) == hi[i] {
                cfg.set_tag(idx, NEUTRAL);
            }
        }
        let idx = cfg.region().index_of(&(v + Point::unit(i).scale(k[i] as i64))).expect("line in region");
        cfg.set_tag(idx, hi[i]);
    }
    Ok(cfg)
}

/// Smallest `k >= 2` with `ω_{x + v + k e_i} = h_i`, per axis.
fn nearest_hi(cfg: &Configuration, x: &Point) -> Option<Vec<usize>> {
    let d = cfg.spec().dim();
    let (_, hi) = star_tags(cfg.spec())?;
    let v = Point::ones(d);
    let mut out = Vec::with_capacity(d);
    for i in 0..d {
        let mut j = 2usize;
        loop {
            let idx = cfg.region().index_of(&(*x + v + Point::unit(i).scale(j as i64)))?;
            if cfg.tag(idx) == hi[i] {
                out.push(j);
                break;
            }
            j += 1;
        }
    }
    Some(out)
}

/// Relaxes `x + v + {0,1}^d` in order of distance to `x + v`, then
/// lexicographically.
fn relax_inner(b: &mut PathBuilder, x: &Point) -> Result<(), ReachError> {
    let d = b.domain.spec().dim();
    let v = Point::ones(d);
    let mut inner: Vec<Point> = cube_points(d, 2).into_iter().map(|o| *x + v + o).collect();
    inner.sort_by_key(|p| ((*p - *x - v).l1(), *p));
    for p in &inner {
        let idx = b.idx(p)?;
        b.set_neutral(idx, &anywhere)?;
    }
    Ok(())
}

fn subsets_of_size(items: &[usize], size: usize) -> Vec<Vec<usize>> {
    (0u32..1 << items.len())
        .filter(|m| m.count_ones() as usize == size)
        .map(|m| (0..items.len()).filter(|&k| m >> k & 1 == 1).map(|k| items[k]).collect())
        .collect()
}

/// Move-good construction for the good box at `x` (the lemma has `x = 0`).
fn move_good_at(b: &mut PathBuilder, x: &Point, k: &[usize]) -> Result<(), ReachError> {
    let domain = b.domain.clone();
    let spec = domain.spec();
    let d = spec.dim();
    let (hc, hi) = star_tags(spec).ok_or(ReachError::Hypothesis("G must be the star graph"))?;
    let v = Point::ones(d);

    relax_inner(b, x)?;

    // Clear each line v + j e_i, then bring h_i to v + 2e_i.
    for i in 0..d {
        let e = Point::unit(i);
        for j in 1..k[i] {
            let idx = b.idx(&(*x + v + e.scale(j as i64)))?;
            b.set_neutral(idx, &anywhere)?;
        }
        let idx = b.idx(&(*x + v + e.scale(2)))?;
        b.set_vacancy(idx, hi[i], &anywhere)?;
    }

    // h_c at v.
    let idx = b.idx(&(*x + v))?;
    b.set_vacancy(idx, hc, &anywhere)?;

    // Clean (F_i + v) minus corners, nearest to v first.
    let mut face: Vec<Point> = cube_points(d, 3)
        .into_iter()
        .filter(|o| (0..d).any(|i| o[i] == 0))
        .filter(|o| o.l1() != 0 && !(o.l1() == 2 && (0..d).any(|i| o[i] == 2)))
        .map(|o| *x + v + o)
        .collect();
    face.sort_by_key(|p| ((*p - *x - v).l1(), *p));
    for p in &face {
        let idx = b.idx(p)?;
        b.set_neutral(idx, &anywhere)?;
    }
    Ok(())
}

/// Legal path moving the good box `Λ` to `Λ + v`. `k` must equal the
/// per-axis distance to the nearest `h_i` along `v + j e_i`, `j >= 2`.
pub fn build_move_good_path(omega: &Configuration, k: &[usize]) -> Result<LegalPath, ReachError> {
    let d = omega.spec().dim();
    if star_tags(omega.spec()).is_none() {
        return Err(ReachError::Hypothesis("G must be the star graph"));
    }
    if k.len() != d {
        return Err(ReachError::InvalidParams("one k_i per axis"));
    }
    if !is_good_box(omega, &Point::zero()) {
        return Err(ReachError::Hypothesis("Λ is not good"));
    }
    let found = nearest_hi(omega, &Point::zero()).ok_or(ReachError::Hypothesis("no h_i on some axis line"))?;
    if found != k {
        return Err(ReachError::Hypothesis("k_i is not the distance to the nearest h_i"));
    }
    let mut b = PathBuilder::new(omega);
    move_good_at(&mut b, &Point::zero(), k)?;
    Ok(b.finish())
}

/// Move-good conclusions: `Λ + v` good, neutral on `v + j e_i` for
/// `3 <= j <= k_i − 1`, and agreement with `ω` elsewhere.
pub fn move_good_endpoint_ok(omega: &Configuration, sigma: &Configuration, k: &[usize]) -> bool {
    let d = omega.spec().dim();
    let v = Point::ones(d);
    if !is_good_box(sigma, &v) {
        return false;
    }
    let region = omega.region();
    for x in 0..region.len() {
        let p = region.point(x);
        let in_box = (0..d).all(|i| (1..=3).contains(&p[i]));
        let on_line = (0..d).any(|i| {
            let rest = (0..d).all(|j| j == i || p[j] == 1);
            rest && p[i] >= 4 && p[i] <= k[i] as i64
        });
        if on_line {
            if sigma.tag(x) != NEUTRAL {
                return false;
            }
        } else if !in_box && sigma.tag(x) != omega.tag(x) {
            return false;
        }
    }
    true
}

/// Upper bound on the move-good path length used in tests.
pub fn move_good_length_bound(d: usize, kmax: usize) -> usize {
    let sites = 4usize.pow(d as u32) + d * (kmax + 1);
    2 * sites * (sites + 2)
}

/// Start state for the move-good-2 construction: good `Λ`, neutral corridor
/// `v + n e_i` for `n < k_i`, `h_i` at `v + k_i e_i`, mixed pattern elsewhere.
pub fn move_good2_fixture(d: usize, n: usize, k: &[usize]) -> Result<Configuration, ReachError> {
    if n < 4 || n % 2 != 0 {
        return Err(ReachError::InvalidParams("N must be even and >= 4"));
    }
    if k.len() != d || k.iter().any(|&ki| ki < n || 2 * ki > 3 * n) {
        return Err(ReachError::InvalidParams("k_i must lie in [N, 3N/2]"));
    }
    let kmax = *k.iter().max().expect("d >= 1");
    let side = (kmax + 3).max(n + 3);
    let domain = star_domain(d, side)?;
    let (_, hi) = star_tags(domain.spec()).expect("star");
    let base = domain.spec().num_states();
    let mut cfg = Configuration::neutral(domain.clone());
    for x in 0..domain.len() {
        cfg.set_tag(x, junk_tag(&domain.region().point(x), d, base));
    }
    plant_good_box(&mut cfg, &Point::zero())?;
    let v = Point::ones(d);
    for i in 0..d {
        for j in 1..k[i] {
            let idx = cfg.region().index_of(&(v + Point::unit(i).scale(j as i64))).expect("corridor in region");
            cfg.set_tag(idx, NEUTRAL);
        }
        let idx = cfg.region().index_of(&(v + Point::unit(i).scale(k[i] as i64))).expect("corridor in region");
        cfg.set_tag(idx, hi[i]);
    }
    Ok(cfg)
}

fn check_move_good2(omega: &Configuration, n: usize) -> Result<(), ReachError> {
    if n < 4 || n % 2 != 0 {
        return Err(ReachError::InvalidParams("N must be even and >= 4"));
    }
    let d = omega.spec().dim();
    let (_, hi) = star_tags(omega.spec()).ok_or(ReachError::Hypothesis("G must be the star graph"))?;
    if !is_good_box(omega, &Point::zero()) {
        return Err(ReachError::Hypothesis("Λ is not good"));
    }
    let v = Point::ones(d);
    for i in 0..d {
        let at = |j: usize| omega.region().index_of(&(v + Point::unit(i).scale(j as i64))).map(|x| omega.tag(x));
        let Some(ki) = (1..).take_while(|&j| at(j).is_some()).find(|&j| at(j) == Some(hi[i])) else {
            return Err(ReachError::Hypothesis("no h_i on the corridor"));
        };
        if ki < n || 2 * ki > 3 * n {
            return Err(ReachError::Hypothesis("k_i outside [N, 3N/2]"));
        }
        if (1..ki).any(|j| at(j) != Some(NEUTRAL)) {
            return Err(ReachError::Hypothesis("corridor not neutral"));
        }
    }
    Ok(())
}

/// Legal path moving the good box `Λ` to `Λ + (N−2)v`.
pub fn build_move_good2_path(omega: &Configuration, n: usize) -> Result<LegalPath, ReachError> {
    check_move_good2(omega, n)?;
    let d = omega.spec().dim();
    let (_, hi) = star_tags(omega.spec()).expect("checked");
    let v = Point::ones(d);
    let mut b = PathBuilder::new(omega);
    for m in 0..n - 2 {
        let base = v.scale(m as i64);
        let nm = n - m;
        relax_inner(&mut b, &base)?;
        for size in 1..d {
            for i in 0..d {
                let others: Vec<usize> = (0..d).filter(|&j| j != i).collect();
                for j in 1..=nm {
                    for subset in subsets_of_size(&others, size) {
                        let mut p = base + v + Point::unit(i).scale(j as i64);
                        for &a in &subset {
                            p[a] += 1;
                        }
                        let idx = b.idx(&p)?;
                        b.set_neutral(idx, &anywhere)?;
                    }
                }
            }
        }
        for i in 0..d {
            let e = Point::unit(i);
            for j in 1..nm - 1 {
                let idx = b.idx(&(base + v.scale(2) + e.scale(j as i64)))?;
                b.set_neutral(idx, &anywhere)?;
            }
            let idx = b.idx(&(base + v.scale(2) + e.scale(nm as i64 - 1)))?;
            b.set_vacancy(idx, hi[i], &anywhere)?;
        }
        let cur = b.config();
        let k = nearest_hi(&cur, &base).ok_or(ReachError::Hypothesis("lost h_i during iteration"))?;
        move_good_at(&mut b, &base, &k)?;
    }
    Ok(b.finish())
}

/// Sites the move-good-2 construction may change permanently: the boxes
/// `Λ + m v` and, per iteration, the layers `(m+1)v + j e_i + Σ_{a∈I} e_a`
/// with `1 <= j <= N − m` and `I ⊆ [d] ∖ {i}`.
pub fn move_good2_swept(d: usize, n: usize, p: &Point) -> bool {
    let v = Point::ones(d);
    let n = n as i64;
    for m in 0..=(n - 2) {
        let q = *p - v.scale(m);
        if (0..d).all(|i| (0..=3).contains(&q[i])) {
            return true;
        }
        if m > n - 3 {
            continue;
        }
        let r = *p - v.scale(m + 1);
        for i in 0..d {
            if r[i] >= 1 && r[i] <= n - m && (0..d).all(|j| j == i || r[j] == 0 || r[j] == 1) {
                return true;
            }
        }
    }
    false
}

/// `Λ + (N−2)v` good and agreement with `ω` outside the swept set.
pub fn move_good2_endpoint_ok(omega: &Configuration, sigma: &Configuration, n: usize) -> bool {
    let d = omega.spec().dim();
    if !is_good_box(sigma, &Point::ones(d).scale(n as i64 - 2)) {
        return false;
    }
    (0..omega.states().len()).all(|x| {
        let p = omega.region().point(x);
        move_good2_swept(d, n, &p) || sigma.tag(x) == omega.tag(x)
    })
}

/// Colourful predicate on `origin + Π {0..extent_i − 1}` minus `exclude`:
/// every axis-parallel line through the set meets every `h ∈ G`. Sites
/// outside the region count as neutral.
pub fn is_colourful(cfg: &Configuration, origin: &Point, extent: &[usize], exclude: Option<&Point>) -> bool {
    let d = cfg.spec().dim();
    let k = cfg.spec().num_types();
    let region = cfg.region();
    for axis in 0..d {
        let mut other = extent.to_vec();
        other[axis] = 1;
        let starts = box_points(d, origin, &other);
        for s in starts {
            let mut seen = vec![false; k + 1];
            let mut any = false;
            for t in 0..extent[axis] {
                let mut p = s;
                p[axis] += t as i64;
                if Some(&p) == exclude {
                    continue;
                }
                any = true;
                if let Some(idx) = region.index_of(&p) {
                    seen[cfg.tag(idx) as usize] = true;
                }
            }
            if any && !seen[1..].iter().all(|&b| b) {
                return false;
            }
        }
    }
    true
}

/// Points of `origin + Π {0..extent_i − 1}`, first coordinate fastest.
pub fn box_points(d: usize, origin: &Point, extent: &[usize]) -> Vec<Point> {
    let total: usize = extent.iter().product();
    (0..total)
        .map(|mut r| {
            let mut p = *origin;
            for i in 0..d {
                p[i] += (r % extent[i]) as i64;
                r /= extent[i];
            }
            p
        })
        .collect()
}

/// Event `E^(N)` at the origin, composed of the colourful and good-box
/// predicates (sides are given as the lattice box `{0..N}`).
pub fn event_en(cfg: &Configuration, n: usize) -> bool {
    let spec = cfg.spec();
    let d = spec.dim();
    if star_tags(spec).is_none() || n < 2 || n % 2 != 0 {
        return false;
    }
    let ni = n as i64;
    let v = Point::ones(d);
    // (E.i)
    let inner_origin = -v.scale(ni - 1);
    if !is_colourful(cfg, &inner_origin, &vec![n; d], Some(&Point::zero())) {
        return false;
    }
    // (E.ii)
    for p in box_points(d, &(-v.scale(ni)), &vec![n + 1; d]) {
        if !(0..d).any(|i| p[i] == -ni) {
            continue;
        }
        let ok = (1..=ni).any(|k| is_good_box(cfg, &(p - v.scale(k) - v.scale(2))));
        if !ok {
            return false;
        }
    }
    // (E.iii)
    for i in 0..d {
        let origin = Point::unit(i).scale(-2 * ni);
        let mut ext = vec![n / 2 + 1; d];
        ext[i] = n + 1;
        if !is_colourful(cfg, &origin, &ext, None) {
            return false;
        }
    }
    true
}

/// Bounding box `(origin, extent)` of the support of `E^(N)`.
pub fn event_en_support(d: usize, n: usize) -> (Point, Vec<usize>) {
    let ni = n as i64;
    let lo = -(2 * ni + 2);
    let hi = ni / 2;
    (Point::ones(d).scale(lo), vec![(hi - lo + 1) as usize; d])
}
