//! Renormalisation geometry in two dimensions: base cells, strips, hard
//! interior crossings, grids, block classifications and Monte-Carlo event
//! estimates.
//!
//! Geometry is built once in the canonical `B` frame, where crossings step by
//! `+e₁`/`+e₂`, and mapped to the lattice by a fixed reflection per vacancy
//! type followed by a translation.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use hashbrown::{HashMap, HashSet};

use crate::dynamics::FlipDirection;
use crate::lattice::{
    sample_config, stream_rng, BoundaryCondition, Configuration, Domain, LatticeError, ModelSpec, Point, Region,
    VacancyType, NEUTRAL,
};
use crate::reachability::{event_en, event_en_support, LegalPath, ReachError, Step};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenormError {
    #[error("side length {0} is not a positive multiple of 8")]
    SideLength(usize),
    #[error("vacancy type must lie in H_2")]
    Dimension,
    #[error("strip index {index} outside 0..={n}")]
    StripIndex { index: usize, n: usize },
    #[error("configuration does not cover site {0:?}")]
    NotCovered(Point),
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Reach(#[from] ReachError),
}

type C = (i64, i64);

const A_MASK: u8 = 0;
const B_MASK: u8 = 3;
const C_MASK: u8 = 2;

fn vt(mask: u8) -> VacancyType {
    VacancyType::from_mask(2, mask)
}

fn pt(c: C) -> Point {
    Point::new(&[c.0, c.1])
}

/// Reflection taking the canonical frame to the frame of `h`, plus origin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Frame {
    h: VacancyType,
    origin: Point,
}

impl Frame {
    fn linear(&self, c: C) -> C {
        match self.h.mask() {
            B_MASK => c,
            A_MASK => (-c.1, -c.0),
            C_MASK => (-c.0, c.1),
            _ => (c.0, -c.1),
        }
    }

    fn map(&self, c: C) -> Point {
        self.origin + pt(self.linear(c))
    }

    /// The `A` frame exchanges the axes, so lattice orientation names swap.
    fn canonical(&self, o: Orientation) -> Orientation {
        if self.h.mask() == A_MASK {
            o.flip()
        } else {
            o
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Orientation {
    Vertical,
    Horizontal,
}

impl Orientation {
    pub fn flip(self) -> Orientation {
        match self {
            Orientation::Vertical => Orientation::Horizontal,
            Orientation::Horizontal => Orientation::Vertical,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Orientation::Vertical => "vertical",
            Orientation::Horizontal => "horizontal",
        }
    }
}

impl FromStr for Orientation {
    type Err = RenormError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "vertical" | "v" => Ok(Orientation::Vertical),
            "horizontal" | "h" => Ok(Orientation::Horizontal),
            _ => Err(RenormError::InvalidParams("orientation must be vertical or horizontal")),
        }
    }
}

impl fmt::Display for Orientation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Canonical base cell at the origin: the four boundary paths and the cell.
#[derive(Clone, Debug)]
struct BaseCell {
    paths: [Vec<C>; 4],
    cell: Vec<C>,
    interior: Vec<C>,
}

fn walk(start: C, moves: &[(C, i64)]) -> Vec<C> {
    let mut out = vec![start];
    let mut cur = start;
    for &(dir, k) in moves {
        for _ in 0..k {
            cur = (cur.0 + dir.0, cur.1 + dir.1);
            out.push(cur);
        }
    }
    out
}

impl BaseCell {
    fn new(ell: i64) -> BaseCell {
        const E: C = (1, 0);
        const N: C = (0, 1);
        let start = (1, 3);
        let mut m1 = vec![(E, 1), (N, 2)];
        for _ in 0..(ell / 2 - 1) {
            m1.push((E, 2));
            m1.push((N, 2));
        }
        m1.push((E, 1));
        let mut m2 = vec![(N, 4), (E, 1)];
        for _ in 0..(ell / 8 - 1) {
            m2.push((N, 8));
            m2.push((E, 1));
        }
        m2.push((N, 4));
        let d1 = walk(start, &m1);
        let d2 = walk(start, &m2);
        let d3: Vec<C> = d1.iter().map(|&(x, y)| (x + ell / 8, y + ell)).collect();
        let d4: Vec<C> = d2.iter().map(|&(x, y)| (x + ell, y + ell)).collect();

        let boundary: HashSet<C> = d1.iter().chain(&d2).chain(&d3).chain(&d4).copied().collect();
        let (mut x0, mut x1, mut y0, mut y1) = (i64::MAX, i64::MIN, i64::MAX, i64::MIN);
        for &(x, y) in &boundary {
            x0 = x0.min(x - 1);
            x1 = x1.max(x + 1);
            y0 = y0.min(y - 1);
            y1 = y1.max(y + 1);
        }
        let mut outside: HashSet<C> = HashSet::new();
        let mut queue = VecDeque::from([(x0, y0)]);
        outside.insert((x0, y0));
        while let Some((x, y)) = queue.pop_front() {
            for nb in [(x + 1, y), (x - 1, y), (x, y + 1), (x, y - 1)] {
                if nb.0 < x0 || nb.0 > x1 || nb.1 < y0 || nb.1 > y1 {
                    continue;
                }
                if !boundary.contains(&nb) && outside.insert(nb) {
                    queue.push_back(nb);
                }
            }
        }
        let mut cell = Vec::new();
        let mut interior = Vec::new();
        for y in y0..=y1 {
            for x in x0..=x1 {
                if !outside.contains(&(x, y)) {
                    cell.push((x, y));
                    if !boundary.contains(&(x, y)) {
                        interior.push((x, y));
                    }
                }
            }
        }
        BaseCell { paths: [d1, d2, d3, d4], cell, interior }
    }
}

/// The cells `Q_{i,j} = Q + i b₁ + j b₂`, `(i, j) ∈ [0, N]²`, of an `h`-grid.
#[derive(Clone, Debug)]
pub struct GridGeometry {
    frame: Frame,
    ell: usize,
    n: usize,
    base: Arc<BaseCell>,
}

/// A single base cell (`N = 0`).
pub fn base_cell(h: VacancyType, ell: usize, origin: Point) -> Result<GridGeometry, RenormError> {
    GridGeometry::new(h, ell, 0, origin)
}

impl GridGeometry {
    pub fn new(h: VacancyType, ell: usize, n: usize, origin: Point) -> Result<GridGeometry, RenormError> {
        if h.dim() != 2 {
            return Err(RenormError::Dimension);
        }
        if ell == 0 || ell % 8 != 0 {
            return Err(RenormError::SideLength(ell));
        }
        Ok(GridGeometry { frame: Frame { h, origin }, ell, n, base: Arc::new(BaseCell::new(ell as i64)) })
    }

    pub fn h(&self) -> VacancyType {
        self.frame.h
    }

    pub fn ell(&self) -> usize {
        self.ell
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn origin(&self) -> Point {
        self.frame.origin
    }

    /// `b₁` in lattice coordinates.
    pub fn b1(&self) -> Point {
        let l = self.ell as i64;
        pt(self.frame.linear((l, l)))
    }

    /// `b₂` in lattice coordinates.
    pub fn b2(&self) -> Point {
        let l = self.ell as i64;
        pt(self.frame.linear((l / 8, l)))
    }

    fn offset(&self, i: i64, j: i64) -> C {
        let l = self.ell as i64;
        (i * l + j * (l / 8), i * l + j * l)
    }

    fn shifted(&self, pts: &[C], i: i64, j: i64) -> Vec<Point> {
        let o = self.offset(i, j);
        pts.iter().map(|&(x, y)| self.frame.map((x + o.0, y + o.1))).collect()
    }

    /// `D^(k)` of `Q_{i,j}` in path order, `k ∈ 1..=4`.
    pub fn boundary(&self, k: usize, i: i64, j: i64) -> Vec<Point> {
        assert!((1..=4).contains(&k), "boundary index is 1..=4");
        self.shifted(&self.base.paths[k - 1], i, j)
    }

    pub fn cell(&self, i: i64, j: i64) -> Vec<Point> {
        self.shifted(&self.base.cell, i, j)
    }

    /// Cell sites on none of its four boundary paths.
    pub fn interior(&self, i: i64, j: i64) -> Vec<Point> {
        self.shifted(&self.base.interior, i, j)
    }

    /// Union of all cells, sorted.
    pub fn sites(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for i in 0..=self.n as i64 {
            for j in 0..=self.n as i64 {
                out.extend(self.cell(i, j));
            }
        }
        out.sort();
        out.dedup();
        out
    }

    /// Strip `index` in lattice orientation `orientation`.
    pub fn strip(&self, orientation: Orientation, index: usize) -> Result<Strip, RenormError> {
        if index > self.n {
            return Err(RenormError::StripIndex { index, n: self.n });
        }
        Ok(Strip::new(self, orientation, index))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Role {
    /// On the entry path of cell `k` (for `k ≥ 1` also the exit of `k − 1`).
    Entry(u32),
    Interior(u32),
    Exit,
    Side,
}

fn hop_allowed(from: Role, to: Role, last: u32) -> bool {
    match (from, to) {
        (Role::Entry(k), Role::Interior(m)) | (Role::Interior(k), Role::Interior(m)) => k == m,
        (Role::Interior(k), Role::Entry(m)) => m == k + 1,
        (Role::Interior(k), Role::Exit) => k == last,
        _ => false,
    }
}

/// One vertical or horizontal strip with vertex roles precomputed.
#[derive(Clone, Debug)]
pub struct Strip {
    frame: Frame,
    orientation: Orientation,
    canonical: Orientation,
    index: usize,
    last: u32,
    coords: Vec<C>,
    roles: Vec<Role>,
    succ: Vec<[Option<u32>; 2]>,
    /// Vertex indices by decreasing `x₁ + x₂`.
    topo: Vec<u32>,
    lookup: HashMap<C, u32>,
    /// Unit boundary segments of the two side chains (entry-side first when
    /// walked with the source on the right).
    chains: [Vec<(C, C)>; 2],
}

impl Strip {
    fn new(geo: &GridGeometry, orientation: Orientation, index: usize) -> Strip {
        let canonical = geo.frame.canonical(orientation);
        let n = geo.n as i64;
        let cell_of = |k: i64| match canonical {
            Orientation::Vertical => (index as i64, k),
            Orientation::Horizontal => (k, index as i64),
        };
        // (entry, exit, first side, second side) as indices into the paths.
        let (entry, exit, side_a, side_b) = match canonical {
            Orientation::Vertical => (0, 2, 1, 3),
            Orientation::Horizontal => (1, 3, 2, 0),
        };
        let shift = |pts: &[C], k: i64| -> Vec<C> {
            let (i, j) = cell_of(k);
            let o = geo.offset(i, j);
            pts.iter().map(|&(x, y)| (x + o.0, y + o.1)).collect()
        };
        let base = &geo.base;
        let mut roles: HashMap<C, Role> = HashMap::new();
        for k in 0..=n {
            for &s in [side_a, side_b].iter() {
                for c in shift(&base.paths[s], k) {
                    roles.insert(c, Role::Side);
                }
            }
        }
        for k in 0..=n {
            for c in shift(&base.interior, k) {
                roles.insert(c, Role::Interior(k as u32));
            }
        }
        for k in 0..=n {
            for c in shift(&base.paths[entry], k) {
                roles.insert(c, Role::Entry(k as u32));
            }
        }
        for c in shift(&base.paths[exit], n) {
            roles.insert(c, Role::Exit);
        }
        let mut coords: Vec<C> = roles.keys().copied().collect();
        coords.sort();
        let lookup: HashMap<C, u32> = coords.iter().enumerate().map(|(i, &c)| (c, i as u32)).collect();
        let roles_v: Vec<Role> = coords.iter().map(|c| roles[c]).collect();
        let succ =
            coords.iter().map(|&(x, y)| [lookup.get(&(x + 1, y)).copied(), lookup.get(&(x, y + 1)).copied()]).collect();
        let mut topo: Vec<u32> = (0..coords.len() as u32).collect();
        topo.sort_by_key(|&v| {
            let (x, y) = coords[v as usize];
            core::cmp::Reverse(x + y)
        });
        let segments = |path: usize| -> Vec<(C, C)> {
            let mut out = Vec::new();
            for k in 0..=n {
                let p = shift(&base.paths[path], k);
                out.extend(p.windows(2).map(|w| (w[0], w[1])));
            }
            out
        };
        // Source on the right: vertical strips are walked west to east,
        // horizontal strips north to south.
        let chains = match canonical {
            Orientation::Vertical => [segments(1), segments(3)],
            Orientation::Horizontal => [segments(2), segments(0)],
        };
        Strip {
            frame: geo.frame,
            orientation,
            canonical,
            index,
            last: n as u32,
            coords,
            roles: roles_v,
            succ,
            topo,
            lookup,
            chains,
        }
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn points(&self) -> Vec<Point> {
        self.coords.iter().map(|&c| self.frame.map(c)).collect()
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.points().contains(x)
    }

    /// Sites where a crossing may start.
    pub fn entry_points(&self) -> Vec<Point> {
        self.filter_points(|r| r == Role::Entry(0))
    }

    /// Sites where a crossing ends.
    pub fn exit_points(&self) -> Vec<Point> {
        self.filter_points(|r| r == Role::Exit)
    }

    /// Sites strictly inside one of the strip's cells.
    pub fn interior_points(&self) -> Vec<Point> {
        self.filter_points(|r| matches!(r, Role::Interior(_)))
    }

    fn filter_points(&self, f: impl Fn(Role) -> bool) -> Vec<Point> {
        self.coords.iter().zip(&self.roles).filter(|(_, &r)| f(r)).map(|(&c, _)| self.frame.map(c)).collect()
    }

    /// Region indices of the strip vertices, in internal order.
    fn site_indices(&self, region: &Region) -> Result<Vec<usize>, RenormError> {
        self.coords
            .iter()
            .map(|&c| {
                let p = self.frame.map(c);
                region.index_of(&p).ok_or(RenormError::NotCovered(p))
            })
            .collect()
    }

    fn traversable(&self, cfg: &Configuration) -> Result<Vec<bool>, RenormError> {
        let idx = self.site_indices(cfg.region())?;
        Ok(traversable_flags(cfg.spec(), cfg.states(), &idx, self.frame.h))
    }

    /// Precedence key for the smallest-witness rule.
    fn key(&self, v: u32) -> C {
        let (x, y) = self.coords[v as usize];
        match self.canonical {
            Orientation::Vertical => (x, y),
            Orientation::Horizontal => (y, x),
        }
    }

    /// Successor slots in preference order.
    fn preference(&self) -> [usize; 2] {
        match self.canonical {
            Orientation::Vertical => [1, 0],
            Orientation::Horizontal => [0, 1],
        }
    }

    fn search(&self, trav: &[bool]) -> Option<Vec<u32>> {
        let n = self.coords.len();
        let mut good = vec![false; n];
        for &v in &self.topo {
            let u = v as usize;
            if !trav[u] {
                continue;
            }
            good[u] = self.roles[u] == Role::Exit
                || self.succ[u]
                    .iter()
                    .flatten()
                    .any(|&w| good[w as usize] && hop_allowed(self.roles[u], self.roles[w as usize], self.last));
        }
        let start = (0..n as u32)
            .filter(|&v| self.roles[v as usize] == Role::Entry(0) && good[v as usize])
            .min_by_key(|&v| self.key(v))?;
        let mut path = vec![start];
        let mut cur = start;
        while self.roles[cur as usize] != Role::Exit {
            let u = cur as usize;
            let next = self
                .preference()
                .iter()
                .filter_map(|&s| self.succ[u][s])
                .find(|&w| good[w as usize] && hop_allowed(self.roles[u], self.roles[w as usize], self.last))
                .expect("a good vertex has a good successor");
            path.push(next);
            cur = next;
        }
        Some(path)
    }

    fn edge_open(&self, trav: &[bool], u: C, dir: usize) -> bool {
        let w = if dir == 0 { (u.0 + 1, u.1) } else { (u.0, u.1 + 1) };
        match (self.lookup.get(&u), self.lookup.get(&w)) {
            (Some(&a), Some(&b)) => {
                let (a, b) = (a as usize, b as usize);
                trav[a] && trav[b] && hop_allowed(self.roles[a], self.roles[b], self.last)
            }
            _ => false,
        }
    }

    /// Dual search over unit faces: a path from the first side chain to the
    /// second whose every forward-crossed primal edge is closed.
    fn dual_blocked(&self, trav: &[bool]) -> bool {
        let inside =
            |f: C| [(0, 0), (1, 0), (0, 1), (1, 1)].iter().all(|d| self.lookup.contains_key(&(f.0 + d.0, f.1 + d.1)));
        let faces_of = |s: &(C, C)| -> [C; 2] {
            let (a, b) = (s.0.min(s.1), s.0.max(s.1));
            if a.1 == b.1 {
                [(a.0, a.1), (a.0, a.1 - 1)]
            } else {
                [(a.0, a.1), (a.0 - 1, a.1)]
            }
        };
        let mut targets: HashSet<C> = HashSet::new();
        for s in &self.chains[1] {
            for f in faces_of(s) {
                if inside(f) {
                    targets.insert(f);
                }
            }
        }
        let mut seen: HashSet<C> = HashSet::new();
        let mut queue = VecDeque::new();
        for s in &self.chains[0] {
            for f in faces_of(s) {
                if inside(f) && seen.insert(f) {
                    queue.push_back(f);
                }
            }
        }
        while let Some(f) = queue.pop_front() {
            if targets.contains(&f) {
                return true;
            }
            let (a, b) = f;
            // (next face, primal edge crossed as (tail, axis), forward crossing)
            let moves = [
                ((a + 1, b), ((a + 1, b), 1), true),
                ((a - 1, b), ((a, b), 1), false),
                ((a, b + 1), ((a, b + 1), 0), false),
                ((a, b - 1), ((a, b), 0), true),
            ];
            for (g, (tail, axis), forward) in moves {
                if !inside(g) || seen.contains(&g) {
                    continue;
                }
                if forward && self.edge_open(trav, tail, axis) {
                    continue;
                }
                seen.insert(g);
                queue.push_back(g);
            }
        }
        false
    }
}

fn traversable_flags(spec: &ModelSpec, states: &[u8], idx: &[usize], h: VacancyType) -> Vec<bool> {
    let ht = spec.tag_of(h);
    idx.iter()
        .map(|&i| {
            let t = states[i];
            t == NEUTRAL || Some(t) == ht
        })
        .collect()
}

/// Outcome of a hard interior crossing search.
#[derive(Clone, Debug, PartialEq)]
pub struct CrossingResult {
    pub exists: bool,
    /// Smallest crossing, from the entry path to the exit path.
    pub witness: Option<Vec<Point>>,
    pub orientation: Orientation,
}

/// Decides whether `strip` has an `h`-traversable hard interior crossing.
///
/// Among all crossings the witness is the one that, vertex by vertex, keeps
/// closest to the entry side of the strip: leftmost for vertical and lowest
/// for horizontal strips in the canonical frame.
pub fn find_hard_crossing(cfg: &Configuration, strip: &Strip) -> Result<CrossingResult, RenormError> {
    let trav = strip.traversable(cfg)?;
    let witness = strip.search(&trav).map(|p| p.iter().map(|&v| strip.frame.map(strip.coords[v as usize])).collect());
    Ok(CrossingResult { exists: witness.is_some(), witness, orientation: strip.orientation })
}

/// Whether a closed dual path separates the entry path from the exit path.
///
/// Independent of [`find_hard_crossing`]; exactly one of the two succeeds.
pub fn closed_dual_path(cfg: &Configuration, strip: &Strip) -> Result<bool, RenormError> {
    let trav = strip.traversable(cfg)?;
    Ok(strip.dual_blocked(&trav))
}

/// Binomial estimate with a Wilson score interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McEstimate {
    pub failures: u64,
    pub samples: u64,
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let centre = (p + z2 / (2.0 * nf)) / denom;
    let half = z * libm::sqrt(p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)) / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

impl McEstimate {
    pub fn from_counts(failures: u64, samples: u64) -> McEstimate {
        let (ci_lo, ci_hi) = wilson_interval(failures, samples, Z95);
        let estimate = if samples == 0 { 0.0 } else { failures as f64 / samples as f64 };
        McEstimate { failures, samples, estimate, ci_lo, ci_hi }
    }
}

fn mc_count(samples: u64, mut fails: impl FnMut(u64) -> Result<bool, RenormError>) -> Result<McEstimate, RenormError> {
    let mut failures = 0;
    for s in 0..samples {
        if fails(s)? {
            failures += 1;
        }
    }
    Ok(McEstimate::from_counts(failures, samples))
}

fn sampling_domain(spec: &ModelSpec, region: Region) -> Result<Arc<Domain>, RenormError> {
    Ok(Arc::new(Domain::new(spec.clone(), region, BoundaryCondition::Closed)?))
}

/// Probability that strip 0 of an `(h, ℓ, N)` grid has no `h`-traversable
/// hard interior crossing, estimated from `samples` draws of `μ`.
///
/// Sample `s` uses stream `s` of `seed`.
pub fn crossing_failure_mc(
    spec: &ModelSpec,
    h: VacancyType,
    ell: usize,
    n: usize,
    orientation: Orientation,
    samples: u64,
    seed: u64,
) -> Result<McEstimate, RenormError> {
    if samples == 0 {
        return Err(RenormError::InvalidParams("samples >= 1"));
    }
    if spec.dim() != 2 {
        return Err(RenormError::Dimension);
    }
    let geo = GridGeometry::new(h, ell, n, Point::zero())?;
    let strip = geo.strip(orientation, 0)?;
    let domain = sampling_domain(spec, Region::from_sites(2, &strip.points())?)?;
    let idx = strip.site_indices(domain.region())?;
    mc_count(samples, |s| {
        let cfg = sample_config(&domain, &mut stream_rng(seed, s));
        let trav = traversable_flags(spec, cfg.states(), &idx, h);
        Ok(strip.search(&trav).is_none())
    })
}

/// Smallest crossings of every strip and their intersection points.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    /// Smallest crossing of vertical strip `i` (lattice orientation).
    pub vertical: Vec<Vec<Point>>,
    pub horizontal: Vec<Vec<Point>>,
    /// `intersections[i][j] = x_{i,j}`.
    pub intersections: Vec<Vec<Point>>,
}

/// Grid with its lexicographically largest super intersection point.
#[derive(Clone, Debug, PartialEq)]
pub struct GoodGrid {
    pub grid: Grid,
    /// Largest `(i, j)` such that `x_{(i,j)+e}` holds `h` for an
    /// `e ∈ {(1,0), (0,1)}`.
    pub super_point: Option<(usize, usize)>,
}

/// Assembles the smallest crossings into a grid; `None` if a strip has none.
pub fn find_good_grid(cfg: &Configuration, geo: &GridGeometry) -> Result<Option<GoodGrid>, RenormError> {
    let n = geo.n;
    let mut lines: [Vec<Vec<C>>; 2] = [Vec::new(), Vec::new()];
    for (slot, o) in [Orientation::Vertical, Orientation::Horizontal].into_iter().enumerate() {
        for i in 0..=n {
            let strip = geo.strip(o, i)?;
            let trav = strip.traversable(cfg)?;
            match strip.search(&trav) {
                Some(p) => lines[slot].push(p.iter().map(|&v| strip.coords[v as usize]).collect()),
                None => return Ok(None),
            }
        }
    }
    // Canonical vertical crossings index the first grid coordinate.
    let (cv, ch) = if geo.frame.canonical(Orientation::Vertical) == Orientation::Vertical {
        (&lines[0], &lines[1])
    } else {
        (&lines[1], &lines[0])
    };
    let mut inter = vec![vec![(0i64, 0i64); n + 1]; n + 1];
    for i in 0..=n {
        let set: HashSet<C> = cv[i].iter().copied().collect();
        for j in 0..=n {
            inter[i][j] = ch[j]
                .iter()
                .filter(|c| set.contains(*c))
                .copied()
                .max_by_key(|&(x, y)| (x + y, x))
                .ok_or(RenormError::InvalidParams("crossings do not intersect"))?;
        }
    }
    let ht = cfg.spec().tag_of(geo.frame.h);
    let holds_h = |c: C| -> bool {
        let p = geo.frame.map(c);
        ht.is_some() && cfg.region().index_of(&p).map(|k| cfg.tag(k)) == ht
    };
    let mut super_point = None;
    for i in 0..=n {
        for j in 0..=n {
            let up = (i < n && holds_h(inter[i + 1][j])) || (j < n && holds_h(inter[i][j + 1]));
            if up {
                super_point = Some((i, j));
            }
        }
    }
    let to_pts = |v: &Vec<Vec<C>>| -> Vec<Vec<Point>> {
        v.iter().map(|p| p.iter().map(|&c| geo.frame.map(c)).collect()).collect()
    };
    let grid = Grid {
        vertical: to_pts(&lines[0]),
        horizontal: to_pts(&lines[1]),
        intersections: inter.iter().map(|row| row.iter().map(|&c| geo.frame.map(c)).collect()).collect(),
    };
    Ok(Some(GoodGrid { grid, super_point }))
}

/// Classification of an enlarged box `EW_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BoxClass3ii {
    BEvil,
    BTraversable,
    BSuper,
}

impl BoxClass3ii {
    pub fn is_traversable(self) -> bool {
        self != BoxClass3ii::BEvil
    }

    pub fn is_super(self) -> bool {
        self == BoxClass3ii::BSuper
    }
}

/// Sites of `EW_j` for box size `L`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnlargedBox {
    /// `W_j`: outline of `(L+1)j + {0, …, L−1}²`.
    pub outline: Vec<Point>,
    /// `EW_j ∖ W_j`: top row and right column of `(L+1)j + {0, …, L}²`.
    pub rim: Vec<Point>,
    /// `(L+1)j + {e_i, …, (L−1)e_i}` for `i = 1, 2`.
    pub segments: [Vec<Point>; 2],
    /// Top-right corner `x_j`.
    pub corner: Point,
}

pub fn enlarged_box(j: (i64, i64), big_l: usize) -> EnlargedBox {
    let l = big_l as i64;
    let o = ((l + 1) * j.0, (l + 1) * j.1);
    let mut outline = Vec::new();
    for y in 0..l {
        for x in 0..l {
            if x == 0 || y == 0 || x == l - 1 || y == l - 1 {
                outline.push(pt((o.0 + x, o.1 + y)));
            }
        }
    }
    let mut rim = Vec::new();
    for y in 0..=l {
        for x in 0..=l {
            if x == l || y == l {
                rim.push(pt((o.0 + x, o.1 + y)));
            }
        }
    }
    let segments = [(1..l).map(|k| pt((o.0 + k, o.1))).collect(), (1..l).map(|k| pt((o.0, o.1 + k))).collect()];
    EnlargedBox { outline, rim, segments, corner: pt((o.0 + l, o.1 + l)) }
}

fn tag_at(cfg: &Configuration, p: &Point) -> Result<u8, RenormError> {
    cfg.region().index_of(p).map(|k| cfg.tag(k)).ok_or(RenormError::NotCovered(*p))
}

fn tags_of(spec: &ModelSpec) -> [Option<u8>; 3] {
    [spec.tag_of(vt(A_MASK)), spec.tag_of(vt(B_MASK)), spec.tag_of(vt(C_MASK))]
}

/// Classifies `EW_j` with box size `L ≥ 2`.
pub fn classify_box_3ii(cfg: &Configuration, j: (i64, i64), big_l: usize) -> Result<BoxClass3ii, RenormError> {
    if cfg.spec().dim() != 2 {
        return Err(RenormError::Dimension);
    }
    if big_l < 2 {
        return Err(RenormError::InvalidParams("L >= 2"));
    }
    let [a, b, _] = tags_of(cfg.spec());
    let is = |t: u8, want: Option<u8>| Some(t) == want;
    let eb = enlarged_box(j, big_l);
    let mut trav = true;
    for p in &eb.outline {
        let t = tag_at(cfg, p)?;
        trav &= t == NEUTRAL || is(t, a);
    }
    for p in &eb.rim {
        let t = tag_at(cfg, p)?;
        trav &= t == NEUTRAL || is(t, a) || is(t, b);
    }
    for seg in &eb.segments {
        let mut found = false;
        for p in seg {
            found |= is(tag_at(cfg, p)?, a);
        }
        trav &= found;
    }
    Ok(if !trav {
        BoxClass3ii::BEvil
    } else if is(tag_at(cfg, &eb.corner)?, b) {
        BoxClass3ii::BSuper
    } else {
        BoxClass3ii::BTraversable
    })
}

/// Flags of the three-site column `W_j = (j₁, 3j₂) + {0, e₂, 2e₂}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct BlockClass3iii {
    pub b_traversable: bool,
    pub b_super: bool,
    pub ac_traversable: bool,
    pub ac_super: bool,
}

pub fn block_sites(j: (i64, i64)) -> [Point; 3] {
    let o = (j.0, 3 * j.1);
    [pt(o), pt((o.0, o.1 + 1)), pt((o.0, o.1 + 2))]
}

pub fn classify_block_3iii(cfg: &Configuration, j: (i64, i64)) -> Result<BlockClass3iii, RenormError> {
    let [a, b, c] = tags_of(cfg.spec());
    let s = block_sites(j);
    let t = [tag_at(cfg, &s[0])?, tag_at(cfg, &s[1])?, tag_at(cfg, &s[2])?];
    Ok(classify_tags(t, a, b, c))
}

fn classify_tags(t: [u8; 3], a: Option<u8>, b: Option<u8>, c: Option<u8>) -> BlockClass3iii {
    let is = |x: u8, want: Option<u8>| Some(x) == want;
    let b_traversable = !is(t[0], b) && !is(t[2], b);
    let ac_traversable = b_traversable && !is(t[1], b);
    BlockClass3iii {
        b_traversable,
        b_super: b_traversable && is(t[1], b),
        ac_traversable,
        ac_super: ac_traversable && is(t[0], a) && is(t[2], c),
    }
}

/// Block-lattice parameters: strip side `ℓ`, `N` strips per direction and
/// vertical crossing width `K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockGridParams {
    pub ell: usize,
    pub n: usize,
    pub width: usize,
}

impl BlockGridParams {
    fn check(&self) -> Result<(), RenormError> {
        if self.n == 0 || self.ell == 0 {
            return Err(RenormError::InvalidParams("ell, n >= 1"));
        }
        if self.width < 3 || self.width > self.ell {
            return Err(RenormError::InvalidParams("3 <= width <= ell"));
        }
        Ok(())
    }

    /// Block indices covered by the grid: `[0, Nℓ−1] × [1, Nℓ]`.
    pub fn block_range(&self) -> ((i64, i64), (i64, i64)) {
        let side = (self.n * self.ell) as i64;
        ((0, side - 1), (1, side))
    }
}

/// Block classifications over a rectangle of block indices.
struct BlockTable {
    x0: i64,
    y0: i64,
    w: usize,
    cls: Vec<BlockClass3iii>,
}

impl BlockTable {
    fn new(cfg: &Configuration, xr: (i64, i64), yr: (i64, i64)) -> Result<BlockTable, RenormError> {
        let w = (xr.1 - xr.0 + 1) as usize;
        let mut cls = Vec::with_capacity(w * (yr.1 - yr.0 + 1) as usize);
        for y in yr.0..=yr.1 {
            for x in xr.0..=xr.1 {
                cls.push(classify_block_3iii(cfg, (x, y))?);
            }
        }
        Ok(BlockTable { x0: xr.0, y0: yr.0, w, cls })
    }

    fn at(&self, x: i64, y: i64) -> BlockClass3iii {
        self.cls[(y - self.y0) as usize * self.w + (x - self.x0) as usize]
    }
}

/// Grid of B-traversable rows and vertical crossings on the block lattice.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockGrid {
    /// Block row of the line in horizontal strip `j`.
    pub rows: Vec<i64>,
    /// Left block column of the crossing in vertical strip `i`.
    pub columns: Vec<i64>,
    /// Lexicographically largest `(i, j)` whose intersection block is B-super.
    pub super_point: Option<(usize, usize)>,
}

fn valid_rows(t: &BlockTable, p: &BlockGridParams, j: usize) -> Vec<i64> {
    let ((x0, x1), _) = p.block_range();
    let lo = (j * p.ell) as i64 + 1;
    (lo..lo + p.ell as i64).filter(|&y| (x0..=x1).all(|x| t.at(x, y).b_traversable)).collect()
}

fn valid_columns(t: &BlockTable, p: &BlockGridParams, i: usize) -> Vec<i64> {
    let (_, (y0, y1)) = p.block_range();
    let k = p.width as i64;
    let lo = (i * p.ell) as i64;
    (lo..=lo + p.ell as i64 - k)
        .filter(|&x0| {
            let xr = x0 + k - 1;
            (y0..=y1).all(|y| {
                t.at(xr, y).b_traversable
                    && (x0..xr).all(|x| t.at(x, y).ac_traversable)
                    && (x0..xr - 1).any(|x| t.at(x, y).ac_super)
            })
        })
        .collect()
}

fn block_table(cfg: &Configuration, p: &BlockGridParams) -> Result<BlockTable, RenormError> {
    let (xr, yr) = p.block_range();
    BlockTable::new(cfg, xr, yr)
}

/// Lowest rows and leftmost crossings forming a good grid, if any.
pub fn find_good_block_grid(cfg: &Configuration, p: &BlockGridParams) -> Result<Option<BlockGrid>, RenormError> {
    p.check()?;
    let t = block_table(cfg, p)?;
    let mut rows = Vec::with_capacity(p.n);
    let mut columns = Vec::with_capacity(p.n);
    for s in 0..p.n {
        match (valid_rows(&t, p, s).first(), valid_columns(&t, p, s).first()) {
            (Some(&y), Some(&x)) => {
                rows.push(y);
                columns.push(x);
            }
            _ => return Ok(None),
        }
    }
    let k = p.width as i64;
    let mut super_point = None;
    for i in 0..p.n {
        for j in 0..p.n {
            if t.at(columns[i] + k - 1, rows[j]).b_super {
                super_point = Some((i, j));
            }
        }
    }
    Ok(Some(BlockGrid { rows, columns, super_point }))
}

/// Good grid exists and some intersection block with `i, j > N/2` is
/// B-super, over all choices of rows and crossings.
pub fn event_e1_3iii(cfg: &Configuration, p: &BlockGridParams) -> Result<bool, RenormError> {
    p.check()?;
    let t = block_table(cfg, p)?;
    let rows: Vec<Vec<i64>> = (0..p.n).map(|j| valid_rows(&t, p, j)).collect();
    let cols: Vec<Vec<i64>> = (0..p.n).map(|i| valid_columns(&t, p, i)).collect();
    if rows.iter().chain(&cols).any(|v| v.is_empty()) {
        return Ok(false);
    }
    let k = p.width as i64;
    for i in (0..p.n).filter(|&i| 2 * i > p.n) {
        for j in (0..p.n).filter(|&j| 2 * j > p.n) {
            if cols[i].iter().any(|&x| rows[j].iter().any(|&y| t.at(x + k - 1, y).b_super)) {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Blocks `−K e₁, …, −e₁` and one row up are AC-traversable with an
/// AC-super block in each row; blocks `e₂, …, (ℓ−1)e₂` are B-traversable.
pub fn event_e2_3iii(cfg: &Configuration, ell: usize, width: usize) -> Result<bool, RenormError> {
    let k = width as i64;
    let mut ok = true;
    for y in 0..2 {
        let mut sup = false;
        for x in -k..0 {
            let c = classify_block_3iii(cfg, (x, y))?;
            ok &= c.ac_traversable;
            sup |= c.ac_super;
        }
        ok &= sup;
    }
    for y in 1..ell as i64 {
        ok &= classify_block_3iii(cfg, (0, y))?.b_traversable;
    }
    Ok(ok)
}

/// The paths used by the origin event of the `q_A`-dominant case.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaPaths {
    pub b: Vec<Point>,
    pub b_left: Vec<Point>,
    pub b_right: Vec<Point>,
    pub c: Vec<Point>,
    pub c_left: Vec<Point>,
}

/// Paths for box sizes `L` (B boxes, `j_B = (1,3)`) and `L_C` (C boxes,
/// `j_C = (−3,1)`).
pub fn gamma_paths(big_l: usize, big_l_c: usize) -> GammaPaths {
    let l = big_l as i64;
    let lc = big_l_c as i64;
    let top = 4 * l + 3;
    let mut b: Vec<C> = (1..=top).map(|y| (0, y)).collect();
    b.extend((1..=l).map(|x| (x, top)));
    let bset: HashSet<C> = b.iter().copied().collect();
    let mut b_left: Vec<C> = (-lc..=-1).map(|x| (x, 1)).collect();
    for q in b.iter().map(|&(x, y)| (x - 1, y)) {
        if !bset.contains(&q) && !b_left.contains(&q) {
            b_left.push(q);
        }
    }
    let mut b_right: Vec<C> = (l..=top - 1).map(|y| (1, y)).collect();
    b_right.extend((2..=l).map(|x| (x, top - 1)));
    let turn = -2 * lc - 2;
    let mut c: Vec<C> = (turn..=-1).rev().map(|x| (x, 0)).collect();
    c.extend((1..=lc + 1).map(|y| (turn, y)));
    let mut c_left: Vec<C> = c.iter().map(|&(x, y)| (x - 1, y - 1)).collect();
    for q in (1..=lc).map(|k| (turn - k, 0)) {
        if !c_left.contains(&q) {
            c_left.push(q);
        }
    }
    let conv = |v: Vec<C>| v.into_iter().map(pt).collect();
    GammaPaths { b: conv(b), b_left: conv(b_left), b_right: conv(b_right), c: conv(c), c_left: conv(c_left) }
}

impl GammaPaths {
    pub fn sites(&self) -> Vec<Point> {
        let mut v: Vec<Point> = self
            .b
            .iter()
            .chain(&self.b_left)
            .chain(&self.b_right)
            .chain(&self.c)
            .chain(&self.c_left)
            .copied()
            .collect();
        v.sort();
        v.dedup();
        v
    }
}

fn minus(a: &[Point], b: &[Point], shift: Point) -> Vec<Point> {
    let shifted: Vec<Point> = b.iter().map(|&p| p - shift).collect();
    a.iter().filter(|p| !shifted.contains(p)).copied().collect()
}

/// Origin event for the case `q_max = q_A`.
pub fn event_e0_3ii(cfg: &Configuration, big_l: usize, big_l_c: usize) -> Result<bool, RenormError> {
    if big_l < 1 || big_l_c < 2 {
        return Err(RenormError::InvalidParams("L >= 1 and L_C >= 2"));
    }
    let [a, b, c] = tags_of(cfg.spec());
    let g = gamma_paths(big_l, big_l_c);
    let e1 = Point::unit(0);
    let e2 = Point::unit(1);
    let all_in = |set: &[Point], allowed: &[Option<u8>]| -> Result<bool, RenormError> {
        for p in set {
            let t = tag_at(cfg, p)?;
            if t != NEUTRAL && !allowed.contains(&Some(t)) {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let some_a = |set: Vec<Point>| -> Result<bool, RenormError> {
        for p in &set {
            if Some(tag_at(cfg, p)?) == a {
                return Ok(true);
            }
        }
        Ok(false)
    };
    Ok(all_in(&g.b, &[a, b])?
        && all_in(&g.b_left, &[a])?
        && all_in(&g.b_right, &[a])?
        && some_a(minus(&g.b_left, &g.b, e1))?
        && some_a(minus(&g.b_right, &g.b, e2))?
        && all_in(&g.c, &[a, c])?
        && all_in(&g.c_left, &[a])?
        && some_a(minus(&g.c_left, &g.c, e1 + e2))?)
}

/// `E^(B,1)` on the smallest grid.
pub fn event_eb1(cfg: &Configuration, geo: &GridGeometry) -> Result<bool, RenormError> {
    let n = geo.n;
    Ok(find_good_grid(cfg, geo)?
        .map(|g| {
            let mut any = false;
            let inter = &g.grid.intersections;
            let ht = cfg.spec().tag_of(geo.h());
            let holds = |p: &Point| ht.is_some() && cfg.region().index_of(p).map(|k| cfg.tag(k)) == ht;
            for i in 0..=n {
                for j in 0..=n {
                    if 2 * i <= n || 2 * j <= n {
                        continue;
                    }
                    any |= (i < n && holds(&inter[i + 1][j])) || (j < n && holds(&inter[i][j + 1]));
                }
            }
            any
        })
        .unwrap_or(false))
}

/// `E^(B,2)`: `D^(1)` of `Q_{0,0}` is traversable.
pub fn event_eb2(cfg: &Configuration, geo: &GridGeometry) -> Result<bool, RenormError> {
    let ht = cfg.spec().tag_of(geo.h());
    for p in geo.boundary(1, 0, 0) {
        let t = tag_at(cfg, &p)?;
        if t != NEUTRAL && Some(t) != ht {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Named events for Monte-Carlo estimation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Event {
    EB1,
    EB2,
    E0_3ii,
    E1_3iii,
    E2_3iii,
    ENBii,
}

impl Event {
    pub const ALL: [Event; 6] = [Event::EB1, Event::EB2, Event::E0_3ii, Event::E1_3iii, Event::E2_3iii, Event::ENBii];

    pub fn name(self) -> &'static str {
        match self {
            Event::EB1 => "E_B1",
            Event::EB2 => "E_B2",
            Event::E0_3ii => "E0_3ii",
            Event::E1_3iii => "E1_3iii",
            Event::E2_3iii => "E2_3iii",
            Event::ENBii => "E_N_Bii",
        }
    }
}

impl FromStr for Event {
    type Err = RenormError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Event::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| RenormError::UnknownEvent(s.into()))
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Optional overrides of the scale parameters.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EventParams {
    pub ell: Option<usize>,
    pub n: Option<usize>,
    /// Box size `L` of the B boxes.
    pub big_l: Option<usize>,
    /// Box size `L_C` of the C boxes.
    pub big_l_c: Option<usize>,
    /// Vertical crossing width `K`.
    pub width: Option<usize>,
}

/// Parameters after defaults; `out_of_regime` is set when an override is
/// below its default.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ResolvedParams {
    pub ell: usize,
    pub n: usize,
    pub big_l: usize,
    pub big_l_c: usize,
    pub width: usize,
    pub out_of_regime: bool,
}

/// Default grid scales for `θ`: `ℓ = ⌈θ^{3/2}⌉` and `N = 2^{⌈θ/2 + log₂θ⌉}`.
pub fn default_scales(theta: f64) -> Result<(usize, usize), RenormError> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(RenormError::InvalidParams("theta must be positive"));
    }
    let ell = libm::ceil(libm::pow(theta, 1.5));
    let e = libm::ceil(theta / 2.0 + libm::log2(theta));
    if ell > 1e15 || e > 62.0 {
        return Err(RenormError::InvalidParams("default scales overflow"));
    }
    Ok((ell.max(1.0) as usize, 1usize << (e.max(0.0) as u32)))
}

fn round_up8(x: usize) -> usize {
    x.div_ceil(8).max(1) * 8
}

fn theta_of(spec: &ModelSpec, mask: u8) -> Result<f64, RenormError> {
    spec.tag_of(vt(mask)).map(|t| spec.theta()[t as usize - 1]).ok_or(RenormError::InvalidParams("type not in model"))
}

fn floor_pow(theta: f64, e: f64) -> usize {
    libm::floor(libm::pow(theta, e)).min(1e15) as usize
}

/// Fills in defaults from `θ_B` and `θ_C`. Grid events round `ℓ` up to a
/// multiple of 8.
pub fn resolve_params(spec: &ModelSpec, event: Event, p: &EventParams) -> Result<ResolvedParams, RenormError> {
    let mut out_of_regime = false;
    let mut pick = |given: Option<usize>, default: usize| match given {
        Some(v) => {
            out_of_regime |= v < default;
            v
        }
        None => default,
    };
    let (ell, n, big_l, big_l_c, width) = match event {
        Event::ENBii => (0, pick(p.n, 4), 0, 0, 0),
        Event::EB1 | Event::EB2 => {
            let (ell, n) = default_scales(theta_of(spec, B_MASK)?)?;
            (round_up8(pick(p.ell, round_up8(ell))), pick(p.n, n), 0, 0, 0)
        }
        Event::E0_3ii => {
            let lb = floor_pow(theta_of(spec, B_MASK)?, 3.0);
            let lc = floor_pow(theta_of(spec, C_MASK)?, 3.0);
            (0, 0, pick(p.big_l, lb), pick(p.big_l_c, lc), 0)
        }
        Event::E1_3iii | Event::E2_3iii => {
            let tb = theta_of(spec, B_MASK)?;
            let (ell, n) = default_scales(tb)?;
            let width = pick(p.width, floor_pow(tb, 1.25).max(3));
            let ell = pick(p.ell, ell);
            let n = if event == Event::E1_3iii { pick(p.n, n) } else { 0 };
            (ell, n, 0, 0, width)
        }
    };
    Ok(ResolvedParams { ell, n, big_l, big_l_c, width, out_of_regime })
}

/// Sites each event reads.
pub fn event_support(event: Event, r: &ResolvedParams) -> Result<Region, RenormError> {
    match event {
        Event::EB1 => Ok(Region::from_sites(2, &GridGeometry::new(vt(B_MASK), r.ell, r.n, Point::zero())?.sites())?),
        Event::EB2 => Ok(Region::from_sites(2, &base_cell(vt(B_MASK), r.ell, Point::zero())?.boundary(1, 0, 0))?),
        Event::E0_3ii => Ok(Region::from_sites(2, &gamma_paths(r.big_l, r.big_l_c).sites())?),
        Event::E1_3iii | Event::E2_3iii => {
            let k = r.width as i64;
            let side = (r.n.max(1) * r.ell) as i64;
            let top = side.max(r.ell as i64);
            let sides = [(side + k) as usize, 3 * (top as usize + 1)];
            Ok(Region::new_box(&[-k, 0], &sides)?)
        }
        Event::ENBii => {
            let (o, s) = event_en_support(2, r.n);
            Ok(Region::new_box(o.coords(2), &s)?)
        }
    }
}

/// Evaluates `event` on `cfg`.
pub fn event_holds(cfg: &Configuration, event: Event, r: &ResolvedParams) -> Result<bool, RenormError> {
    if cfg.spec().dim() != 2 {
        return Err(RenormError::Dimension);
    }
    match event {
        Event::EB1 => event_eb1(cfg, &GridGeometry::new(vt(B_MASK), r.ell, r.n, Point::zero())?),
        Event::EB2 => event_eb2(cfg, &base_cell(vt(B_MASK), r.ell, Point::zero())?),
        Event::E0_3ii => event_e0_3ii(cfg, r.big_l, r.big_l_c),
        Event::E1_3iii => event_e1_3iii(cfg, &BlockGridParams { ell: r.ell, n: r.n, width: r.width }),
        Event::E2_3iii => event_e2_3iii(cfg, r.ell, r.width),
        Event::ENBii => Ok(event_en(cfg, r.n)),
    }
}

/// Failure estimate of a named event with the size of its support.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EventEstimate {
    pub event: Event,
    pub params: ResolvedParams,
    pub mc: McEstimate,
    pub support_size: usize,
    /// `support_size × estimate`.
    pub support_product: f64,
}

/// Monte-Carlo estimate of `μ(1 − 1_E)`; sample `s` uses stream `s` of
/// `seed`.
pub fn event_probability_mc(
    spec: &ModelSpec,
    event: Event,
    params: &EventParams,
    samples: u64,
    seed: u64,
) -> Result<EventEstimate, RenormError> {
    if samples == 0 {
        return Err(RenormError::InvalidParams("samples >= 1"));
    }
    if spec.dim() != 2 {
        return Err(RenormError::Dimension);
    }
    let r = resolve_params(spec, event, params)?;
    let region = event_support(event, &r)?;
    let support_size = region.len();
    let domain = sampling_domain(spec, region)?;
    let mc = mc_count(samples, |s| {
        let cfg = sample_config(&domain, &mut stream_rng(seed, s));
        Ok(!event_holds(&cfg, event, &r)?)
    })?;
    Ok(EventEstimate { event, params: r, mc, support_size, support_product: support_size as f64 * mc.estimate })
}

/// Moves a `B` from `e₁` onto the origin using the `A` at `−e₁ − e₂`,
/// starting from `ω_{−e₂} = B`, `ω_0 = A`, `ω_{e₁−e₂} = ⋆`.
///
/// Region: `{−1, 0, 1} × {−1, 0}` with closed boundary. The six stages are
/// seeding `e₁ − e₂`, turning `−e₂` into `A`, clearing `e₁ − e₂`, clearing
/// the origin, placing `B` there and restoring `−e₂`; eight single-site steps
/// in total.
pub fn corner_transfer_path(spec: &ModelSpec) -> Result<LegalPath, RenormError> {
    if spec.dim() != 2 {
        return Err(RenormError::Dimension);
    }
    let [a, b, _] = tags_of(spec);
    let (a, b) = match (a, b) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(RenormError::InvalidParams("model must contain A and B")),
    };
    let region = Region::new_box(&[-1, -1], &[3, 2])?;
    let domain = Arc::new(Domain::new(spec.clone(), region, BoundaryCondition::Closed)?);
    let idx = |x: i64, y: i64| domain.region().index_of(&pt((x, y))).expect("fixture site");
    let mut states = vec![NEUTRAL; domain.len()];
    states[idx(-1, -1)] = a;
    states[idx(0, -1)] = b;
    states[idx(0, 0)] = a;
    states[idx(1, 0)] = b;
    let start = Configuration::new(domain.clone(), states)?;
    let (va, vb) = (vt(A_MASK), vt(B_MASK));
    let step = |x: i64, y: i64, h: VacancyType, direction: FlipDirection| Step { site: idx(x, y), h, direction };
    let steps = vec![
        step(1, -1, vb, FlipDirection::Create),
        step(0, -1, vb, FlipDirection::Remove),
        step(0, -1, va, FlipDirection::Create),
        step(1, -1, vb, FlipDirection::Remove),
        step(0, 0, va, FlipDirection::Remove),
        step(0, 0, vb, FlipDirection::Create),
        step(0, -1, va, FlipDirection::Remove),
        step(0, -1, vb, FlipDirection::Create),
    ];
    Ok(LegalPath::from_steps(&start, steps)?)
}
