//! Vacancy types, propagation directions, constraints, parameters, regions
//! and configuration storage.
//!
//! Sites hold one byte: `0` is the neutral state and `k >= 1` is the `k`-th
//! vacancy type of the governing [`ModelSpec`] in canonical order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;
use core::ops::{Add, Index, IndexMut, Neg, Sub};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest supported lattice dimension (`|H_d| <= 128` fits the byte tag).
pub const MAX_DIM: usize = 7;

/// Byte tag of the neutral state.
pub const NEUTRAL: u8 = 0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LatticeError {
    #[error("dimension {0} outside 1..={MAX_DIM}")]
    InvalidDimension(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("NonPositiveDensity: q for type {index} is {value}")]
    NonPositiveDensity { index: usize, value: f64 },
    #[error("DensitySumNotBelowOne: sum of densities is {sum}")]
    DensitySumNotBelowOne { sum: f64 },
    #[error("TypeOutsideHypercube: type {index} is not a 0/1 vector of length d")]
    TypeOutsideHypercube { index: usize },
    #[error("DuplicateType: type {index} repeats an earlier type")]
    DuplicateType { index: usize },
    #[error("EmptyTypeSet: at least one vacancy type is required")]
    EmptyTypeSet,
    #[error("{types} types but {densities} densities")]
    LengthMismatch { types: usize, densities: usize },
    #[error("site outside region")]
    SiteOutsideRegion,
    #[error("vacancy type not in G")]
    TypeNotInModel,
    #[error("empty region")]
    EmptyRegion,
    #[error("frozen frame: {0}")]
    BadFrame(&'static str),
    #[error("state vector has length {got}, region has {expected} sites")]
    StateLength { expected: usize, got: usize },
    #[error("state tag {0} out of range")]
    BadTag(u8),
}

/// Lattice point; coordinates beyond the model dimension are zero.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Point(pub [i64; MAX_DIM]);

impl Point {
    pub fn new(coords: &[i64]) -> Self {
        let mut c = [0; MAX_DIM];
        c[..coords.len()].copy_from_slice(coords);
        Point(c)
    }

    pub fn zero() -> Self {
        Point([0; MAX_DIM])
    }

    /// The unit vector `e_i` (0-based axis).
    pub fn unit(axis: usize) -> Self {
        let mut c = [0; MAX_DIM];
        c[axis] = 1;
        Point(c)
    }

    /// `(1, …, 1, 0, …)` with `d` ones.
    pub fn ones(d: usize) -> Self {
        let mut c = [0; MAX_DIM];
        for x in c.iter_mut().take(d) {
            *x = 1;
        }
        Point(c)
    }

    pub fn scale(self, k: i64) -> Self {
        let mut c = self.0;
        for x in c.iter_mut() {
            *x *= k;
        }
        Point(c)
    }

    pub fn dot(&self, other: &Point) -> i64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn l1(&self) -> i64 {
        self.0.iter().map(|a| a.abs()).sum()
    }

    pub fn coords(&self, d: usize) -> &[i64] {
        &self.0[..d]
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let last = self.0.iter().rposition(|&c| c != 0).map_or(1, |i| i + 1).max(1);
        f.debug_tuple("Point").field(&&self.0[..last]).finish()
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, o: Point) -> Point {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(o.0.iter()) {
            *a += b;
        }
        Point(c)
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, o: Point) -> Point {
        let mut c = self.0;
        for (a, b) in c.iter_mut().zip(o.0.iter()) {
            *a -= b;
        }
        Point(c)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        self.scale(-1)
    }
}

impl Index<usize> for Point {
    type Output = i64;
    fn index(&self, i: usize) -> &i64 {
        &self.0[i]
    }
}

impl IndexMut<usize> for Point {
    fn index_mut(&mut self, i: usize) -> &mut i64 {
        &mut self.0[i]
    }
}

/// Signed unit vector `sign · e_axis`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct Dir {
    pub axis: u8,
    pub positive: bool,
}

impl Dir {
    pub fn vector(self) -> Point {
        let mut p = Point::unit(self.axis as usize);
        if !self.positive {
            p = -p;
        }
        p
    }
}

/// Corner `h ∈ H_d = {0,1}^d`; bit `i` of `mask` is `h_{i+1}`.
///
/// Canonical order is by `mask`, i.e. by `Σ h_i 2^{i-1}`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct VacancyType {
    d: u8,
    mask: u8,
}

impl VacancyType {
    pub fn from_bits(bits: &[u8]) -> Result<Self, LatticeError> {
        let d = bits.len();
        if d == 0 || d > MAX_DIM {
            return Err(LatticeError::InvalidDimension(d));
        }
        let mut mask = 0u8;
        for (i, &b) in bits.iter().enumerate() {
            match b {
                0 => {}
                1 => mask |= 1 << i,
                _ => return Err(LatticeError::TypeOutsideHypercube { index: 0 }),
            }
        }
        Ok(VacancyType { d: d as u8, mask })
    }

    pub fn from_mask(d: usize, mask: u8) -> Self {
        debug_assert!(d <= MAX_DIM && (mask as u32) < (1u32 << d));
        VacancyType { d: d as u8, mask }
    }

    pub fn dim(&self) -> usize {
        self.d as usize
    }

    pub fn mask(&self) -> u8 {
        self.mask
    }

    pub fn bit(&self, i: usize) -> u8 {
        (self.mask >> i) & 1
    }

    pub fn bits(&self) -> Vec<u8> {
        (0..self.dim()).map(|i| self.bit(i)).collect()
    }

    /// The corner as a lattice point.
    pub fn corner(&self) -> Point {
        let mut p = Point::zero();
        for i in 0..self.dim() {
            p[i] = self.bit(i) as i64;
        }
        p
    }

    /// `1 − h`.
    pub fn opposite(&self) -> VacancyType {
        VacancyType { d: self.d, mask: !self.mask & ((1u16 << self.d) - 1) as u8 }
    }

    /// All `2^d` corners in canonical order.
    pub fn hypercube(d: usize) -> Vec<VacancyType> {
        (0..(1u16 << d)).map(|m| VacancyType::from_mask(d, m as u8)).collect()
    }
}

impl fmt::Display for VacancyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.dim() {
            write!(f, "{}", self.bit(i))?;
        }
        Ok(())
    }
}

/// Neutral (`⋆`) or a vacancy.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum SiteState {
    Neutral,
    Vacancy(VacancyType),
}

/// `P(h)`: the unit vectors `v` with `h + v ∈ H_d`, one per axis.
pub fn propagation_directions(h: VacancyType, d: usize) -> Result<Vec<Dir>, LatticeError> {
    if h.dim() != d {
        return Err(LatticeError::DimensionMismatch { expected: d, got: h.dim() });
    }
    Ok(directions(h))
}

pub(crate) fn directions(h: VacancyType) -> Vec<Dir> {
    (0..h.dim()).map(|i| Dir { axis: i as u8, positive: h.bit(i) == 0 }).collect()
}

/// `x ≺^(h) y`: `x·v <= y·v` for all `v ∈ P(h)`.
pub fn partial_order_leq(h: VacancyType, x: &Point, y: &Point) -> bool {
    directions(h).iter().all(|dir| {
        let v = dir.vector();
        x.dot(&v) <= y.dot(&v)
    })
}

/// Validated model parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    d: usize,
    types: Vec<VacancyType>,
    q: Vec<f64>,
    p: f64,
    theta: Vec<f64>,
}

/// Checks `q_h > 0`, `Σ q_h < 1`, `G ⊆ H_d` without repeats and returns the
/// spec with types in canonical order.
pub fn validate_params<T: AsRef<[u8]>>(d: usize, types: &[T], q: &[f64]) -> Result<ModelSpec, LatticeError> {
    if d == 0 || d > MAX_DIM {
        return Err(LatticeError::InvalidDimension(d));
    }
    if types.is_empty() {
        return Err(LatticeError::EmptyTypeSet);
    }
    if types.len() != q.len() {
        return Err(LatticeError::LengthMismatch { types: types.len(), densities: q.len() });
    }
    let mut parsed: Vec<(VacancyType, f64)> = Vec::with_capacity(types.len());
    for (index, t) in types.iter().enumerate() {
        let bits = t.as_ref();
        if bits.len() != d || bits.iter().any(|&b| b > 1) {
            return Err(LatticeError::TypeOutsideHypercube { index });
        }
        let h = VacancyType::from_bits(bits).map_err(|_| LatticeError::TypeOutsideHypercube { index })?;
        if parsed.iter().any(|(g, _)| *g == h) {
            return Err(LatticeError::DuplicateType { index });
        }
        let value = q[index];
        if !(value > 0.0) {
            return Err(LatticeError::NonPositiveDensity { index, value });
        }
        parsed.push((h, value));
    }
    let sum: f64 = q.iter().sum();
    if !(sum < 1.0) {
        return Err(LatticeError::DensitySumNotBelowOne { sum });
    }
    parsed.sort_by(|a, b| a.0.cmp(&b.0));
    let types: Vec<VacancyType> = parsed.iter().map(|t| t.0).collect();
    let q: Vec<f64> = parsed.iter().map(|t| t.1).collect();
    let theta = q.iter().map(|&x| libm::fabs(libm::log2(x))).collect();
    Ok(ModelSpec { d, types, q, p: 1.0 - sum, theta })
}

impl ModelSpec {
    /// Convenience constructor from already-built types.
    pub fn new(types: &[VacancyType], q: &[f64]) -> Result<ModelSpec, LatticeError> {
        let d = types.first().map_or(0, |t| t.dim());
        let bits: Vec<Vec<u8>> = types.iter().map(|t| t.bits()).collect();
        if let Some(i) = types.iter().position(|t| t.dim() != d) {
            return Err(LatticeError::TypeOutsideHypercube { index: i });
        }
        validate_params(d, &bits, q)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    /// Vacancy types in canonical order; tag `k` is `types()[k-1]`.
    pub fn types(&self) -> &[VacancyType] {
        &self.types
    }

    pub fn num_types(&self) -> usize {
        self.types.len()
    }

    /// Number of single-site states `|G| + 1`.
    pub fn num_states(&self) -> usize {
        self.types.len() + 1
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn q_of(&self, h: VacancyType) -> Option<f64> {
        self.tag_of(h).map(|t| self.q[t as usize - 1])
    }

    pub fn tag_of(&self, h: VacancyType) -> Option<u8> {
        self.types.iter().position(|&t| t == h).map(|i| (i + 1) as u8)
    }

    pub fn tag_of_state(&self, s: SiteState) -> Option<u8> {
        match s {
            SiteState::Neutral => Some(NEUTRAL),
            SiteState::Vacancy(h) => self.tag_of(h),
        }
    }

    pub fn state_of_tag(&self, tag: u8) -> SiteState {
        if tag == NEUTRAL {
            SiteState::Neutral
        } else {
            SiteState::Vacancy(self.types[tag as usize - 1])
        }
    }

    pub fn vacancy(&self, tag: u8) -> VacancyType {
        self.types[tag as usize - 1]
    }

    /// `ν(tag)`: `p` for neutral, `q_h` otherwise.
    pub fn weight(&self, tag: u8) -> f64 {
        if tag == NEUTRAL {
            self.p
        } else {
            self.q[tag as usize - 1]
        }
    }

    /// Smallest density and its type (first in canonical order on ties).
    pub fn q_min(&self) -> (VacancyType, f64) {
        let mut best = 0;
        for i in 1..self.q.len() {
            if self.q[i] < self.q[best] {
                best = i;
            }
        }
        (self.types[best], self.q[best])
    }

    /// Restriction to `sub ⊆ G` with the same densities.
    pub fn restrict(&self, sub: &[VacancyType]) -> Result<ModelSpec, LatticeError> {
        let mut q = Vec::with_capacity(sub.len());
        for &h in sub {
            q.push(self.q_of(h).ok_or(LatticeError::TypeNotInModel)?);
        }
        ModelSpec::new(sub, &q)
    }

    fn sample_tag<R: Rng + ?Sized>(&self, rng: &mut R) -> u8 {
        let u: f64 = rng.gen();
        let mut acc = self.p;
        if u < acc {
            return NEUTRAL;
        }
        for (i, &q) in self.q.iter().enumerate() {
            acc += q;
            if u < acc {
                return (i + 1) as u8;
            }
        }
        self.q.len() as u8
    }
}

/// Finite set of sites with a fixed indexing.
///
/// Boxes index row-major with the first coordinate varying fastest; explicit
/// site sets index in sorted point order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Region {
    d: usize,
    kind: RegionKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum RegionKind {
    Box { origin: Point, sides: [usize; MAX_DIM], len: usize },
    Sites(Vec<Point>),
}

impl Region {
    /// Box `origin + Π_i {0, …, sides_i − 1}`.
    pub fn new_box(origin: &[i64], sides: &[usize]) -> Result<Region, LatticeError> {
        let d = sides.len();
        if d == 0 || d > MAX_DIM {
            return Err(LatticeError::InvalidDimension(d));
        }
        if origin.len() != d {
            return Err(LatticeError::DimensionMismatch { expected: d, got: origin.len() });
        }
        if sides.iter().any(|&s| s == 0) {
            return Err(LatticeError::EmptyRegion);
        }
        let mut s = [1usize; MAX_DIM];
        s[..d].copy_from_slice(sides);
        let len = sides.iter().product();
        Ok(Region { d, kind: RegionKind::Box { origin: Point::new(origin), sides: s, len } })
    }

    pub fn from_sites(d: usize, sites: &[Point]) -> Result<Region, LatticeError> {
        if d == 0 || d > MAX_DIM {
            return Err(LatticeError::InvalidDimension(d));
        }
        if sites.is_empty() {
            return Err(LatticeError::EmptyRegion);
        }
        let mut v: Vec<Point> = sites.to_vec();
        v.sort();
        v.dedup();
        Ok(Region { d, kind: RegionKind::Sites(v) })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn len(&self) -> usize {
        match &self.kind {
            RegionKind::Box { len, .. } => *len,
            RegionKind::Sites(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Box origin and side lengths, if the region is a box.
    pub fn box_shape(&self) -> Option<(Point, &[usize])> {
        match &self.kind {
            RegionKind::Box { origin, sides, .. } => Some((*origin, &sides[..self.d])),
            RegionKind::Sites(_) => None,
        }
    }

    pub fn index_of(&self, x: &Point) -> Option<usize> {
        match &self.kind {
            RegionKind::Box { origin, sides, .. } => {
                let mut idx = 0usize;
                let mut stride = 1usize;
                for i in 0..MAX_DIM {
                    let r = x[i] - origin[i];
                    if i >= self.d {
                        if x[i] != 0 {
                            return None;
                        }
                        continue;
                    }
                    if r < 0 || r as usize >= sides[i] {
                        return None;
                    }
                    idx += r as usize * stride;
                    stride *= sides[i];
                }
                Some(idx)
            }
            RegionKind::Sites(v) => v.binary_search(x).ok(),
        }
    }

    pub fn point(&self, index: usize) -> Point {
        match &self.kind {
            RegionKind::Box { origin, sides, .. } => {
                let mut p = *origin;
                let mut rest = index;
                for i in 0..self.d {
                    p[i] += (rest % sides[i]) as i64;
                    rest /= sides[i];
                }
                p
            }
            RegionKind::Sites(v) => v[index],
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.index_of(x).is_some()
    }

    pub fn points(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    /// Sites `x − v`, `x ∈ region`, `v ∈ P(h)`, `h ∈ types`, outside the region.
    pub fn outer_frame(&self, types: &[VacancyType]) -> BTreeSet<Point> {
        let mut out = BTreeSet::new();
        for x in self.points() {
            for &h in types {
                for dir in directions(h) {
                    let y = x - dir.vector();
                    if !self.contains(&y) {
                        out.insert(y);
                    }
                }
            }
        }
        out
    }
}

/// How constraints see sites outside the region.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    /// Fixed states on exactly the outer frame of the region.
    Frozen(BTreeMap<Point, SiteState>),
    /// Every constraint is satisfied at these region site indices; other
    /// off-region neighbours never facilitate.
    AllFacilitating(BTreeSet<usize>),
    /// Off-region neighbours never facilitate.
    Closed,
}

impl BoundaryCondition {
    /// Frozen frame with every frame site in state `s`.
    pub fn frozen_uniform(spec: &ModelSpec, region: &Region, s: SiteState) -> BoundaryCondition {
        let frame = region.outer_frame(spec.types()).into_iter().map(|p| (p, s)).collect();
        BoundaryCondition::Frozen(frame)
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            BoundaryCondition::Frozen(_) => "frozen",
            BoundaryCondition::AllFacilitating(_) => "all-facilitating",
            BoundaryCondition::Closed => "closed",
        }
    }
}

/// Spec, region and boundary, with precomputed facilitation tables.
#[derive(Clone, Debug)]
pub struct Domain {
    spec: ModelSpec,
    region: Region,
    boundary: BoundaryCondition,
    // Per (site, type-1): range into `fac_sites`, and whether the boundary
    // alone already satisfies the constraint.
    fac_start: Vec<u32>,
    fac_sites: Vec<u32>,
    fixed: Vec<bool>,
}

impl PartialEq for Domain {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.region == other.region && self.boundary == other.boundary
    }
}

impl Domain {
    pub fn new(spec: ModelSpec, region: Region, boundary: BoundaryCondition) -> Result<Domain, LatticeError> {
        if region.dim() != spec.dim() {
            return Err(LatticeError::DimensionMismatch { expected: spec.dim(), got: region.dim() });
        }
        match &boundary {
            BoundaryCondition::Frozen(frame) => {
                let need = region.outer_frame(spec.types());
                if frame.len() != need.len() || !need.iter().all(|p| frame.contains_key(p)) {
                    return Err(LatticeError::BadFrame("frame must cover exactly the outer frame"));
                }
                if frame.values().any(|s| spec.tag_of_state(*s).is_none()) {
                    return Err(LatticeError::BadFrame("frame state not in G"));
                }
            }
            BoundaryCondition::AllFacilitating(sites) => {
                if sites.iter().any(|&i| i >= region.len()) {
                    return Err(LatticeError::SiteOutsideRegion);
                }
            }
            BoundaryCondition::Closed => {}
        }
        let k = spec.num_types();
        let n = region.len();
        let mut fac_start = Vec::with_capacity(n * k + 1);
        let mut fac_sites = Vec::new();
        let mut fixed = Vec::with_capacity(n * k);
        for x in 0..n {
            let px = region.point(x);
            for (ti, &h) in spec.types().iter().enumerate() {
                fac_start.push(fac_sites.len() as u32);
                let mut fx = matches!(&boundary, BoundaryCondition::AllFacilitating(s) if s.contains(&x));
                for dir in directions(h) {
                    let y = px - dir.vector();
                    match region.index_of(&y) {
                        Some(j) => fac_sites.push(j as u32),
                        None => {
                            if let BoundaryCondition::Frozen(frame) = &boundary {
                                if spec.tag_of_state(frame[&y]) == Some((ti + 1) as u8) {
                                    fx = true;
                                }
                            }
                        }
                    }
                }
                fixed.push(fx);
            }
        }
        fac_start.push(fac_sites.len() as u32);
        Ok(Domain { spec, region, boundary, fac_start, fac_sites, fixed })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn boundary(&self) -> &BoundaryCondition {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.region.len()
    }

    pub fn is_empty(&self) -> bool {
        self.region.is_empty()
    }

    /// `c_x^h` for type tag `tag >= 1` on a raw state array.
    #[inline]
    pub fn facilitated(&self, states: &[u8], x: usize, tag: u8) -> bool {
        let slot = x * self.spec.num_types() + tag as usize - 1;
        if self.fixed[slot] {
            return true;
        }
        let (a, b) = (self.fac_start[slot] as usize, self.fac_start[slot + 1] as usize);
        self.fac_sites[a..b].iter().any(|&j| states[j as usize] == tag)
    }

    /// Region sites whose constraints read site `y` (the reverse table).
    pub fn dependents(&self, y: usize) -> Vec<usize> {
        let k = self.spec.num_types();
        let mut out = Vec::new();
        for slot in 0..self.fixed.len() {
            let (a, b) = (self.fac_start[slot] as usize, self.fac_start[slot + 1] as usize);
            if self.fac_sites[a..b].iter().any(|&j| j as usize == y) {
                let x = slot / k;
                if out.last() != Some(&x) {
                    out.push(x);
                }
            }
        }
        out
    }

    /// `μ` weight of a raw state array.
    pub fn weight(&self, states: &[u8]) -> f64 {
        states.iter().map(|&t| self.spec.weight(t)).product()
    }

    pub fn log_weight(&self, states: &[u8]) -> f64 {
        states.iter().map(|&t| libm::log(self.spec.weight(t))).sum()
    }

    /// Total number of configurations `(|G|+1)^{|Λ|}`, if it fits in `u64`.
    pub fn state_space_size(&self) -> Option<u64> {
        (self.spec.num_states() as u64).checked_pow(self.len() as u32)
    }
}

/// States of every region site under a shared [`Domain`].
#[derive(Clone, Debug, PartialEq)]
pub struct Configuration {
    domain: Arc<Domain>,
    states: Vec<u8>,
}

impl Configuration {
    pub fn new(domain: Arc<Domain>, states: Vec<u8>) -> Result<Configuration, LatticeError> {
        if states.len() != domain.len() {
            return Err(LatticeError::StateLength { expected: domain.len(), got: states.len() });
        }
        if let Some(&t) = states.iter().find(|&&t| t as usize > domain.spec().num_types()) {
            return Err(LatticeError::BadTag(t));
        }
        Ok(Configuration { domain, states })
    }

    pub fn neutral(domain: Arc<Domain>) -> Configuration {
        let n = domain.len();
        Configuration { domain, states: alloc::vec![NEUTRAL; n] }
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn spec(&self) -> &ModelSpec {
        self.domain.spec()
    }

    pub fn region(&self) -> &Region {
        self.domain.region()
    }

    pub fn boundary(&self) -> &BoundaryCondition {
        self.domain.boundary()
    }

    pub fn states(&self) -> &[u8] {
        &self.states
    }

    pub fn into_states(self) -> Vec<u8> {
        self.states
    }

    pub fn with_states(&self, states: Vec<u8>) -> Configuration {
        debug_assert_eq!(states.len(), self.states.len());
        Configuration { domain: self.domain.clone(), states }
    }

    pub fn tag(&self, x: usize) -> u8 {
        self.states[x]
    }

    pub fn set_tag(&mut self, x: usize, tag: u8) {
        debug_assert!(tag as usize <= self.spec().num_types());
        self.states[x] = tag;
    }

    pub fn get(&self, x: usize) -> SiteState {
        self.spec().state_of_tag(self.states[x])
    }

    pub fn at(&self, p: &Point) -> Option<SiteState> {
        self.region().index_of(p).map(|i| self.get(i))
    }

    pub fn set(&mut self, x: usize, s: SiteState) -> Result<(), LatticeError> {
        let tag = self.spec().tag_of_state(s).ok_or(LatticeError::TypeNotInModel)?;
        self.states[x] = tag;
        Ok(())
    }

    pub fn set_at(&mut self, p: &Point, s: SiteState) -> Result<(), LatticeError> {
        let x = self.region().index_of(p).ok_or(LatticeError::SiteOutsideRegion)?;
        self.set(x, s)
    }
}

/// `c_x^h`, evaluated from the definition on lattice points.
pub fn constraint(cfg: &Configuration, x: usize, h: VacancyType) -> Result<bool, LatticeError> {
    let region = cfg.region();
    if x >= region.len() {
        return Err(LatticeError::SiteOutsideRegion);
    }
    let tag = cfg.spec().tag_of(h).ok_or(LatticeError::TypeNotInModel)?;
    if let BoundaryCondition::AllFacilitating(s) = cfg.boundary() {
        if s.contains(&x) {
            return Ok(true);
        }
    }
    let px = region.point(x);
    for dir in directions(h) {
        let y = px - dir.vector();
        let holds = match region.index_of(&y) {
            Some(j) => cfg.tag(j) == tag,
            None => match cfg.boundary() {
                BoundaryCondition::Frozen(frame) => frame.get(&y) == Some(&SiteState::Vacancy(h)),
                _ => false,
            },
        };
        if holds {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Product measure weight `Π_x ν(ω_x)`.
pub fn measure_weight(cfg: &Configuration) -> f64 {
    if cfg.states.len() <= 20 {
        cfg.domain.weight(&cfg.states)
    } else {
        libm::exp(cfg.domain.log_weight(&cfg.states))
    }
}

pub fn log_measure_weight(cfg: &Configuration) -> f64 {
    cfg.domain.log_weight(&cfg.states)
}

/// I.i.d. draw from `ν` at every site.
pub fn sample_config<R: Rng + ?Sized>(domain: &Arc<Domain>, rng: &mut R) -> Configuration {
    let states = (0..domain.len()).map(|_| domain.spec().sample_tag(rng)).collect();
    Configuration { domain: domain.clone(), states }
}

/// Draws one site state from `ν`.
pub fn sample_state<R: Rng + ?Sized>(spec: &ModelSpec, rng: &mut R) -> u8 {
    spec.sample_tag(rng)
}

/// Counter-based generator for `(seed, stream)`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
