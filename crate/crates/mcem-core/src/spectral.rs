//! Generator assembly, Dirichlet form, spectral gaps and the functional
//! inequalities used in the relaxation bounds.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

use crate::dynamics::{for_each_state, for_each_transition};
use crate::lattice::{stream_rng, BoundaryCondition, Domain, LatticeError, ModelSpec, SiteState, VacancyType, NEUTRAL};
use crate::reachability::{verify_legal_path, LegalPath};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpectralError {
    #[error("state space too large: {0} configurations")]
    TooLarge(u64),
    #[error("size mismatch: expected {expected}, got {got}")]
    SizeMismatch { expected: usize, got: usize },
    #[error("trial function {0} is constant")]
    ConstantTrial(usize),
    #[error("eigensolver failure: {0}")]
    Eigen(&'static str),
    #[error("invalid path: first bad step {0}")]
    InvalidPath(usize),
    #[error("event has zero mass")]
    ZeroEventMass,
    #[error("not a subset of the model's types")]
    NotSubset,
    #[error(transparent)]
    Lattice(#[from] LatticeError),
}

/// Default cap on `|Ω_Λ|` for generator assembly.
pub const GENERATOR_CAP: u64 = 2_000_000;

/// Largest state space solved with the dense eigensolver by default.
pub const DENSE_LIMIT: usize = 4096;

/// Relative threshold deciding whether an eigenvalue is zero.
pub const ZERO_TOL: f64 = 1e-9;

/// Sparse rate matrix `L` over all configurations of a domain, with the
/// stationary weights `μ`. States are indexed in mixed radix, site 0 least
/// significant.
#[derive(Clone, Debug)]
pub struct GeneratorMatrix {
    domain: Arc<Domain>,
    mu: Vec<f64>,
    diag: Vec<f64>,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    rates: Vec<f64>,
}

/// Assembles `L` for the domain, refusing state spaces above `cap`.
pub fn build_generator(domain: &Arc<Domain>, cap: u64) -> Result<GeneratorMatrix, SpectralError> {
    let total = domain.state_space_size().unwrap_or(u64::MAX);
    if total > cap || total > u32::MAX as u64 {
        return Err(SpectralError::TooLarge(total));
    }
    let n = total as usize;
    let base = domain.spec().num_states();
    let mut pow = vec![1usize; domain.len()];
    for x in 1..domain.len() {
        pow[x] = pow[x - 1] * base;
    }
    let mut g = GeneratorMatrix {
        domain: domain.clone(),
        mu: Vec::with_capacity(n),
        diag: Vec::with_capacity(n),
        row_start: Vec::with_capacity(n + 1),
        cols: Vec::new(),
        rates: Vec::new(),
    };
    g.row_start.push(0);
    for_each_state(domain.len(), base as u8, |idx, states| {
        g.mu.push(domain.weight(states));
        let mut out = 0.0;
        for_each_transition(domain, states, |x, _, new, rate| {
            let j = idx + new as usize * pow[x] - states[x] as usize * pow[x];
            g.cols.push(j as u32);
            g.rates.push(rate);
            out += rate;
        });
        g.diag.push(-out);
        g.row_start.push(g.cols.len());
    });
    Ok(g)
}

impl GeneratorMatrix {
    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Stationary weights `μ(ω)` (they sum to 1).
    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn diag(&self, i: usize) -> f64 {
        self.diag[i]
    }

    /// Off-diagonal entries `(j, r(i→j))` of row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_start[i], self.row_start[i + 1]);
        self.cols[a..b].iter().zip(&self.rates[a..b]).map(|(&j, &r)| (j as usize, r))
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn encode(&self, states: &[u8]) -> Option<usize> {
        if states.len() != self.domain.len() {
            return None;
        }
        let base = self.domain.spec().num_states();
        let mut idx = 0usize;
        for &s in states.iter().rev() {
            if s as usize >= base {
                return None;
            }
            idx = idx * base + s as usize;
        }
        Some(idx)
    }

    pub fn decode(&self, mut idx: usize) -> Vec<u8> {
        let base = self.domain.spec().num_states();
        (0..self.domain.len())
            .map(|_| {
                let s = (idx % base) as u8;
                idx /= base;
                s
            })
            .collect()
    }

    /// `(Lf)(ω)`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.dim()).map(|i| self.diag[i] * f[i] + self.row(i).map(|(j, r)| r * f[j]).sum::<f64>()).collect()
    }

    /// `μ(−f L f)`.
    pub fn quadratic_form(&self, f: &[f64]) -> Result<f64, SpectralError> {
        self.check_len(f)?;
        let lf = self.apply(f);
        Ok(-(0..self.dim()).map(|i| self.mu[i] * f[i] * lf[i]).sum::<f64>())
    }

    /// Largest `|Σ_j L_ij|`.
    pub fn row_sum_residual(&self) -> f64 {
        (0..self.dim()).map(|i| (self.diag[i] + self.row(i).map(|(_, r)| r).sum::<f64>()).abs()).fold(0.0, f64::max)
    }

    /// Largest `|μ(ω) r(ω→η) − μ(η) r(η→ω)|` over stored pairs.
    pub fn reversibility_residual(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for (j, r) in self.row(i) {
                let back = self.row(j).find(|&(k, _)| k == i).map(|(_, r)| r).unwrap_or(0.0);
                worst = worst.max((self.mu[i] * r - self.mu[j] * back).abs());
            }
        }
        worst
    }

    /// Dense copy of `L` (row-major).
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = self.diag[i];
            for (j, r) in self.row(i) {
                m[(i, j)] += r;
            }
        }
        m
    }

    /// Dense `−S` with `S_ij = sqrt(μ_i/μ_j) L_ij`.
    pub fn symmetrized_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = -self.diag[i];
            for (j, r) in self.row(i) {
                m[(i, j)] -= libm::sqrt(self.mu[i] / self.mu[j]) * r;
            }
        }
        m
    }

    fn sym_apply(&self, v: &[f64], out: &mut [f64], sq: &[f64]) {
        for i in 0..self.dim() {
            let mut acc = -self.diag[i] * v[i];
            for (j, r) in self.row(i) {
                acc -= sq[i] / sq[j] * r * v[j];
            }
            out[i] = acc;
        }
    }

    fn check_len(&self, f: &[f64]) -> Result<(), SpectralError> {
        if f.len() != self.dim() {
            return Err(SpectralError::SizeMismatch { expected: self.dim(), got: f.len() });
        }
        Ok(())
    }
}

/// `Var_μ(f)`.
pub fn variance(gen: &GeneratorMatrix, f: &[f64]) -> Result<f64, SpectralError> {
    gen.check_len(f)?;
    Ok(weighted_variance(gen.mu(), f))
}

fn weighted_variance(w: &[f64], f: &[f64]) -> f64 {
    let total: f64 = w.iter().sum();
    let mean = w.iter().zip(f).map(|(a, b)| a * b).sum::<f64>() / total;
    w.iter().zip(f).map(|(a, b)| a * (b - mean) * (b - mean)).sum::<f64>() / total
}

/// `D(f) = Σ_h Σ_x p q_h μ_{Λ∖x}[c_x^h (f(⋆·ω) − f(h·ω))²]`, summed edge by
/// edge; equals `μ(−fLf)`.
pub fn dirichlet_form(gen: &GeneratorMatrix, f: &[f64]) -> Result<f64, SpectralError> {
    gen.check_len(f)?;
    let domain = gen.domain();
    let spec = domain.spec();
    let base = spec.num_states();
    let p = spec.p();
    let mut pow = vec![1usize; domain.len()];
    for x in 1..domain.len() {
        pow[x] = pow[x - 1] * base;
    }
    let mut total = 0.0;
    for_each_state(domain.len(), base as u8, |idx, states| {
        let w = gen.mu[idx];
        for x in 0..states.len() {
            if states[x] != NEUTRAL {
                continue;
            }
            let rest = w / p;
            for tag in 1..base as u8 {
                if domain.facilitated(states, x, tag) {
                    let q = spec.weight(tag);
                    let diff = f[idx] - f[idx + tag as usize * pow[x]];
                    total += rest * p * q * diff * diff;
                }
            }
        }
    });
    Ok(total)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GapMethod {
    Dense,
    Lanczos,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GapResult {
    /// Smallest nonzero eigenvalue of `−L`, or 0 if 0 is degenerate.
    pub gap: f64,
    pub ergodic: bool,
    pub lambda_max: f64,
    pub method: GapMethod,
}

/// Spectral gap with the dense solver up to [`DENSE_LIMIT`] states and
/// restarted Lanczos above.
pub fn spectral_gap_exact(gen: &GeneratorMatrix) -> Result<GapResult, SpectralError> {
    let method = if gen.dim() <= DENSE_LIMIT { GapMethod::Dense } else { GapMethod::Lanczos };
    spectral_gap_with(gen, method)
}

pub fn spectral_gap_with(gen: &GeneratorMatrix, method: GapMethod) -> Result<GapResult, SpectralError> {
    if gen.dim() == 1 {
        return Ok(GapResult { gap: 0.0, ergodic: true, lambda_max: 0.0, method });
    }
    match method {
        GapMethod::Dense => {
            let ev = spectrum_dense(gen);
            let lambda_max = ev[ev.len() - 1].max(0.0);
            let tol = ZERO_TOL * lambda_max;
            let zeros = ev.iter().filter(|&&l| l <= tol).count();
            let ergodic = zeros <= 1;
            let gap = if ergodic { ev[1] } else { 0.0 };
            Ok(GapResult { gap, ergodic, lambda_max, method })
        }
        GapMethod::Lanczos => lanczos_gap(gen),
    }
}

/// Eigenvalues of `−L` in ascending order (dense symmetrized solve).
pub fn spectrum_dense(gen: &GeneratorMatrix) -> Vec<f64> {
    let eig = SymmetricEigen::new(gen.symmetrized_dense());
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// Gap together with an eigenfunction `f` attaining it (dense only).
pub fn gap_eigenfunction(gen: &GeneratorMatrix) -> Result<(f64, Vec<f64>), SpectralError> {
    if gen.dim() < 2 {
        return Err(SpectralError::Eigen("state space has a single configuration"));
    }
    let eig = SymmetricEigen::new(gen.symmetrized_dense());
    let mut order: Vec<usize> = (0..gen.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let k = order[1];
    let f = (0..gen.dim()).map(|i| eig.eigenvectors[(i, k)] / libm::sqrt(gen.mu[i])).collect();
    Ok((eig.eigenvalues[k], f))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (u, v) in y.iter_mut().zip(x) {
        *u += a * v;
    }
}

fn normalize(v: &mut [f64]) -> f64 {
    let n = libm::sqrt(dot(v, v));
    if n > 0.0 {
        for x in v.iter_mut() {
            *x /= n;
        }
    }
    n
}

/// Restarted Lanczos with full reorthogonalization on the complement of
/// `sqrt(μ)`, the kernel vector of the symmetrized generator.
fn lanczos_gap(gen: &GeneratorMatrix) -> Result<GapResult, SpectralError> {
    let n = gen.dim();
    let sq: Vec<f64> = gen.mu.iter().map(|&m| libm::sqrt(m)).collect();
    let mut u0 = sq.clone();
    normalize(&mut u0);
    let m = (25_000_000 / n).clamp(12, 150).min(n - 1);
    let mut rng = stream_rng(0x5eed, 7);
    let mut start: Vec<f64> = (0..n).map(|_| rng.gen::<f64>() - 0.5).collect();
    let mut lambda_max = 0.0f64;
    let mut best = f64::INFINITY;
    let mut w = vec![0.0; n];
    for _restart in 0..400 {
        let c = dot(&start, &u0);
        axpy(&mut start, -c, &u0);
        if normalize(&mut start) == 0.0 {
            return Err(SpectralError::Eigen("start vector in the kernel"));
        }
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::with_capacity(m);
        let mut beta: Vec<f64> = Vec::with_capacity(m);
        let mut last_beta = 0.0;
        let mut breakdown = false;
        for k in 0..m {
            gen.sym_apply(&basis[k], &mut w, &sq);
            let a = dot(&w, &basis[k]);
            alpha.push(a);
            for _ in 0..2 {
                let c = dot(&w, &u0);
                axpy(&mut w, -c, &u0);
                for b in &basis {
                    let c = dot(&w, b);
                    axpy(&mut w, -c, b);
                }
            }
            let bnorm = normalize(&mut w);
            last_beta = bnorm;
            if bnorm <= 1e-14 * (a.abs() + 1.0) {
                breakdown = true;
                break;
            }
            if k + 1 == m {
                break;
            }
            beta.push(bnorm);
            basis.push(w.clone());
        }
        let k = alpha.len();
        let mut t = DMatrix::zeros(k, k);
        for i in 0..k {
            t[(i, i)] = alpha[i];
            if i + 1 < k {
                t[(i, i + 1)] = beta[i];
                t[(i + 1, i)] = beta[i];
            }
        }
        let eig = SymmetricEigen::new(t);
        let (mut imin, mut imax) = (0, 0);
        for i in 0..k {
            if eig.eigenvalues[i] < eig.eigenvalues[imin] {
                imin = i;
            }
            if eig.eigenvalues[i] > eig.eigenvalues[imax] {
                imax = i;
            }
        }
        lambda_max = lambda_max.max(eig.eigenvalues[imax]);
        let theta = eig.eigenvalues[imin];
        let resid = (last_beta * eig.eigenvectors[(k - 1, imin)]).abs();
        let mut ritz = vec![0.0; n];
        for (i, b) in basis.iter().enumerate() {
            axpy(&mut ritz, eig.eigenvectors[(i, imin)], b);
        }
        best = theta;
        if breakdown || resid <= 1e-11 * lambda_max.max(f64::MIN_POSITIVE) {
            break;
        }
        start = ritz;
    }
    let tol = ZERO_TOL * lambda_max;
    let ergodic = best > tol;
    Ok(GapResult { gap: if ergodic { best } else { 0.0 }, ergodic, lambda_max, method: GapMethod::Lanczos })
}

/// `min_f D(f)/Var(f)` over the trial functions.
pub fn spectral_gap_variational(gen: &GeneratorMatrix, trials: &[Vec<f64>]) -> Result<f64, SpectralError> {
    let mut best = f64::INFINITY;
    for (k, f) in trials.iter().enumerate() {
        let var = variance(gen, f)?;
        let scale = dot(gen.mu(), &f.iter().map(|x| x * x).collect::<Vec<_>>());
        if var <= 1e-14 * scale || var == 0.0 {
            return Err(SpectralError::ConstantTrial(k));
        }
        best = best.min(dirichlet_form(gen, f)? / var);
    }
    Ok(best)
}

/// The projection `φ`: types of the sub-model keep their value, all other
/// states become neutral. Tags are translated between the two specs.
pub fn project_states(from: &ModelSpec, to: &ModelSpec, states: &[u8]) -> Vec<u8> {
    states.iter().map(|&t| if t == NEUTRAL { NEUTRAL } else { to.tag_of(from.vacancy(t)).unwrap_or(NEUTRAL) }).collect()
}

/// Same region and boundary for the sub-model with `q' = {q_h : h ∈ G'}`.
pub fn restrict_domain(domain: &Domain, sub: &[VacancyType]) -> Result<Arc<Domain>, SpectralError> {
    let spec = domain.spec();
    if sub.iter().any(|h| spec.tag_of(*h).is_none()) {
        return Err(SpectralError::NotSubset);
    }
    let sub_spec = spec.restrict(sub)?;
    let boundary = match domain.boundary() {
        BoundaryCondition::Frozen(frame) => {
            let projected: BTreeMap<_, _> = frame
                .iter()
                .map(|(p, s)| {
                    let s = match s {
                        SiteState::Vacancy(h) if sub.contains(h) => *s,
                        _ => SiteState::Neutral,
                    };
                    (*p, s)
                })
                .collect();
            let need = domain.region().outer_frame(sub_spec.types());
            BoundaryCondition::Frozen(projected.into_iter().filter(|(p, _)| need.contains(p)).collect())
        }
        other => other.clone(),
    };
    Ok(Arc::new(Domain::new(sub_spec, domain.region().clone(), boundary)?))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotonicityReport {
    pub gap_full: f64,
    pub gap_sub: f64,
    pub pass: bool,
}

/// Exact gaps of the `G` model and the `G'` model on the same geometry.
pub fn gap_monotonicity_report(domain: &Arc<Domain>, sub: &[VacancyType]) -> Result<MonotonicityReport, SpectralError> {
    let sub_domain = restrict_domain(domain, sub)?;
    let g_full = spectral_gap_exact(&build_generator(domain, GENERATOR_CAP)?)?.gap;
    let g_sub = spectral_gap_exact(&build_generator(&sub_domain, GENERATOR_CAP)?)?.gap;
    Ok(MonotonicityReport { gap_full: g_full, gap_sub: g_sub, pass: g_full <= g_sub + 1e-9 })
}

/// Leading-order East gap `2^{−θ²/(2d)}` with `θ = |log₂ q|`. An asymptotic
/// reference only.
pub fn east_gap_asymptotic(q: f64, d: usize) -> f64 {
    let theta = libm::fabs(libm::log2(q));
    libm::exp2(-theta * theta / (2.0 * d as f64))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InequalityReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Single-site check of `Var_ν(f) ≤ 2 Σ_h q_h (f(h) − f(⋆))²`; `f` is
/// indexed by tag.
pub fn var_transition_bound_check(spec: &ModelSpec, f: &[f64]) -> Result<InequalityReport, SpectralError> {
    let k = spec.num_states();
    if f.len() != k {
        return Err(SpectralError::SizeMismatch { expected: k, got: f.len() });
    }
    let w: Vec<f64> = (0..k as u8).map(|t| spec.weight(t)).collect();
    let lhs = weighted_variance(&w, f);
    let rhs = 2.0 * (1..k).map(|t| w[t] * (f[t] - f[0]) * (f[t] - f[0])).sum::<f64>();
    Ok(InequalityReport { lhs, rhs, pass: lhs <= rhs + 1e-12 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PathMethodReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
    /// The set `Λ` of sites changed along the path.
    pub touched: Vec<usize>,
}

/// Number of configurations of the touched set, i.e. the length `f` must
/// have in [`path_method_bound`].
pub fn path_function_len(path: &LegalPath) -> usize {
    let r = verify_legal_path(path);
    path.domain.spec().num_states().pow(r.touched_sites.len() as u32)
}

/// Path-method inequality
/// `μ_Λ(ω)(f(ω) − f(η))² ≤ n / min(q, p) · max_i μ_Λ(ω)/μ_Λ(ω^(i)) · D_Λ(f)(ω)`
/// with `Λ` the touched sites, `f` indexed by the mixed-radix code of the
/// states on `Λ` (ascending site order) and the outside fixed to `ω`.
pub fn path_method_bound(path: &LegalPath, f: &[f64]) -> Result<PathMethodReport, SpectralError> {
    let report = verify_legal_path(path);
    if !report.valid {
        return Err(SpectralError::InvalidPath(report.first_bad_index.unwrap_or(0)));
    }
    let domain = &path.domain;
    let spec = domain.spec();
    let base = spec.num_states();
    let lam = report.touched_sites;
    let size = (base as u64).checked_pow(lam.len() as u32).unwrap_or(u64::MAX);
    if size > GENERATOR_CAP {
        return Err(SpectralError::TooLarge(size));
    }
    if f.len() as u64 != size {
        return Err(SpectralError::SizeMismatch { expected: size as usize, got: f.len() });
    }
    let code = |s: &[u8]| lam.iter().rev().fold(0usize, |acc, &x| acc * base + s[x] as usize);
    let mu_lam = |s: &[u8]| lam.iter().map(|&x| spec.weight(s[x])).product::<f64>();
    let omega = &path.configs[0];
    let eta = &path.configs[path.configs.len() - 1];
    let diff = f[code(omega)] - f[code(eta)];
    let lhs = mu_lam(omega) * diff * diff;
    let max_ratio = path.configs.iter().map(|c| mu_lam(omega) / mu_lam(c)).fold(0.0, f64::max);
    let qmin = spec.q().iter().copied().fold(spec.p(), f64::min);
    let p = spec.p();
    let mut full = omega.clone();
    let mut dform = 0.0;
    for_each_state(lam.len(), base as u8, |idx, local| {
        for (k, &x) in lam.iter().enumerate() {
            full[x] = local[k];
        }
        for (k, &x) in lam.iter().enumerate() {
            if local[k] != NEUTRAL {
                continue;
            }
            let rest = mu_lam(&full) / p;
            let step = base.pow(k as u32);
            for tag in 1..base as u8 {
                if domain.facilitated(&full, x, tag) {
                    let dd = f[idx] - f[idx + tag as usize * step];
                    dform += rest * p * spec.weight(tag) * dd * dd;
                }
            }
        }
    });
    let n = path.configs.len() as f64;
    let rhs = n / qmin * max_ratio * dform;
    Ok(PathMethodReport { lhs, rhs, pass: lhs <= rhs + 1e-10 * rhs, touched: lam })
}

/// Block-relaxation inequality on a product of two finite spaces:
/// `Var_ν(f) ≤ 2/ν1(A) · ν(Var_{ν1}(f) + 1_A Var_{ν2}(f))` with `A` an event
/// on the first factor. `f` is row-major, `f[i * n2 + j]`.
pub fn block_relax_check(
    nu1: &[f64],
    nu2: &[f64],
    event: &[bool],
    f: &[f64],
) -> Result<InequalityReport, SpectralError> {
    let (n1, n2) = (nu1.len(), nu2.len());
    if event.len() != n1 {
        return Err(SpectralError::SizeMismatch { expected: n1, got: event.len() });
    }
    if f.len() != n1 * n2 {
        return Err(SpectralError::SizeMismatch { expected: n1 * n2, got: f.len() });
    }
    let mass_a: f64 = nu1.iter().zip(event).filter(|(_, &a)| a).map(|(w, _)| w).sum();
    if mass_a <= 0.0 {
        return Err(SpectralError::ZeroEventMass);
    }
    let w: Vec<f64> = (0..n1 * n2).map(|k| nu1[k / n2] * nu2[k % n2]).collect();
    let lhs = weighted_variance(&w, f);
    let var1: Vec<f64> =
        (0..n2).map(|j| weighted_variance(nu1, &(0..n1).map(|i| f[i * n2 + j]).collect::<Vec<_>>())).collect();
    let var2: Vec<f64> = (0..n1).map(|i| weighted_variance(nu2, &f[i * n2..(i + 1) * n2])).collect();
    let mut expect = 0.0;
    for i in 0..n1 {
        for j in 0..n2 {
            let a = if event[i] { var2[i] } else { 0.0 };
            expect += nu1[i] * nu2[j] * (var1[j] + a);
        }
    }
    let rhs = 2.0 / mass_a * expect;
    Ok(InequalityReport { lhs, rhs, pass: lhs <= rhs + 1e-12 * rhs.max(1.0) })
}

/// Partition of the state space into classes closed under legal moves.
pub fn communicating_classes(gen: &GeneratorMatrix) -> usize {
    let n = gen.dim();
    let mut seen = vec![false; n];
    let mut classes = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        classes += 1;
        seen[s] = true;
        stack.push(s);
        while let Some(i) = stack.pop() {
            for (j, _) in gen.row(i) {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    classes
}

/// Type sets `G' ⊆ G` with `G'` non-empty, in mask order.
pub fn nonempty_subsets(types: &[VacancyType]) -> Vec<Vec<VacancyType>> {
    let mut out: BTreeSet<Vec<VacancyType>> = BTreeSet::new();
    for m in 1u32..(1 << types.len()) {
        out.insert((0..types.len()).filter(|&k| m >> k & 1 == 1).map(|k| types[k]).collect());
    }
    out.into_iter().collect()
}
