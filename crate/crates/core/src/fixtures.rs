//! Example automata: the mod-p measure-once block, the binary-sum and
//! balanced-zeros QFA with classical states, the three-state measure-many
//! QFA, their specification variants, and classical counting DFAs used as
//! state-complexity baselines.

use std::collections::HashMap;
use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::alphabet::{Alphabet, Word};
use crate::automata::{Dfa, MmQfa, MoQfa, Qfac};
use crate::error::{QdesError, Result};
use crate::linalg::{inner, norm, CMatrix, CVector, Projector, C64, ZERO};
use crate::random;
use crate::supervisory::{ControlSpec, QfaModel};

pub const DEFAULT_SEED: u64 = 0x5eed;

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

/// Smallest prime strictly between `lo` and `hi`.
pub fn smallest_prime_between(lo: u64, hi: u64) -> Option<u64> {
    (lo + 1..hi).find(|&n| is_prime(n))
}

/// Fills in the unspecified columns of a unitary: the given columns are kept
/// and the rest are produced by Gram–Schmidt over `e_0, e_1, …` in order.
pub fn complete_unitary(n: usize, given: &[(usize, Vec<C64>)]) -> Result<CMatrix> {
    let mut cols: Vec<Option<Vec<C64>>> = vec![None; n];
    let mut basis: Vec<Vec<C64>> = Vec::new();
    for (j, v) in given {
        if *j >= n || v.len() != n {
            return Err(QdesError::InvalidParameter(format!("column {j} does not fit dimension {n}")));
        }
        cols[*j] = Some(v.clone());
        basis.push(v.clone());
    }
    let mut candidates = (0..n).map(|i| CVector::basis(n, i).0);
    for slot in cols.iter_mut().filter(|c| c.is_none()) {
        loop {
            let mut e = candidates
                .next()
                .ok_or_else(|| QdesError::InvalidParameter("given columns are not orthonormal".into()))?;
            for _ in 0..2 {
                for q in &basis {
                    let c = inner(q, &e);
                    for (ei, qi) in e.iter_mut().zip(q) {
                        *ei -= c * qi;
                    }
                }
            }
            let ne = norm(&e);
            if ne > 1e-9 {
                let v: Vec<C64> = e.into_iter().map(|z| z / ne).collect();
                basis.push(v.clone());
                *slot = Some(v);
                break;
            }
        }
    }
    let cols: Vec<Vec<C64>> = cols.into_iter().map(|c| c.expect("filled")).collect();
    CMatrix::from_columns(&cols)
}

/// Search settings for the mod-p block.
#[derive(Clone, Debug)]
pub struct AfSearch {
    pub seed: u64,
    /// Largest number of rotation blocks tried.
    pub max_blocks: usize,
    /// Random multiplier sets tried per block count.
    pub retries: usize,
}

impl Default for AfSearch {
    fn default() -> Self {
        AfSearch {
            seed: DEFAULT_SEED,
            max_blocks: 24,
            retries: 200,
        }
    }
}

/// Result of the exhaustive residue sweep.
#[derive(Clone, Debug, Serialize)]
pub struct AfCertificate {
    pub p: u64,
    pub epsilon: f64,
    pub multipliers: Vec<u64>,
    /// Largest acceptance probability over `t ∈ {1..p-1}`, measured on the
    /// automaton itself.
    pub max_off_residue: f64,
    pub argmax: u64,
}

/// The rotation-block unitary `U(0)` of the mod-p automaton in the frame
/// where `ψ₀ = e₀` and `P(a) = {0}`.
#[derive(Clone, Debug)]
pub struct AfBlock {
    pub p: u64,
    pub multipliers: Vec<u64>,
    householder: CMatrix,
}

impl AfBlock {
    pub fn new(p: u64, multipliers: Vec<u64>) -> Self {
        let d = multipliers.len();
        let n = 2 * d;
        // Householder reflection taking ψ = d^{-1/2} Σ e_{2j} to e_0.
        let s = 1.0 / (d as f64).sqrt();
        let mut u = vec![0.0; n];
        for j in 0..d {
            u[2 * j] = s;
        }
        u[0] -= 1.0;
        let uu: f64 = u.iter().map(|x| x * x).sum();
        let mut h = CMatrix::identity(n);
        if uu > 1e-30 {
            for i in 0..n {
                for j in 0..n {
                    h[(i, j)] -= C64::new(2.0 * u[i] * u[j] / uu, 0.0);
                }
            }
        }
        AfBlock {
            p,
            multipliers,
            householder: h,
        }
    }

    pub fn dim(&self) -> usize {
        2 * self.multipliers.len()
    }

    /// `U(0)^m`, built from the rotation angles with `m` reduced mod `p`.
    pub fn power(&self, m: u64) -> CMatrix {
        let n = self.dim();
        let e = m % self.p;
        let mut blocks = CMatrix::zeros(n, n);
        for (j, &k) in self.multipliers.iter().enumerate() {
            let theta = 2.0 * PI * ((k * e) % self.p) as f64 / self.p as f64;
            let (s, c) = theta.sin_cos();
            blocks[(2 * j, 2 * j)] = C64::new(c, 0.0);
            blocks[(2 * j, 2 * j + 1)] = C64::new(-s, 0.0);
            blocks[(2 * j + 1, 2 * j)] = C64::new(s, 0.0);
            blocks[(2 * j + 1, 2 * j + 1)] = C64::new(c, 0.0);
        }
        let h = &self.householder;
        h.matmul(&blocks).and_then(|x| x.matmul(h)).expect("square")
    }

    /// Closed form of the acceptance probability on `0^t`:
    /// `((1/d) Σ_j cos(2π k_j t / p))²`.
    pub fn formula(p: u64, ks: &[u64], t: u64) -> f64 {
        let d = ks.len() as f64;
        let s: f64 = ks
            .iter()
            .map(|&k| (2.0 * PI * ((k * t) % p) as f64 / p as f64).cos())
            .sum();
        (s / d).powi(2)
    }

    pub fn automaton(&self) -> MoQfa {
        let n = self.dim();
        MoQfa::with_accepting(
            Alphabet::new(["0"]).expect("alphabet"),
            vec![self.power(1)],
            CVector::basis(n, 0),
            Projector::new(n, [0]).expect("range"),
        )
        .expect("valid by construction")
    }

    /// Sweeps `t = 1..p-1` on the automaton, returning the largest acceptance
    /// probability and where it occurs.
    pub fn sweep(&self) -> (f64, u64) {
        let u = self.power(1);
        let mut psi = CVector::basis(self.dim(), 0).0;
        let mut best = (f64::NEG_INFINITY, 0);
        for t in 1..self.p {
            psi = u.apply(&psi).expect("shape");
            let v = psi[0].norm_sqr();
            if v > best.0 {
                best = (v, t);
            }
        }
        best
    }
}

/// Randomized search for rotation multipliers, smallest block count first,
/// certified by an exhaustive sweep.
pub fn af_search(p: u64, epsilon: f64, search: &AfSearch) -> Result<(AfBlock, AfCertificate)> {
    if !is_prime(p) {
        return Err(QdesError::InvalidParameter(format!("{p} is not prime")));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(QdesError::InvalidParameter(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let mut rng = random::rng(search.seed ^ p);
    for d in 1..=search.max_blocks {
        for _ in 0..search.retries {
            let ks: Vec<u64> = (0..d).map(|_| rng.gen_range(1..p)).collect();
            let worst = (1..p).map(|t| AfBlock::formula(p, &ks, t)).fold(0.0, f64::max);
            if worst >= epsilon {
                continue;
            }
            let block = AfBlock::new(p, ks.clone());
            let (max_off, argmax) = block.sweep();
            if max_off < epsilon {
                let cert = AfCertificate {
                    p,
                    epsilon,
                    multipliers: ks,
                    max_off_residue: max_off,
                    argmax,
                };
                return Ok((block, cert));
            }
        }
    }
    Err(QdesError::SearchFailed(format!(
        "no multiplier set with at most {} blocks reaches epsilon {epsilon} for p = {p}",
        search.max_blocks
    )))
}

/// Measure-once QFA over `{0}` accepting `0^t` with probability 1 when
/// `p | t` and below `ε` otherwise.
pub fn build_af_modp(p: u64, epsilon: f64) -> Result<MoQfa> {
    Ok(af_search(p, epsilon, &AfSearch::default())?.0.automaton())
}

pub fn build_af_modp_certified(p: u64, epsilon: f64, search: &AfSearch) -> Result<(MoQfa, AfCertificate)> {
    let (block, cert) = af_search(p, epsilon, search)?;
    Ok((block.automaton(), cert))
}

fn ternary() -> Alphabet {
    Alphabet::new(["0", "1", "2"]).expect("alphabet")
}

/// A fixture with classical states together with the certificate of its
/// mod-p block.
#[derive(Clone, Debug)]
pub struct QfacFixture {
    pub automaton: Qfac,
    pub certificate: AfCertificate,
    pub n: usize,
}

/// QFA with `2N + 2` classical states for
/// `L^(N) = {w : |w_{0,1}| < 2N} ∪ {w : |w_{0,1}| = 2N, x + y = 2^N − 1}`
/// where `x` and `y` are the binary values of the two halves of `w_{0,1}`.
pub fn build_eg1(n: usize, epsilon: f64) -> Result<Qfac> {
    Ok(build_eg1_with(n, epsilon, &AfSearch::default())?.automaton)
}

pub fn build_eg1_with(n: usize, epsilon: f64, search: &AfSearch) -> Result<QfacFixture> {
    if n == 0 || n > 20 {
        return Err(QdesError::InvalidParameter(format!("N = {n} outside 1..=20")));
    }
    let two_n = 1u64 << n;
    let p = smallest_prime_between(2 * two_n, 4 * two_n).expect("Bertrand");
    let (block, cert) = af_search(p, epsilon, search)?;
    let dim = block.dim();
    let k = 2 * n + 2;
    let mut delta = vec![vec![0; 3]; k];
    let mut us = vec![vec![CMatrix::identity(dim); 3]; k];
    for (i, row) in delta.iter_mut().enumerate() {
        let next = if i <= 2 * n { (i + 1).min(2 * n + 1) } else { 2 * n + 1 };
        row[0] = next;
        row[1] = next;
        row[2] = i;
    }
    for i in 0..n {
        let weight = 1u64 << (n - 1 - i);
        us[i][1] = block.power(weight);
        us[n + i][1] = block.power(weight);
    }
    let mut accept = vec![Projector::full(dim); k];
    accept[2 * n] = Projector::new(dim, [0]).expect("range");
    accept[2 * n + 1] = Projector::empty(dim);
    let phi0 = block.power(p - two_n + 1).apply(&CVector::basis(dim, 0).0)?;
    let automaton = Qfac::with_accepting(ternary(), 0, CVector(phi0), delta, us, accept)?;
    Ok(QfacFixture {
        automaton,
        certificate: cert,
        n,
    })
}

/// QFA with `N + 2` classical states for
/// `L_(N) = {w : |w_{0,1}| ≤ N − 1} ∪ {w : |w_{0,1}| = N, |w|_0 ≠ N/2}`.
pub fn build_egadd(n: usize, epsilon: f64) -> Result<Qfac> {
    Ok(build_egadd_with(n, epsilon, &AfSearch::default())?.automaton)
}

pub fn build_egadd_with(n: usize, epsilon: f64, search: &AfSearch) -> Result<QfacFixture> {
    if n < 2 || !n.is_multiple_of(2) || n > 1000 {
        return Err(QdesError::InvalidParameter(format!("N = {n} must be even and at least 2")));
    }
    let nn = (n * n) as u64;
    let p = smallest_prime_between(nn, 2 * nn).expect("Bertrand");
    let (block, cert) = af_search(p, epsilon, search)?;
    let dim = block.dim();
    let half = (n / 2) as u64;
    let k = n + 2;
    let up = block.power(half);
    let down = block.power(p - half);
    let mut delta = vec![vec![0; 3]; k];
    for (i, row) in delta.iter_mut().enumerate() {
        let next = (i + 1).min(n + 1);
        row[0] = next;
        row[1] = next;
        row[2] = i;
    }
    let us = vec![vec![up.clone(), down.clone(), CMatrix::identity(dim)]; k];
    let mut accept = vec![Projector::full(dim); k];
    accept[n] = Projector::new(dim, [0]).expect("range").complement();
    accept[n + 1] = Projector::empty(dim);
    let automaton = Qfac::with_accepting(ternary(), 0, CVector::basis(dim, 0), delta, us, accept)?;
    Ok(QfacFixture {
        automaton,
        certificate: cert,
        n,
    })
}

/// The interval `[1 − λ^{1/(N+1)}, 1 − λ^{1/N})` of admissible `r`.
pub fn eg2_interval(n: usize, lambda: f64) -> (f64, f64) {
    let lo = 1.0 - lambda.powf(1.0 / (n as f64 + 1.0));
    let hi = 1.0 - lambda.powf(1.0 / n as f64);
    (lo, hi)
}

pub fn eg2_r(n: usize, lambda: f64) -> f64 {
    let (lo, hi) = eg2_interval(n, lambda);
    0.5 * (lo + hi)
}

/// Three-state measure-many QFA with `L(s) = (1 − r)^{|s|_0}`, `r` the
/// midpoint of the admissible interval.
pub fn build_eg2(n: usize, lambda: f64) -> Result<MmQfa> {
    if n == 0 {
        return Err(QdesError::InvalidParameter("N must be positive".into()));
    }
    if !(0.0..1.0).contains(&lambda) {
        return Err(QdesError::InvalidParameter(format!("lambda {lambda} outside [0, 1)")));
    }
    build_eg2_r(eg2_r(n, lambda))
}

/// Same automaton for an explicit `r ∈ [0, 1]`.
pub fn build_eg2_r(r: f64) -> Result<MmQfa> {
    if !(0.0..=1.0).contains(&r) {
        return Err(QdesError::InvalidParameter(format!("r = {r} outside [0, 1]")));
    }
    let c0 = vec![C64::new((1.0 - r).sqrt(), 0.0), C64::new(r.sqrt(), 0.0), ZERO];
    let u0 = complete_unitary(3, &[(0, c0)])?;
    let end = complete_unitary(3, &[(0, CVector::basis(3, 2).0)])?;
    MmQfa::new(
        Alphabet::new(["0", "1"]).expect("alphabet"),
        vec![u0, CMatrix::identity(3)],
        end,
        CVector::basis(3, 0),
        Projector::new(3, [2])?,
        Projector::new(3, [1])?,
        Projector::new(3, [0])?,
    )
}

/// Redirects every transition on symbol `2` to `dead`, which must reject
/// identically.
pub fn build_spec_variant(fixture: &Qfac, dead: usize) -> Result<Qfac> {
    if dead >= fixture.classical_states() {
        return Err(QdesError::InvalidParameter(format!("classical state {dead} out of range")));
    }
    if !fixture.accept(dead).indices().is_empty() {
        return Err(QdesError::InvalidParameter(format!(
            "classical state {dead} does not reject identically"
        )));
    }
    let two = fixture
        .alphabet()
        .index_of("2")
        .ok_or_else(|| QdesError::UnknownSymbol("2".into()))?;
    fixture.retarget_symbol(two, dead)
}

/// Replaces `U(1) = I` by the completion of `U(1)|q₀⟩ = |q₁⟩`.
pub fn build_eg2_spec(m: &MmQfa) -> Result<MmQfa> {
    let one = m
        .alphabet()
        .index_of("1")
        .ok_or_else(|| QdesError::UnknownSymbol("1".into()))?;
    let u1 = complete_unitary(m.dim(), &[(0, CVector::basis(m.dim(), 1).0)])?;
    m.with_unitary(one, u1)
}

/// DFA for `L(N) = {s ∈ {0,1}* : |s|_0 ≤ N}`: one state per zero count and a
/// sink.
pub fn dfa_bounded_zeros(n: usize) -> Dfa {
    let delta = (0..=n + 1).map(|q| vec![(q + 1).min(n + 1), q]).collect();
    Dfa::new(Alphabet::new(["0", "1"]).expect("alphabet"), delta, 0, 0..=n).expect("valid")
}

/// Builds a DFA over `{0, 1, 2}` by exploring a prefix-tracking state from
/// the initial value; symbol 2 either leaves the state alone or (with
/// `two_kills`) leads to a rejecting sink.
fn tracking_dfa<S, F, A>(start: S, step: F, accepting: A, two_kills: bool) -> Dfa
where
    S: Clone + Eq + std::hash::Hash,
    F: Fn(&S, usize) -> S,
    A: Fn(&S) -> bool,
{
    let mut ids: HashMap<S, usize> = HashMap::new();
    let mut states = vec![start.clone()];
    ids.insert(start, 0);
    let mut delta: Vec<Vec<usize>> = Vec::new();
    let mut i = 0;
    while i < states.len() {
        let s = states[i].clone();
        let mut row = Vec::with_capacity(3);
        for sym in 0..2 {
            let t = step(&s, sym);
            let next = ids.len();
            let id = *ids.entry(t.clone()).or_insert_with(|| {
                states.push(t);
                next
            });
            row.push(id);
        }
        row.push(i);
        delta.push(row);
        i += 1;
    }
    let mut accepting_set: Vec<usize> = (0..states.len()).filter(|&q| accepting(&states[q])).collect();
    if two_kills {
        let sink = states.len();
        for row in delta.iter_mut() {
            row[2] = sink;
        }
        delta.push(vec![sink; 3]);
        accepting_set.retain(|&q| q != sink);
    }
    Dfa::new(ternary(), delta, 0, accepting_set).expect("valid by construction")
}

/// Prefix-sum tracking DFA for `L^(N)`: the state is the number of 0/1
/// symbols read (capped at `2N + 1`) and the weighted sum so far.
pub fn dfa_eg1_language(n: usize) -> Dfa {
    let two_n = 1u64 << n;
    tracking_dfa(
        (0usize, 0u64),
        move |&(i, v), sym| {
            if i >= 2 * n {
                return (2 * n + 1, 0);
            }
            let pos = i % n;
            let w = if sym == 1 { 1u64 << (n - 1 - pos) } else { 0 };
            (i + 1, v + w)
        },
        move |&(i, v)| i < 2 * n || (i == 2 * n && v == two_n - 1),
        false,
    )
}

/// Counting DFA for `L_(N)`: the state is the number of 0/1 symbols read
/// (capped at `N + 1`) and the number of zeros among them. With
/// `two_kills`, the language is `L_(N) ∩ {0,1}*`.
pub fn dfa_egadd_language(n: usize, two_kills: bool) -> Dfa {
    tracking_dfa(
        (0usize, 0usize),
        move |&(i, z), sym| {
            if i >= n {
                return (n + 1, 0);
            }
            (i + 1, z + usize::from(sym == 0))
        },
        move |&(i, z)| i < n || (i == n && 2 * z != n),
        two_kills,
    )
}

/// Smallest `k ≥ 1` at which the state after `sσ^k` is back within `tol`
/// (in norm) of the state after `s`, searching up to `cap`. The acceptance
/// probability then returns too, to within `2·tol`. Looking at the
/// probability alone would stop early on symmetric automata, e.g. whenever
/// `L(0^t) = L(0^{-t})`.
pub fn fact2_witness(m: &MoQfa, s: &Word, sigma: &str, tol: f64, cap: usize) -> Result<usize> {
    let sym = m
        .alphabet()
        .index_of(sigma)
        .ok_or_else(|| QdesError::UnknownSymbol(sigma.to_string()))?;
    let base = m.alphabet().encode(s)?;
    let start = m.final_state(&base);
    let mut psi = start.clone();
    let u = m.unitary(sym);
    for k in 1..=cap {
        psi = u.apply(&psi)?;
        let gap: f64 = psi.iter().zip(&start).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        if gap <= tol {
            return Ok(k);
        }
    }
    Err(QdesError::SearchFailed(format!(
        "no return within {cap} repetitions of `{sigma}` at tolerance {tol:e}"
    )))
}

/// Cut-point, isolation radius and error bound used by the control
/// instances. Fixture values are 0, 1 or at least `1 − ε = 0.8` on members
/// and at most `ε` off them, so `λ ± ρ` clears both bands.
pub const EXAMPLE_LAMBDA: f64 = 0.5;
pub const EXAMPLE_RHO: f64 = 0.25;
pub const EXAMPLE_EPSILON: f64 = 0.2;

/// Plant, target and event partition of a supervisory control example.
#[derive(Clone, Debug)]
pub struct ControlInstance {
    pub name: &'static str,
    pub plant: QfaModel,
    pub target: QfaModel,
    pub spec: ControlSpec,
}

fn ternary_spec() -> Result<ControlSpec> {
    ControlSpec::from_partition(ternary(), &["2"], &["0", "1"], EXAMPLE_LAMBDA)?.with_rho(EXAMPLE_RHO)
}

/// Binary-sum plant; the target sends symbol 2 to the rejecting sink.
pub fn example4(n: usize) -> Result<ControlInstance> {
    let plant = build_eg1(n, EXAMPLE_EPSILON)?;
    let target = build_spec_variant(&plant, 2 * n + 1)?;
    Ok(ControlInstance {
        name: "example4",
        plant: plant.into(),
        target: target.into(),
        spec: ternary_spec()?,
    })
}

/// Balanced-zeros plant; the target sends symbol 2 to the rejecting sink.
pub fn example5(n: usize) -> Result<ControlInstance> {
    let plant = build_egadd(n, EXAMPLE_EPSILON)?;
    let target = build_spec_variant(&plant, n + 1)?;
    Ok(ControlInstance {
        name: "example5",
        plant: plant.into(),
        target: target.into(),
        spec: ternary_spec()?,
    })
}

/// Bounded-zeros plant with `0` uncontrollable; the target rejects on `1`.
pub fn example6(n: usize) -> Result<ControlInstance> {
    let plant = build_eg2(n, EXAMPLE_LAMBDA)?;
    let target = build_eg2_spec(&plant)?;
    let spec = ControlSpec::from_partition(plant.alphabet().clone(), &["1"], &["0"], EXAMPLE_LAMBDA)?;
    Ok(ControlInstance {
        name: "example6",
        plant: plant.into(),
        target: target.into(),
        spec,
    })
}

/// The marking example: the balanced-zeros plant with the target
/// `K = L_(N) ∩ {0,1}*` realized by the same spec variant as
/// [`example5`], and an isolated cut-point.
pub fn example7(n: usize) -> Result<ControlInstance> {
    Ok(ControlInstance {
        name: "example7",
        ..example5(n)?
    })
}
