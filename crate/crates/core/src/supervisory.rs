//! Supervisory control over quantum languages.
//!
//! Cut-point classification, bounded prefix closure, the constructive
//! supervisor and its closed loop, admissibility and controllability checks
//! (exhaustive to a horizon, and exact through bilinear-machine
//! equivalence), and marked languages with the nonblocking test.
//!
//! Every check quantifying over `Σ*` is bounded by an explicit horizon,
//! except [`decide_controllability`], which is exact.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

use serde::Serialize;

use crate::alphabet::{Alphabet, Word};
use crate::automata::{Dfa, MmQfa, MoQfa, Qfac, PROB_TOL};
use crate::blm::{compile_mm_to_rblm, compile_qfac_to_rblm, LinearMachine, MachineExpr, Rblm};
use crate::equivalence::find_difference;
use crate::error::{QdesError, Result};
use crate::language::{clamp_prob, Levels, QuantumLanguage};

/// Slack used when gating on `f ≥ λ + ρ`, so that values computed as
/// `λ + ρ` up to rounding are not dropped.
pub const GATE_TOL: f64 = 1e-12;

/// Tolerance for the span reductions inside [`decide_controllability`].
pub const REDUCE_TOL: f64 = 1e-10;

/// Largest number of table entries a horizon-bounded check may allocate.
pub const TABLE_CAP: u128 = 60_000_000;

fn table_guard(k: usize, max_len: usize) -> Result<()> {
    let words: u128 = (0..=max_len).map(|l| (k as u128).pow(l as u32)).sum();
    if words > TABLE_CAP {
        return Err(QdesError::EnumerationCap { words, cap: TABLE_CAP });
    }
    Ok(())
}

fn levels_of<L: QuantumLanguage + ?Sized>(l: &L, max_len: usize) -> Result<Levels> {
    table_guard(l.alphabet().len(), max_len)?;
    Ok(l.levels(max_len))
}

fn same_alphabet(a: &Alphabet, b: &Alphabet) -> Result<()> {
    if a != b {
        return Err(QdesError::AlphabetMismatch(format!("{:?} vs {:?}", a.symbols(), b.symbols())));
    }
    Ok(())
}

/// Partition of the events into controllable and uncontrollable ones, with
/// the cut-point parameters.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlSpec {
    alphabet: Alphabet,
    uncontrollable: BTreeSet<usize>,
    lambda: f64,
    rho: Option<f64>,
    mu: Option<f64>,
}

impl ControlSpec {
    /// Every symbol not listed as uncontrollable is controllable.
    pub fn new<S: AsRef<str>>(alphabet: Alphabet, uncontrollable: &[S], lambda: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return Err(QdesError::InvalidParameter(format!("cut-point {lambda} outside [0, 1)")));
        }
        let mut uc = BTreeSet::new();
        for s in uncontrollable {
            let i = alphabet
                .index_of(s.as_ref())
                .ok_or_else(|| QdesError::UnknownSymbol(s.as_ref().to_string()))?;
            uc.insert(i);
        }
        Ok(ControlSpec {
            alphabet,
            uncontrollable: uc,
            lambda,
            rho: None,
            mu: None,
        })
    }

    /// Both halves given explicitly; they must be disjoint and cover `Σ`.
    pub fn from_partition<S: AsRef<str>>(
        alphabet: Alphabet,
        controllable: &[S],
        uncontrollable: &[S],
        lambda: f64,
    ) -> Result<Self> {
        let c: BTreeSet<&str> = controllable.iter().map(|s| s.as_ref()).collect();
        let u: BTreeSet<&str> = uncontrollable.iter().map(|s| s.as_ref()).collect();
        if let Some(s) = c.intersection(&u).next() {
            return Err(QdesError::InvalidParameter(format!("`{s}` is both controllable and uncontrollable")));
        }
        for s in c.iter().chain(&u) {
            if !alphabet.contains(s) {
                return Err(QdesError::UnknownSymbol(s.to_string()));
            }
        }
        if let Some(s) = alphabet.symbols().iter().find(|s| !c.contains(s.as_str()) && !u.contains(s.as_str())) {
            return Err(QdesError::InvalidParameter(format!("`{s}` is in neither event class")));
        }
        Self::new(alphabet, uncontrollable, lambda)
    }

    pub fn with_rho(mut self, rho: f64) -> Result<Self> {
        if rho.is_nan() || rho <= 0.0 || self.lambda + rho > 1.0 {
            return Err(QdesError::InvalidParameter(format!(
                "isolation radius {rho} must be positive with λ + ρ ≤ 1"
            )));
        }
        self.rho = Some(rho);
        Ok(self)
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        if !(mu >= self.lambda && mu < 1.0) {
            return Err(QdesError::InvalidParameter(format!("upper cut-point {mu} must lie in [λ, 1)")));
        }
        self.mu = Some(mu);
        Ok(self)
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn rho(&self) -> Option<f64> {
        self.rho
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu
    }

    fn require_rho(&self) -> Result<f64> {
        self.rho
            .ok_or_else(|| QdesError::InvalidParameter("an isolation radius ρ is required".into()))
    }

    pub fn is_uncontrollable(&self, sym: usize) -> bool {
        self.uncontrollable.contains(&sym)
    }

    /// Uncontrollable symbol indices in alphabet order.
    pub fn uncontrollable(&self) -> impl Iterator<Item = usize> + '_ {
        self.uncontrollable.iter().copied()
    }

    pub fn controllable(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.alphabet.len()).filter(|i| !self.uncontrollable.contains(i))
    }

    pub fn uncontrollable_symbols(&self) -> Vec<String> {
        self.uncontrollable().map(|i| self.alphabet.symbol(i).to_string()).collect()
    }

    pub fn controllable_symbols(&self) -> Vec<String> {
        self.controllable().map(|i| self.alphabet.symbol(i).to_string()).collect()
    }
}

/// `L(w) > λ`, strictly.
pub fn cutpoint_member<L: QuantumLanguage + ?Sized>(l: &L, w: &Word, lambda: f64) -> Result<bool> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(QdesError::InvalidParameter(format!("cut-point {lambda} outside [0, 1)")));
    }
    Ok(l.eval(w)? > lambda)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CutClass {
    Above,
    NotAbove,
    /// Within `tol` of the cut-point: too close to call.
    Ambiguous,
}

pub fn classify_cutpoint(value: f64, lambda: f64, tol: f64) -> CutClass {
    if (value - lambda).abs() <= tol {
        CutClass::Ambiguous
    } else if value > lambda {
        CutClass::Above
    } else {
        CutClass::NotAbove
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Isolation {
    In,
    Out,
    /// Strictly inside `(λ − ρ, λ + ρ)`.
    Violation,
}

pub fn isolated_classify_value(f: f64, lambda: f64, rho: f64) -> Isolation {
    if f >= lambda + rho - GATE_TOL {
        Isolation::In
    } else if f <= lambda - rho + GATE_TOL {
        Isolation::Out
    } else {
        Isolation::Violation
    }
}

pub fn isolated_classify<L: QuantumLanguage + ?Sized>(l: &L, w: &Word, lambda: f64, rho: f64) -> Result<Isolation> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(QdesError::InvalidParameter(format!("isolation radius {rho} must be positive")));
    }
    Ok(isolated_classify_value(l.eval(w)?, lambda, rho))
}

/// `max_{|t| ≤ horizon} K(st)`: a lower bound on the prefix closure, exact
/// when `K` does not increase beyond the horizon.
pub fn prefix_sup<L: QuantumLanguage + ?Sized>(k: &L, s: &Word, horizon: usize) -> Result<f64> {
    let base = k.alphabet().encode(s)?;
    table_guard(k.alphabet().len(), horizon)?;
    let mut best = f64::NEG_INFINITY;
    let mut w = base.clone();
    for t in k.alphabet().words_up_to(horizon) {
        w.truncate(base.len());
        w.extend_from_slice(&t);
        best = best.max(k.prob(&w));
    }
    Ok(best)
}

/// The bounded prefix closure as a language in its own right.
pub struct PrefixClosure<L> {
    inner: L,
    horizon: usize,
}

impl<L: QuantumLanguage> PrefixClosure<L> {
    pub fn new(inner: L, horizon: usize) -> Self {
        PrefixClosure { inner, horizon }
    }
}

impl<L: QuantumLanguage> QuantumLanguage for PrefixClosure<L> {
    fn alphabet(&self) -> &Alphabet {
        self.inner.alphabet()
    }

    fn prob(&self, w: &[usize]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        let mut x = w.to_vec();
        for t in self.inner.alphabet().words_up_to(self.horizon) {
            x.truncate(w.len());
            x.extend_from_slice(&t);
            best = best.max(self.inner.prob(&x));
        }
        best
    }

    fn levels(&self, max_len: usize) -> Levels {
        self.inner.levels(max_len + self.horizon).extension_max(self.horizon)
    }
}

/// A feedback map assigning each history an enablement degree per event.
pub trait Supervisor {
    fn alphabet(&self) -> &Alphabet;

    /// `S(s)(σ)`.
    fn enable(&self, s: &[usize], sym: usize) -> f64;

    /// Table `E` with `E(sσ) = S(s)(σ)` and `E(ε) = 1`.
    fn enablement_levels(&self, max_len: usize) -> Levels {
        Levels::from_fn(self.alphabet().len(), max_len, |w| match w.split_last() {
            None => 1.0,
            Some((&sym, s)) => self.enable(s, sym),
        })
    }
}

impl<T: Supervisor + ?Sized> Supervisor for &T {
    fn alphabet(&self) -> &Alphabet {
        (**self).alphabet()
    }

    fn enable(&self, s: &[usize], sym: usize) -> f64 {
        (**self).enable(s, sym)
    }

    fn enablement_levels(&self, max_len: usize) -> Levels {
        (**self).enablement_levels(max_len)
    }
}

/// Hand-written supervisor from a closure.
pub struct FnSupervisor<F> {
    alphabet: Alphabet,
    f: F,
}

impl<F: Fn(&[usize], usize) -> f64> FnSupervisor<F> {
    pub fn new(alphabet: Alphabet, f: F) -> Self {
        FnSupervisor { alphabet, f }
    }
}

impl<F: Fn(&[usize], usize) -> f64> Supervisor for FnSupervisor<F> {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    fn enable(&self, s: &[usize], sym: usize) -> f64 {
        (self.f)(s, sym)
    }
}

/// The constructive supervisor: uncontrollable events are enabled to the
/// plant's own degree, controllable ones to the target's.
#[derive(Clone, Debug)]
pub struct SupervisorPolicy<P, H> {
    plant: P,
    target: H,
    spec: ControlSpec,
}

impl<P: QuantumLanguage, H: QuantumLanguage> SupervisorPolicy<P, H> {
    pub fn plant(&self) -> &P {
        &self.plant
    }

    pub fn target(&self) -> &H {
        &self.target
    }

    pub fn spec(&self) -> &ControlSpec {
        &self.spec
    }

    /// `S(s)(σ)` by symbol name.
    pub fn enable_word(&self, s: &Word, sigma: &str) -> Result<f64> {
        let sym = self
            .spec
            .alphabet
            .index_of(sigma)
            .ok_or_else(|| QdesError::UnknownSymbol(sigma.to_string()))?;
        let s = self.spec.alphabet.encode(s)?;
        Ok(self.enable(&s, sym))
    }
}

pub fn synthesize_supervisor<P: QuantumLanguage, H: QuantumLanguage>(
    plant: P,
    target: H,
    spec: &ControlSpec,
) -> Result<SupervisorPolicy<P, H>> {
    same_alphabet(plant.alphabet(), spec.alphabet())?;
    same_alphabet(target.alphabet(), spec.alphabet())?;
    Ok(SupervisorPolicy {
        plant,
        target,
        spec: spec.clone(),
    })
}

impl<P: QuantumLanguage, H: QuantumLanguage> Supervisor for SupervisorPolicy<P, H> {
    fn alphabet(&self) -> &Alphabet {
        &self.spec.alphabet
    }

    fn enable(&self, s: &[usize], sym: usize) -> f64 {
        let mut w = s.to_vec();
        w.push(sym);
        if self.spec.is_uncontrollable(sym) {
            self.plant.prob(&w)
        } else {
            self.target.prob(&w)
        }
    }

    fn enablement_levels(&self, max_len: usize) -> Levels {
        let k = self.spec.alphabet.len();
        let p = self.plant.levels(max_len);
        let h = self.target.levels(max_len);
        Levels::from_parent(k, max_len, 1.0, |_, l, code| {
            if self.spec.is_uncontrollable(code % k) {
                p.at(l, code)
            } else {
                h.at(l, code)
            }
        })
    }
}

/// Plant under supervision. Values are memoized per word; the cache is the
/// only mutable state and sits behind a mutex.
pub struct ClosedLoop<P, S> {
    plant: P,
    supervisor: S,
    memo: Mutex<HashMap<Vec<usize>, f64>>,
}

impl<P: QuantumLanguage, S: Supervisor> ClosedLoop<P, S> {
    pub fn new(plant: P, supervisor: S) -> Result<Self> {
        same_alphabet(plant.alphabet(), supervisor.alphabet())?;
        Ok(ClosedLoop {
            plant,
            supervisor,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn plant(&self) -> &P {
        &self.plant
    }

    pub fn supervisor(&self) -> &S {
        &self.supervisor
    }

    /// `L_{S/M}(ε) = 1`, `L_{S/M}(sσ) = min{L_{S/M}(s), L_M(sσ), S(s)(σ)}`.
    pub fn eval_indices(&self, w: &[usize]) -> f64 {
        let mut memo = self.memo.lock().unwrap_or_else(|e| e.into_inner());
        let mut v = 1.0;
        for i in 1..=w.len() {
            let key = &w[..i];
            v = match memo.get(key) {
                Some(&x) => x,
                None => {
                    let x = f64::min(v, f64::min(self.plant.prob(key), self.supervisor.enable(&w[..i - 1], w[i - 1])));
                    memo.insert(key.to_vec(), x);
                    x
                }
            };
        }
        v
    }

    pub fn eval(&self, w: &Word) -> Result<f64> {
        Ok(self.eval_indices(&self.plant.alphabet().encode(w)?))
    }

    pub fn memo_len(&self) -> usize {
        self.memo.lock().map(|m| m.len()).unwrap_or(0)
    }
}

impl<P: QuantumLanguage, S: Supervisor> QuantumLanguage for ClosedLoop<P, S> {
    fn alphabet(&self) -> &Alphabet {
        self.plant.alphabet()
    }

    fn prob(&self, w: &[usize]) -> f64 {
        self.eval_indices(w)
    }

    fn levels(&self, max_len: usize) -> Levels {
        let p = self.plant.levels(max_len);
        let e = self.supervisor.enablement_levels(max_len);
        Levels::from_parent(self.plant.alphabet().len(), max_len, 1.0, |parent, l, code| {
            parent.min(p.at(l, code)).min(e.at(l, code))
        })
    }
}

pub fn closed_loop_eval<P: QuantumLanguage, S: Supervisor>(cl: &ClosedLoop<P, S>, s: &Word) -> Result<f64> {
    cl.eval(s)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdmissibilityViolation {
    pub word: Word,
    pub sigma: String,
    pub plant: f64,
    pub enabled: f64,
}

/// Every `(s, σ)` with `|s| ≤ horizon`, `σ` uncontrollable and
/// `L_M(sσ) > S(s)(σ)`.
pub fn check_admissible<P: QuantumLanguage, S: Supervisor>(
    plant: &P,
    supervisor: &S,
    spec: &ControlSpec,
    horizon: usize,
) -> Result<Vec<AdmissibilityViolation>> {
    same_alphabet(plant.alphabet(), spec.alphabet())?;
    same_alphabet(supervisor.alphabet(), spec.alphabet())?;
    let k = spec.alphabet.len();
    let p = levels_of(plant, horizon + 1)?;
    let e = supervisor.enablement_levels(horizon + 1);
    let mut out = Vec::new();
    for l in 0..=horizon {
        for code in 0..p.level(l).len() {
            for sym in spec.uncontrollable() {
                let child = code * k + sym;
                let (pv, ev) = (p.at(l + 1, child), e.at(l + 1, child));
                if pv > ev {
                    out.push(AdmissibilityViolation {
                        word: spec.alphabet.decode(&crate::language::decode(k, l, code)),
                        sigma: spec.alphabet.symbol(sym).to_string(),
                        plant: pv,
                        enabled: ev,
                    });
                }
            }
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum ControllabilityVerdict {
    Holds,
    /// `min{L_H(s), L_M(sσ)} = lhs > rhs = L_H(sσ)`.
    CounterexampleAt {
        word: Word,
        sigma: String,
        lhs: f64,
        rhs: f64,
    },
}

impl ControllabilityVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, ControllabilityVerdict::Holds)
    }
}

/// `min{L_H(s), L_M(sσ)} ≤ L_H(sσ) + tol` for all `|s| ≤ horizon` and
/// uncontrollable `σ`. The first failure in length-lexicographic order of
/// `s`, then alphabet order of `σ`, is reported.
pub fn check_controllability_exhaustive<H: QuantumLanguage + ?Sized, P: QuantumLanguage + ?Sized>(
    target: &H,
    plant: &P,
    spec: &ControlSpec,
    horizon: usize,
    tol: f64,
) -> Result<ControllabilityVerdict> {
    same_alphabet(target.alphabet(), spec.alphabet())?;
    same_alphabet(plant.alphabet(), spec.alphabet())?;
    let k = spec.alphabet.len();
    let h = levels_of(target, horizon + 1)?;
    let m = levels_of(plant, horizon + 1)?;
    for l in 0..=horizon {
        for code in 0..h.level(l).len() {
            for sym in spec.uncontrollable() {
                let child = code * k + sym;
                let lhs = h.at(l, code).min(m.at(l + 1, child));
                let rhs = h.at(l + 1, child);
                if lhs > rhs + tol {
                    return Ok(ControllabilityVerdict::CounterexampleAt {
                        word: spec.alphabet.decode(&crate::language::decode(k, l, code)),
                        sigma: spec.alphabet.symbol(sym).to_string(),
                        lhs,
                        rhs,
                    });
                }
            }
        }
    }
    Ok(ControllabilityVerdict::Holds)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Precondition {
    /// `L_H(s) < L_H(sσ)`.
    TargetIncreases,
    /// `L_M(sσ) < L_H(sσ)`.
    TargetAbovePlant,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PreconditionFailure {
    pub kind: Precondition,
    pub word: Word,
    pub sigma: String,
    pub lhs: f64,
    pub rhs: f64,
}

/// Checks, to a horizon, the two inequalities under which the exact decision
/// is equivalent to the controllability condition: `L_H(s) ≥ L_H(sσ)` and
/// `L_M(sσ) ≥ L_H(sσ)` for uncontrollable `σ`.
pub fn check_decision_preconditions<H: QuantumLanguage + ?Sized, P: QuantumLanguage + ?Sized>(
    target: &H,
    plant: &P,
    spec: &ControlSpec,
    horizon: usize,
    tol: f64,
) -> Result<Option<PreconditionFailure>> {
    same_alphabet(target.alphabet(), spec.alphabet())?;
    same_alphabet(plant.alphabet(), spec.alphabet())?;
    let k = spec.alphabet.len();
    let h = levels_of(target, horizon + 1)?;
    let m = levels_of(plant, horizon + 1)?;
    for l in 0..=horizon {
        for code in 0..h.level(l).len() {
            for sym in spec.uncontrollable() {
                let child = code * k + sym;
                let hs = h.at(l + 1, child);
                let fail = if h.at(l, code) + tol < hs {
                    Some((Precondition::TargetIncreases, h.at(l, code)))
                } else if m.at(l + 1, child) + tol < hs {
                    Some((Precondition::TargetAbovePlant, m.at(l + 1, child)))
                } else {
                    None
                };
                if let Some((kind, lhs)) = fail {
                    return Ok(Some(PreconditionFailure {
                        kind,
                        word: spec.alphabet.decode(&crate::language::decode(k, l, code)),
                        sigma: spec.alphabet.symbol(sym).to_string(),
                        lhs,
                        rhs: hs,
                    }));
                }
            }
        }
    }
    Ok(None)
}

/// A plant or target model the exact decision can compile.
#[derive(Clone, Debug)]
pub enum QfaModel {
    Dfa(Dfa),
    Mo(MoQfa),
    Mm(MmQfa),
    Qfac(Qfac),
    /// Taken to be a probability-valued machine; values are clamped.
    Rblm(Rblm),
}

impl QfaModel {
    pub fn compile(&self) -> Result<Rblm> {
        match self {
            QfaModel::Dfa(d) => compile_qfac_to_rblm(&d.to_qfac()),
            QfaModel::Mo(m) => compile_qfac_to_rblm(&Qfac::from_mo(m)),
            QfaModel::Mm(m) => compile_mm_to_rblm(m),
            QfaModel::Qfac(m) => compile_qfac_to_rblm(m),
            QfaModel::Rblm(b) => Ok(b.clone()),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            QfaModel::Dfa(_) => "dfa",
            QfaModel::Mo(_) => "mo-qfa",
            QfaModel::Mm(_) => "mm-qfa",
            QfaModel::Qfac(_) => "qfac",
            QfaModel::Rblm(_) => "rblm",
        }
    }
}

impl From<crate::automata::Automaton> for QfaModel {
    fn from(a: crate::automata::Automaton) -> Self {
        use crate::automata::Automaton;
        match a {
            Automaton::Dfa(m) => QfaModel::Dfa(m),
            Automaton::Mo(m) => QfaModel::Mo(m),
            Automaton::Mm(m) => QfaModel::Mm(m),
            Automaton::Qfac(m) => QfaModel::Qfac(m),
            Automaton::Rblm(m) => QfaModel::Rblm(m),
        }
    }
}

impl From<Dfa> for QfaModel {
    fn from(m: Dfa) -> Self {
        QfaModel::Dfa(m)
    }
}

impl From<MoQfa> for QfaModel {
    fn from(m: MoQfa) -> Self {
        QfaModel::Mo(m)
    }
}

impl From<MmQfa> for QfaModel {
    fn from(m: MmQfa) -> Self {
        QfaModel::Mm(m)
    }
}

impl From<Qfac> for QfaModel {
    fn from(m: Qfac) -> Self {
        QfaModel::Qfac(m)
    }
}

impl From<Rblm> for QfaModel {
    fn from(m: Rblm) -> Self {
        QfaModel::Rblm(m)
    }
}

impl QuantumLanguage for QfaModel {
    fn alphabet(&self) -> &Alphabet {
        match self {
            QfaModel::Dfa(m) => m.alphabet(),
            QfaModel::Mo(m) => m.alphabet(),
            QfaModel::Mm(m) => m.alphabet(),
            QfaModel::Qfac(m) => m.alphabet(),
            QfaModel::Rblm(m) => m.alphabet(),
        }
    }

    fn prob(&self, w: &[usize]) -> f64 {
        match self {
            QfaModel::Dfa(m) => m.prob(w),
            QfaModel::Mo(m) => m.prob(w),
            QfaModel::Mm(m) => m.prob(w),
            QfaModel::Qfac(m) => m.prob(w),
            QfaModel::Rblm(m) => clamp_prob(m.value_complex(w).re, PROB_TOL),
        }
    }

    fn levels(&self, max_len: usize) -> Levels {
        match self {
            QfaModel::Dfa(m) => m.levels(max_len),
            QfaModel::Mo(m) => m.levels(max_len),
            QfaModel::Mm(m) => m.levels(max_len),
            QfaModel::Qfac(m) => m.levels(max_len),
            QfaModel::Rblm(m) => Levels::from_states(
                m.alphabet().len(),
                max_len,
                LinearMachine::initial(m),
                |v, sym| LinearMachine::step(m, sym, v),
                |v| clamp_prob(LinearMachine::output(m, v).re, PROB_TOL),
            ),
        }
    }
}

/// Exact controllability decision.
///
/// For each uncontrollable `σ` the condition
/// `min{L_H(s), L_M(sσ)} ≤ L_H(sσ)` for all `s` is, under the two
/// inequalities checked by [`check_decision_preconditions`], equivalent to
/// `(L_H(s) − L_H(sσ))(L_M(sσ) − L_H(sσ)) = 0`, i.e. to the equality of the
/// word functions of `(H ⊗ M_σ) ⊕ (H_σ ⊗ H_σ)` and `(H_σ ⊗ M_σ) ⊕ (H_σ ⊗ H)`,
/// where `X_σ` reads one more `σ` after the input. The sums are evaluated
/// lazily over span-reduced factors. The reported counterexample is the
/// least `(s, σ)` over all `σ`, with the sides of the inequality evaluated
/// on the models themselves.
pub fn decide_controllability(
    target: &QfaModel,
    plant: &QfaModel,
    spec: &ControlSpec,
    tol: f64,
) -> Result<ControllabilityVerdict> {
    let alphabet = spec.alphabet();
    for m in [target, plant] {
        if !m.alphabet().same_set(alphabet) {
            return Err(QdesError::AlphabetMismatch(format!(
                "{:?} vs {:?}",
                m.alphabet().symbols(),
                alphabet.symbols()
            )));
        }
    }
    let h = Arc::new(target.compile()?.aligned_to(alphabet)?.reduce(REDUCE_TOL));
    let m = plant.compile()?.aligned_to(alphabet)?.reduce(REDUCE_TOL);
    let mut best: Option<(Vec<usize>, usize)> = None;
    for sym in spec.uncontrollable() {
        let h_s = Arc::new(h.with_suffix(sym)?.reduce(REDUCE_TOL));
        let m_s = Arc::new(m.with_suffix(sym)?.reduce(REDUCE_TOL));
        let leaf = MachineExpr::shared;
        let a = MachineExpr::sum(
            MachineExpr::tensor(leaf(&h), leaf(&m_s))?,
            MachineExpr::tensor(leaf(&h_s), leaf(&h_s))?,
        )?;
        let b = MachineExpr::sum(
            MachineExpr::tensor(leaf(&h_s), leaf(&m_s))?,
            MachineExpr::tensor(leaf(&h_s), leaf(&h))?,
        )?;
        if let (Some((w, _, _)), _) = find_difference(&a, &b, tol)? {
            let better = match &best {
                None => true,
                Some((bw, _)) => (w.len(), &w) < (bw.len(), bw),
            };
            if better {
                best = Some((w, sym));
            }
        }
    }
    Ok(match best {
        None => ControllabilityVerdict::Holds,
        Some((w, sym)) => {
            let t = target_in(target, alphabet)?;
            let p = target_in(plant, alphabet)?;
            let mut ws = w.clone();
            ws.push(sym);
            ControllabilityVerdict::CounterexampleAt {
                word: alphabet.decode(&w),
                sigma: alphabet.symbol(sym).to_string(),
                lhs: t.prob(&w).min(p.prob(&ws)),
                rhs: t.prob(&ws),
            }
        }
    })
}

fn target_in<'a>(m: &'a QfaModel, alphabet: &Alphabet) -> Result<crate::language::Reindexed<&'a QfaModel>> {
    crate::language::Reindexed::new(m, alphabet.clone())
}

/// `min{a, b}` through the absolute-value identity used to turn the
/// controllability condition into an equality of word functions.
pub fn min_via_abs(a: f64, b: f64) -> f64 {
    (a + b - (a - b).abs()) / 2.0
}

/// `L_{M,a}`: the plant language gated to words with `L_M(s) ≥ λ + ρ`.
pub struct MarkedLanguage<L> {
    inner: L,
    lambda: f64,
    rho: f64,
}

impl<L> MarkedLanguage<L> {
    fn gate(&self, v: f64) -> f64 {
        if isolated_classify_value(v, self.lambda, self.rho) == Isolation::In {
            v
        } else {
            0.0
        }
    }
}

pub fn marked_language<L: QuantumLanguage>(l: L, lambda: f64, rho: f64) -> Result<MarkedLanguage<L>> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(QdesError::InvalidParameter(format!("isolation radius {rho} must be positive")));
    }
    Ok(MarkedLanguage { inner: l, lambda, rho })
}

impl<L: QuantumLanguage> QuantumLanguage for MarkedLanguage<L> {
    fn alphabet(&self) -> &Alphabet {
        self.inner.alphabet()
    }

    fn prob(&self, w: &[usize]) -> f64 {
        self.gate(self.inner.prob(w))
    }

    fn levels(&self, max_len: usize) -> Levels {
        self.inner.levels(max_len).map(|v| self.gate(v))
    }
}

/// `L_{S/M,a}(s) = min{L_M(s), L_{S/M}(s)}` when `L_M(s) ≥ λ + ρ`, else 0.
pub struct ClosedLoopMarked<'a, P, S> {
    cl: &'a ClosedLoop<P, S>,
    lambda: f64,
    rho: f64,
}

pub fn closed_loop_marked<P: QuantumLanguage, S: Supervisor>(
    cl: &ClosedLoop<P, S>,
    lambda: f64,
    rho: f64,
) -> Result<ClosedLoopMarked<'_, P, S>> {
    if rho.is_nan() || rho <= 0.0 {
        return Err(QdesError::InvalidParameter(format!("isolation radius {rho} must be positive")));
    }
    Ok(ClosedLoopMarked { cl, lambda, rho })
}

impl<P, S> ClosedLoopMarked<'_, P, S> {
    fn combine(&self, plant: f64, closed: f64) -> f64 {
        if isolated_classify_value(plant, self.lambda, self.rho) == Isolation::In {
            plant.min(closed)
        } else {
            0.0
        }
    }
}

impl<P: QuantumLanguage, S: Supervisor> QuantumLanguage for ClosedLoopMarked<'_, P, S> {
    fn alphabet(&self) -> &Alphabet {
        self.cl.alphabet()
    }

    fn prob(&self, w: &[usize]) -> f64 {
        self.combine(self.cl.plant.prob(w), self.cl.eval_indices(w))
    }

    fn levels(&self, max_len: usize) -> Levels {
        let p = self.cl.plant.levels(max_len);
        p.zip(&self.cl.levels(max_len), |a, b| self.combine(a, b))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockingWitness {
    pub word: Word,
    pub closed_loop: f64,
    pub best_marked_extension: f64,
}

/// First `s` with `|s| ≤ horizon` where `L_{S/M}(s)` differs by more than
/// `tol` from `max_{|t| ≤ horizon} L_{S/M,a}(st)`.
pub fn find_blocking<P: QuantumLanguage, S: Supervisor>(
    cl: &ClosedLoop<P, S>,
    lambda: f64,
    rho: f64,
    horizon: usize,
    tol: f64,
) -> Result<Option<BlockingWitness>> {
    let marked = closed_loop_marked(cl, lambda, rho)?;
    table_guard(cl.alphabet().len(), 2 * horizon)?;
    let closed = cl.levels(horizon);
    let sup = marked.levels(2 * horizon).extension_max(horizon);
    for (w, v) in closed.iter() {
        let best = sup.get(&w);
        if (v - best).abs() > tol {
            return Ok(Some(BlockingWitness {
                word: cl.alphabet().decode(&w),
                closed_loop: v,
                best_marked_extension: best,
            }));
        }
    }
    Ok(None)
}

/// `L_{S/M} = pr(L_{S/M,a})` on every word up to the horizon, with the
/// closure taken over extensions up to the same horizon.
pub fn check_nonblocking<P: QuantumLanguage, S: Supervisor>(
    cl: &ClosedLoop<P, S>,
    lambda: f64,
    rho: f64,
    horizon: usize,
    tol: f64,
) -> Result<bool> {
    Ok(find_blocking(cl, lambda, rho, horizon, tol)?.is_none())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MarkingForm {
    /// `min{pr(K)(s), L_M(sσ)} ≤ pr(K)(sσ)` and
    /// `K(s) = min{pr(K)(s), L_{M,a}(s)}`.
    Quantum,
    /// `pr(K)Σ_uc ∩ L_M⁰ ⊆ pr(K)` and `K = pr(K) ∩ L_M^{λ,ρ}`, for
    /// 0/1-valued `K`.
    Crisp,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum MarkingVerdict {
    Holds {
        form: MarkingForm,
    },
    FailureAt {
        form: MarkingForm,
        condition: u8,
        word: Word,
        sigma: Option<String>,
        lhs: f64,
        rhs: f64,
    },
}

impl MarkingVerdict {
    pub fn holds(&self) -> bool {
        matches!(self, MarkingVerdict::Holds { .. })
    }
}

/// Checks the two conditions for a marked target `K` over words up to the
/// horizon. `pr(K)` is the closure over extensions up to the same horizon.
/// A `K` whose values are all within `tol` of 0 or 1 is checked in the
/// crisp form, anything else in the quantum form.
pub fn check_marking_conditions<K: QuantumLanguage + ?Sized, P: QuantumLanguage + ?Sized>(
    k_lang: &K,
    plant: &P,
    spec: &ControlSpec,
    horizon: usize,
    tol: f64,
) -> Result<MarkingVerdict> {
    same_alphabet(k_lang.alphabet(), spec.alphabet())?;
    same_alphabet(plant.alphabet(), spec.alphabet())?;
    let (lambda, rho) = (spec.lambda(), spec.require_rho()?);
    let n = spec.alphabet.len();
    table_guard(n, 2 * horizon + 1)?;
    let kl = k_lang.levels(2 * horizon + 1);
    let pr = kl.extension_max(horizon);
    let m = plant.levels(horizon + 1);
    let crisp = kl
        .iter()
        .take_while(|(w, _)| w.len() <= horizon + 1)
        .all(|(_, v)| v.abs() <= tol || (v - 1.0).abs() <= tol);
    let form = if crisp { MarkingForm::Crisp } else { MarkingForm::Quantum };
    let word = |l: usize, code: usize| spec.alphabet.decode(&crate::language::decode(n, l, code));
    let is_one = |v: f64| v > 0.5;
    let marked = |v: f64| isolated_classify_value(v, lambda, rho) == Isolation::In;

    for l in 0..=horizon {
        for code in 0..m.level(l).len() {
            for sym in spec.uncontrollable() {
                let child = code * n + sym;
                let (lhs, rhs, bad) = if crisp {
                    let ok = !(is_one(pr.at(l, code)) && m.at(l + 1, child) > tol) || is_one(pr.at(l + 1, child));
                    (pr.at(l, code), pr.at(l + 1, child), !ok)
                } else {
                    let lhs = pr.at(l, code).min(m.at(l + 1, child));
                    (lhs, pr.at(l + 1, child), lhs > pr.at(l + 1, child) + tol)
                };
                if bad {
                    return Ok(MarkingVerdict::FailureAt {
                        form,
                        condition: 1,
                        word: word(l, code),
                        sigma: Some(spec.alphabet.symbol(sym).to_string()),
                        lhs,
                        rhs,
                    });
                }
            }
        }
    }
    for l in 0..=horizon {
        for code in 0..m.level(l).len() {
            let kv = kl.at(l, code);
            let (rhs, bad) = if crisp {
                let expect = is_one(pr.at(l, code)) && marked(m.at(l, code));
                (f64::from(u8::from(expect)), is_one(kv) != expect)
            } else {
                let gated = if marked(m.at(l, code)) { m.at(l, code) } else { 0.0 };
                let rhs = pr.at(l, code).min(gated);
                (rhs, (kv - rhs).abs() > tol)
            };
            if bad {
                return Ok(MarkingVerdict::FailureAt {
                    form,
                    condition: 2,
                    word: word(l, code),
                    sigma: None,
                    lhs: kv,
                    rhs,
                });
            }
        }
    }
    Ok(MarkingVerdict::Holds { form })
}

/// First word up to the table's length where membership in the two
/// cut-point languages differs.
pub fn cutpoint_disagreement(a: &Levels, b: &Levels, lambda: f64) -> Option<(Vec<usize>, f64, f64)> {
    a.iter().find_map(|(w, x)| {
        let y = b.get(&w);
        ((x > lambda) != (y > lambda)).then_some((w, x, y))
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MarkedSupervisionReport {
    /// First failed hypothesis, if any, with the word where it fails.
    pub hypothesis_failure: Option<(String, Word)>,
    /// First word violating `L_{S/M}^μ ⊆ K ⊆ L_{S/M}^λ`.
    pub conclusion_failure: Option<(String, Word)>,
}

impl MarkedSupervisionReport {
    pub fn guaranteed(&self) -> bool {
        self.hypothesis_failure.is_none()
    }

    pub fn conclusion_holds(&self) -> bool {
        self.conclusion_failure.is_none()
    }
}

/// Sandwich check for a crisp target `K = L_H^μ`.
///
/// Hypotheses, to the horizon: `pr(K) ⊆ L_M^λ`; `L_H` isolated by `ρ`
/// around `μ`; `L_H ≤ L_M` with equality on `pr(K)`; the controllability
/// condition for `L_H`. Conclusion: with the supervisor synthesized from
/// `L_H`, `L_{S/M}^μ ⊆ K ⊆ L_{S/M}^λ`.
pub fn check_marked_supervision<H: QuantumLanguage, P: QuantumLanguage>(
    target: &H,
    plant: &P,
    spec: &ControlSpec,
    horizon: usize,
    tol: f64,
) -> Result<MarkedSupervisionReport> {
    same_alphabet(target.alphabet(), spec.alphabet())?;
    same_alphabet(plant.alphabet(), spec.alphabet())?;
    let lambda = spec.lambda();
    let mu = spec
        .mu()
        .ok_or_else(|| QdesError::InvalidParameter("an upper cut-point μ is required".into()))?;
    let rho = spec.require_rho()?;
    let n = spec.alphabet.len();
    table_guard(n, 2 * horizon)?;
    let h = target.levels(2 * horizon);
    let in_k = h.map(|v| f64::from(u8::from(v > mu)));
    let pr_k = in_k.extension_max(horizon);
    let m = plant.levels(horizon);
    let dec = |w: &[usize]| spec.alphabet.decode(w);

    let mut hypothesis_failure = None;
    for (w, v) in m.iter() {
        let hv = h.get(&w);
        let in_pr = pr_k.get(&w) > 0.5;
        let fail = if in_pr && v <= lambda {
            Some("pr(K) is not inside the plant's cut-point language")
        } else if hv > mu - rho + GATE_TOL && hv < mu + rho - GATE_TOL {
            Some("target is not isolated around μ")
        } else if hv > v + tol {
            Some("target exceeds plant")
        } else if in_pr && (hv - v).abs() > tol {
            Some("target differs from plant on pr(K)")
        } else {
            None
        };
        if let Some(msg) = fail {
            hypothesis_failure = Some((msg.to_string(), dec(&w)));
            break;
        }
    }
    if hypothesis_failure.is_none() {
        if let ControllabilityVerdict::CounterexampleAt { word, .. } =
            check_controllability_exhaustive(target, plant, spec, horizon.saturating_sub(1), tol)?
        {
            hypothesis_failure = Some(("controllability condition fails".to_string(), word));
        }
    }

    let policy = synthesize_supervisor(plant, target, spec)?;
    let cl = ClosedLoop::new(plant, policy)?;
    let closed = cl.levels(horizon);
    let mut conclusion_failure = None;
    for (w, v) in closed.iter() {
        let in_k = h.get(&w) > mu;
        let fail = if v > mu && !in_k {
            Some("word above μ in closed loop is outside K")
        } else if in_k && v <= lambda {
            Some("word of K is not above λ in closed loop")
        } else {
            None
        };
        if let Some(msg) = fail {
            conclusion_failure = Some((msg.to_string(), dec(&w)));
            break;
        }
    }
    Ok(MarkedSupervisionReport {
        hypothesis_failure,
        conclusion_failure,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::FnLanguage;

    fn ab() -> Alphabet {
        Alphabet::new(["a", "b"]).unwrap()
    }

    #[test]
    fn spec_partition_is_checked() {
        assert!(ControlSpec::from_partition(ab(), &["a"], &["b"], 0.5).is_ok());
        assert!(ControlSpec::from_partition(ab(), &["a"], &["a", "b"], 0.5).is_err());
        assert!(ControlSpec::from_partition(ab(), &["a"], &[], 0.5).is_err());
        assert!(ControlSpec::new(ab(), &["c"], 0.5).is_err());
        assert!(ControlSpec::new(ab(), &["a"], 1.0).is_err());
        assert!(ControlSpec::new(ab(), &["a"], 0.6).unwrap().with_rho(0.5).is_err());
    }

    #[test]
    fn cutpoint_is_strict() {
        let zero = FnLanguage::new(ab(), |_: &[usize]| 0.0);
        assert!(!cutpoint_member(&zero, &Word::empty(), 0.0).unwrap());
        assert_eq!(isolated_classify_value(1.0, 0.5, 0.3), Isolation::In);
        assert_eq!(isolated_classify_value(0.0, 0.5, 0.3), Isolation::Out);
        assert_eq!(isolated_classify_value(0.5, 0.5, 0.3), Isolation::Violation);
        assert_eq!(classify_cutpoint(0.5 + 1e-12, 0.5, 1e-9), CutClass::Ambiguous);
    }

    #[test]
    fn prefix_sup_of_increasing_language() {
        // K(w) = |w|/4 capped at 1: the closure looks ahead by the horizon.
        let k = FnLanguage::new(ab(), |w: &[usize]| (w.len() as f64 / 4.0).min(1.0));
        assert_eq!(prefix_sup(&k, &Word::empty(), 0).unwrap(), 0.0);
        assert_eq!(prefix_sup(&k, &Word::empty(), 2).unwrap(), 0.5);
        let pr = PrefixClosure::new(&k, 2);
        assert_eq!(pr.levels(1).level(1), &[0.75, 0.75]);
    }

    #[test]
    fn closed_loop_recursion_and_memo() {
        let plant = FnLanguage::new(ab(), |w: &[usize]| 0.9f64.powi(w.len() as i32));
        let target = FnLanguage::new(ab(), |w: &[usize]| if w.contains(&1) { 0.0 } else { 0.9f64.powi(w.len() as i32) });
        let spec = ControlSpec::new(ab(), &["a"], 0.5).unwrap();
        let s = synthesize_supervisor(&plant, &target, &spec).unwrap();
        assert_eq!(s.enable_word(&Word::parse("a"), "b").unwrap(), 0.0);
        assert!(s.enable_word(&Word::empty(), "c").is_err());
        let cl = ClosedLoop::new(&plant, &s).unwrap();
        assert_eq!(cl.eval(&Word::empty()).unwrap(), 1.0);
        assert!((cl.eval(&Word::parse("aa")).unwrap() - 0.81).abs() < 1e-15);
        assert_eq!(cl.eval(&Word::parse("ab")).unwrap(), 0.0);
        assert_eq!(cl.memo_len(), 3);
        let lv = cl.levels(3);
        for (w, v) in lv.iter() {
            assert_eq!(v, cl.prob(&w));
        }
        assert!(check_admissible(&plant, &s, &spec, 3).unwrap().is_empty());
    }

    #[test]
    fn admissibility_violation_depth() {
        let plant = FnLanguage::new(ab(), |_: &[usize]| 1.0);
        let spec = ControlSpec::new(ab(), &["a"], 0.5).unwrap();
        let sup = FnSupervisor::new(ab(), |s: &[usize], sym| if s.len() == 3 && sym == 0 { 0.0 } else { 1.0 });
        assert!(check_admissible(&plant, &sup, &spec, 2).unwrap().is_empty());
        let v = check_admissible(&plant, &sup, &spec, 3).unwrap();
        assert_eq!(v.len(), 8);
        assert_eq!(v[0].word.to_string(), "aaa");
    }

    #[test]
    fn identical_target_is_controllable() {
        let plant = FnLanguage::new(ab(), |w: &[usize]| 0.8f64.powi(w.iter().sum::<usize>() as i32));
        let spec = ControlSpec::new(ab(), &["a", "b"], 0.5).unwrap();
        assert!(check_controllability_exhaustive(&plant, &plant, &spec, 4, 0.0).unwrap().holds());
    }

    #[test]
    fn min_identity() {
        for (a, b) in [(0.25, 0.5), (0.5, 0.25), (0.3, 0.3), (0.0, 1.0)] {
            assert_eq!(min_via_abs(a, b), a.min(b));
        }
    }

    #[test]
    fn blocking_loop_detected_at_depth_one() {
        // Closed loop keeps "a" at 1 but nothing past ε is ever marked.
        let plant = FnLanguage::new(ab(), |w: &[usize]| if w.is_empty() { 1.0 } else { 0.2 });
        let spec = ControlSpec::new(ab(), &["a", "b"], 0.5).unwrap().with_rho(0.25).unwrap();
        let s = synthesize_supervisor(&plant, &plant, &spec).unwrap();
        let cl = ClosedLoop::new(&plant, &s).unwrap();
        let w = find_blocking(&cl, 0.5, 0.25, 2, 1e-9).unwrap().unwrap();
        assert_eq!(w.word.to_string(), "a");
        let full = FnLanguage::new(ab(), |_: &[usize]| 1.0);
        let s = synthesize_supervisor(&full, &full, &spec).unwrap();
        let cl = ClosedLoop::new(&full, &s).unwrap();
        assert!(check_nonblocking(&cl, 0.5, 0.25, 3, 1e-9).unwrap());
    }

    #[test]
    fn full_marking_holds() {
        let plant = FnLanguage::new(ab(), |w: &[usize]| 0.9f64.powi(w.len() as i32));
        let spec = ControlSpec::new(ab(), &["a"], 0.3).unwrap().with_rho(0.1).unwrap();
        let k = marked_language(&plant, 0.3, 0.1).unwrap();
        let v = check_marking_conditions(&k, &plant, &spec, 3, 1e-12).unwrap();
        assert!(v.holds(), "{v:?}");
    }

    #[test]
    fn relative_closure_failure() {
        // Crisp K missing a marked word of pr(K).
        let plant = FnLanguage::new(ab(), |_: &[usize]| 1.0);
        let k = FnLanguage::new(ab(), |w: &[usize]| if w == [0] { 0.0 } else { 1.0 });
        let spec = ControlSpec::new(ab(), &["a"], 0.5).unwrap().with_rho(0.25).unwrap();
        match check_marking_conditions(&k, &plant, &spec, 2, 1e-9).unwrap() {
            MarkingVerdict::FailureAt { form, condition, word, .. } => {
                assert_eq!(form, MarkingForm::Crisp);
                assert_eq!(condition, 2);
                assert_eq!(word.to_string(), "a");
            }
            v => panic!("{v:?}"),
        }
    }
}
