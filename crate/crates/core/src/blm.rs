//! Bilinear machines and the compilers from measure-many QFA and QFA with
//! classical states into real-valued bilinear machines.
//!
//! Orientation: `π` is a column vector and `η` a row functional, so the word
//! function is `f(w) = η · M(w_m) ··· M(w_1) · π`.

use std::collections::VecDeque;
use std::sync::Arc;

use crate::alphabet::{Alphabet, Word, END_MARKER};
use crate::automata::{MmQfa, Qfac, Violation, ViolationKind};
use crate::error::{QdesError, Result};
use crate::linalg::{dot, kron_vec, CMatrix, CVector, OrthoBasis, C64, ONE, ZERO};

/// Imaginary parts above this on a real-valued machine are an error.
pub const IMAG_TOL: f64 = 1e-9;

/// Anything that behaves like a bilinear machine: a state space, an initial
/// vector, a linear step per symbol and a linear output functional.
pub trait LinearMachine {
    fn alphabet(&self) -> &Alphabet;
    fn dim(&self) -> usize;
    fn initial(&self) -> Vec<C64>;
    fn step(&self, sym: usize, v: &[C64]) -> Vec<C64>;
    fn output(&self, v: &[C64]) -> C64;

    fn state(&self, w: &[usize]) -> Vec<C64> {
        w.iter().fold(self.initial(), |v, &s| self.step(s, &v))
    }

    fn value(&self, w: &[usize]) -> C64 {
        self.output(&self.state(w))
    }
}

impl<T: LinearMachine + ?Sized> LinearMachine for &T {
    fn alphabet(&self) -> &Alphabet {
        (**self).alphabet()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn initial(&self) -> Vec<C64> {
        (**self).initial()
    }
    fn step(&self, sym: usize, v: &[C64]) -> Vec<C64> {
        (**self).step(sym, v)
    }
    fn output(&self, v: &[C64]) -> C64 {
        (**self).output(v)
    }
}

/// Bilinear machine `(π, {M(σ)}, η)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Rblm {
    alphabet: Alphabet,
    pi: Vec<C64>,
    mats: Vec<CMatrix>,
    eta: Vec<C64>,
    real_valued: bool,
}

impl Rblm {
    pub fn new(alphabet: Alphabet, pi: CVector, mats: Vec<CMatrix>, eta: CVector, real_valued: bool) -> Result<Self> {
        let b = Rblm {
            alphabet,
            pi: pi.0,
            mats,
            eta: eta.0,
            real_valued,
        };
        let v = b.validate();
        if v.is_empty() {
            Ok(b)
        } else {
            Err(QdesError::Invalid(v))
        }
    }

    /// Single-state machine `π = [1]`, `M(σ) = [c_σ]`, `η = [1]`.
    pub fn scalar(alphabet: Alphabet, factors: &[C64]) -> Result<Self> {
        let mats = factors.iter().map(|&c| CMatrix::diag(&[c])).collect();
        Rblm::new(alphabet, CVector(vec![ONE]), mats, CVector(vec![ONE]), true)
    }

    /// The constant-one machine.
    pub fn one(alphabet: Alphabet) -> Self {
        let k = alphabet.len();
        Rblm {
            alphabet,
            pi: vec![ONE],
            mats: vec![CMatrix::identity(1); k],
            eta: vec![ONE],
            real_valued: true,
        }
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn dim(&self) -> usize {
        self.pi.len()
    }

    pub fn initial(&self) -> &[C64] {
        &self.pi
    }

    pub fn matrix(&self, sym: usize) -> &CMatrix {
        &self.mats[sym]
    }

    pub fn matrices(&self) -> &[CMatrix] {
        &self.mats
    }

    pub fn final_vector(&self) -> &[C64] {
        &self.eta
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    pub fn with_real_valued(mut self, flag: bool) -> Self {
        self.real_valued = flag;
        self
    }

    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let n = self.pi.len();
        if n == 0 {
            out.push(Violation::new(ViolationKind::Dimension, "pi", "state count must be positive"));
            return out;
        }
        if self.eta.len() != n {
            out.push(Violation::new(
                ViolationKind::Dimension,
                "eta",
                format!("expected dimension {n}, found {}", self.eta.len()),
            ));
        }
        if self.mats.len() != self.alphabet.len() {
            out.push(Violation::new(
                ViolationKind::Alphabet,
                "M",
                format!("{} matrices for {} symbols", self.mats.len(), self.alphabet.len()),
            ));
        }
        for (i, m) in self.mats.iter().enumerate() {
            let name = format!("M({})", self.alphabet.symbols().get(i).map(String::as_str).unwrap_or("?"));
            if m.rows() != n || m.cols() != n {
                out.push(Violation::new(
                    ViolationKind::Dimension,
                    name,
                    format!("expected {n}x{n}, found {}x{}", m.rows(), m.cols()),
                ));
            } else if !m.is_finite() {
                out.push(Violation::new(ViolationKind::NonFinite, name, "NaN or infinite entry"));
            }
        }
        let finite = |v: &[C64]| v.iter().all(|z| z.re.is_finite() && z.im.is_finite());
        if !finite(&self.pi) {
            out.push(Violation::new(ViolationKind::NonFinite, "pi", "NaN or infinite entry"));
        }
        if !finite(&self.eta) {
            out.push(Violation::new(ViolationKind::NonFinite, "eta", "NaN or infinite entry"));
        }
        out
    }

    /// `M(w_m) ··· M(w_1) π`.
    pub fn state(&self, w: &[usize]) -> Vec<C64> {
        w.iter()
            .fold(self.pi.clone(), |v, &s| self.mats[s].apply_unchecked(&v))
    }

    pub fn value_complex(&self, w: &[usize]) -> C64 {
        dot(&self.eta, &self.state(w))
    }

    /// Real part of the word function, checking the imaginary part when the
    /// machine is flagged real-valued.
    pub fn eval_indices(&self, w: &[usize]) -> Result<f64> {
        let z = self.value_complex(w);
        if self.real_valued && z.im.abs() > IMAG_TOL {
            return Err(QdesError::ImaginaryPart {
                word: self.alphabet.decode(w).to_string(),
                imag: z.im,
            });
        }
        Ok(z.re)
    }

    pub fn eval(&self, w: &Word) -> Result<f64> {
        let idx = self.alphabet.encode(w)?;
        self.eval_indices(&idx)
    }

    /// Same machine over a permuted copy of its alphabet.
    pub fn aligned_to(&self, alphabet: &Alphabet) -> Result<Rblm> {
        if alphabet == &self.alphabet {
            return Ok(self.clone());
        }
        let perm = self.alphabet.permutation_from(alphabet)?;
        Ok(Rblm {
            alphabet: alphabet.clone(),
            pi: self.pi.clone(),
            mats: perm.iter().map(|&i| self.mats[i].clone()).collect(),
            eta: self.eta.clone(),
            real_valued: self.real_valued,
        })
    }

    fn align_pair(&self, other: &Rblm) -> Result<Rblm> {
        if !self.alphabet.same_set(&other.alphabet) {
            return Err(QdesError::AlphabetMismatch(format!(
                "{:?} vs {:?}",
                self.alphabet.symbols(),
                other.alphabet.symbols()
            )));
        }
        other.aligned_to(&self.alphabet)
    }

    /// `f(w) = f_1(w) · f_2(w)`.
    pub fn tensor(&self, other: &Rblm) -> Result<Rblm> {
        let other = self.align_pair(other)?;
        Ok(Rblm {
            alphabet: self.alphabet.clone(),
            pi: kron_vec(&self.pi, &other.pi),
            mats: self.mats.iter().zip(&other.mats).map(|(a, b)| a.tensor(b)).collect(),
            eta: kron_vec(&self.eta, &other.eta),
            real_valued: self.real_valued && other.real_valued,
        })
    }

    /// `f(w) = f_1(w) + f_2(w)`.
    pub fn direct_sum(&self, other: &Rblm) -> Result<Rblm> {
        let other = self.align_pair(other)?;
        Ok(Rblm {
            alphabet: self.alphabet.clone(),
            pi: [self.pi.as_slice(), &other.pi].concat(),
            mats: self.mats.iter().zip(&other.mats).map(|(a, b)| a.direct_sum(b)).collect(),
            eta: [self.eta.as_slice(), &other.eta].concat(),
            real_valued: self.real_valued && other.real_valued,
        })
    }

    pub fn negate_final(&self) -> Rblm {
        self.scale_final(-1.0)
    }

    pub fn scale_final(&self, c: f64) -> Rblm {
        let mut b = self.clone();
        for z in b.eta.iter_mut() {
            *z *= c;
        }
        b
    }

    /// Folds `M(τ)` into the final functional and drops `τ` from the
    /// alphabet: the result computes `w ↦ f(wτ)` over `Σ \ {τ}`.
    pub fn absorb_symbol(&self, tau: &str) -> Result<Rblm> {
        let t = self
            .alphabet
            .index_of(tau)
            .ok_or_else(|| QdesError::UnknownSymbol(tau.to_string()))?;
        let eta = self.mats[t].apply_left(&self.eta)?;
        let mut mats = self.mats.clone();
        mats.remove(t);
        Ok(Rblm {
            alphabet: self.alphabet.without_symbol(tau),
            pi: self.pi.clone(),
            mats,
            eta,
            real_valued: self.real_valued,
        })
    }

    /// Like [`Rblm::absorb_symbol`] but keeps the alphabet, so the result
    /// computes `w ↦ f(wσ)` over the full `Σ`.
    pub fn with_suffix(&self, sym: usize) -> Result<Rblm> {
        if sym >= self.alphabet.len() {
            return Err(QdesError::InvalidParameter(format!("symbol index {sym} out of range")));
        }
        let mut b = self.clone();
        b.eta = self.mats[sym].apply_left(&self.eta)?;
        Ok(b)
    }

    /// Equivalent machine on the reachable-and-observable part of the state
    /// space. `tol` is the residual threshold for span membership.
    pub fn reduce(&self, tol: f64) -> Rblm {
        self.reduce_forward(tol).reduce_backward(tol)
    }

    /// Restriction to `span{M(w)π}`: with orthonormal columns `Q`,
    /// `π' = Q†π`, `M' = Q†MQ`, `η' = ηQ`.
    pub fn reduce_forward(&self, tol: f64) -> Rblm {
        let basis = krylov(self.dim(), &self.pi, tol, |s, v| self.mats[s].apply_unchecked(v), self.alphabet.len());
        let q = basis.vectors();
        let r = q.len();
        let coords = |v: &[C64]| basis.coordinates(v);
        let mats = self
            .mats
            .iter()
            .map(|m| {
                let cols: Vec<Vec<C64>> = q.iter().map(|qi| coords(&m.apply_unchecked(qi))).collect();
                CMatrix::from_columns(&cols).unwrap_or_else(|_| CMatrix::zeros(r, r))
            })
            .collect();
        let eta = q.iter().map(|qi| dot(&self.eta, qi)).collect();
        Rblm {
            alphabet: self.alphabet.clone(),
            pi: coords(&self.pi),
            mats,
            eta,
            real_valued: self.real_valued,
        }
        .nonempty()
    }

    /// Quotient by the unobservable subspace: with orthonormal rows `W`
    /// spanning `{ηM(w)}`, `π' = Wπ`, `M' = WMW†`, `η' = ηW†`.
    pub fn reduce_backward(&self, tol: f64) -> Rblm {
        let basis = krylov(
            self.dim(),
            &self.eta,
            tol,
            |s, v| self.mats[s].apply_left(v).expect("square"),
            self.alphabet.len(),
        );
        let w = basis.vectors();
        // (x W†)_i = Σ_k x_k conj(w_i[k])
        let project = |x: &[C64]| -> Vec<C64> { w.iter().map(|wi| crate::linalg::inner(wi, x)).collect() };
        let mats = self
            .mats
            .iter()
            .map(|m| {
                // Row i of M' is (w_i M) W†.
                let rows: Vec<Vec<C64>> = w
                    .iter()
                    .map(|wi| project(&m.apply_left(wi).expect("square")))
                    .collect();
                CMatrix::from_rows(&rows).unwrap_or_else(|_| CMatrix::zeros(0, 0))
            })
            .collect();
        Rblm {
            alphabet: self.alphabet.clone(),
            pi: w.iter().map(|wi| dot(wi, &self.pi)).collect(),
            mats,
            eta: project(&self.eta),
            real_valued: self.real_valued,
        }
        .nonempty()
    }

    /// A machine with no states is replaced by the one-state zero machine.
    fn nonempty(self) -> Rblm {
        if !self.pi.is_empty() {
            return self;
        }
        let k = self.alphabet.len();
        Rblm {
            alphabet: self.alphabet,
            pi: vec![ZERO],
            mats: vec![CMatrix::zeros(1, 1); k],
            eta: vec![ZERO],
            real_valued: self.real_valued,
        }
    }
}

/// Orthonormal basis of the span of all `step(w)(start)`, explored breadth
/// first.
fn krylov(dim: usize, start: &[C64], tol: f64, step: impl Fn(usize, &[C64]) -> Vec<C64>, k: usize) -> OrthoBasis {
    let mut basis = OrthoBasis::new(dim);
    let mut queue = VecDeque::new();
    if basis.try_insert(start, tol) {
        queue.push_back(start.to_vec());
    }
    while let Some(v) = queue.pop_front() {
        for s in 0..k {
            let u = step(s, &v);
            if basis.try_insert(&u, tol) {
                queue.push_back(u);
            }
        }
    }
    basis
}

impl LinearMachine for Rblm {
    fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }
    fn dim(&self) -> usize {
        self.pi.len()
    }
    fn initial(&self) -> Vec<C64> {
        self.pi.clone()
    }
    fn step(&self, sym: usize, v: &[C64]) -> Vec<C64> {
        self.mats[sym].apply_unchecked(v)
    }
    fn output(&self, v: &[C64]) -> C64 {
        dot(&self.eta, v)
    }
}

pub fn blm_eval(b: &Rblm, w: &Word) -> Result<f64> {
    b.eval(w)
}

pub fn blm_tensor(b1: &Rblm, b2: &Rblm) -> Result<Rblm> {
    b1.tensor(b2)
}

pub fn blm_direct_sum(b1: &Rblm, b2: &Rblm) -> Result<Rblm> {
    b1.direct_sum(b2)
}

pub fn negate_final(b: &Rblm) -> Rblm {
    b.negate_final()
}

pub fn absorb_symbol(b: &Rblm, tau: &str) -> Result<Rblm> {
    b.absorb_symbol(tau)
}

/// Row-major `vec(ψψ†)`.
fn vec_density(psi: &[C64]) -> Vec<C64> {
    let conj: Vec<C64> = psi.iter().map(|z| z.conj()).collect();
    kron_vec(psi, &conj)
}

/// Machine over `Σ ∪ {$}` with `n² + 1` states: the row-major vectorised
/// going density followed by an accept-mass accumulator.
pub fn compile_mm_unabsorbed(m: &MmQfa) -> Result<Rblm> {
    let violations = m.validate();
    if !violations.is_empty() {
        return Err(QdesError::Invalid(violations));
    }
    let n = m.dim();
    let nn = n * n;
    let acc = nn;
    let alphabet = m.alphabet().with_symbol(END_MARKER)?;
    let block = |u: &CMatrix| -> CMatrix {
        // ρ ↦ P(g) U ρ U† P(g) on vec(ρ), plus tr(P(a) U ρ U†) into the accumulator.
        let mut a = u.clone();
        for i in 0..n {
            if !m.going().contains(i) {
                for j in 0..n {
                    a[(i, j)] = ZERO;
                }
            }
        }
        let kron = a.tensor(&a.conj());
        let mut out = CMatrix::zeros(nn + 1, nn + 1);
        for i in 0..nn {
            for j in 0..nn {
                out[(i, j)] = kron[(i, j)];
            }
        }
        for k in 0..n {
            for l in 0..n {
                let mut s = ZERO;
                for &i in m.accept().indices() {
                    s += u[(i, k)] * u[(i, l)].conj();
                }
                out[(acc, k * n + l)] = s;
            }
        }
        out[(acc, acc)] = ONE;
        out
    };
    let mut mats: Vec<CMatrix> = m.unitaries().iter().map(block).collect();
    mats.push(block(m.end_unitary()));
    let mut pi = vec_density(&m.initial().0);
    pi.push(ZERO);
    let mut eta = vec![ZERO; nn + 1];
    eta[acc] = ONE;
    Ok(Rblm {
        alphabet,
        pi,
        mats,
        eta,
        real_valued: true,
    })
}

/// Real-valued machine over `Σ` with `f(w) = L_M(w$)`.
pub fn compile_mm_to_rblm(m: &MmQfa) -> Result<Rblm> {
    compile_mm_unabsorbed(m)?.absorb_symbol(END_MARKER)
}

/// Real-valued machine with `k·n²` states: classical indicator ⊗ vec(ρ).
pub fn compile_qfac_to_rblm(m: &Qfac) -> Result<Rblm> {
    let violations = m.validate();
    if !violations.is_empty() {
        return Err(QdesError::Invalid(violations));
    }
    let k = m.classical_states();
    let n = m.dim();
    let nn = n * n;
    let dim = k * nn;
    let mut mats = Vec::with_capacity(m.alphabet().len());
    for sym in 0..m.alphabet().len() {
        let mut big = CMatrix::zeros(dim, dim);
        for s in 0..k {
            let u = m.unitary(s, sym);
            let kron = u.tensor(&u.conj());
            let t = m.delta(s, sym);
            for i in 0..nn {
                for j in 0..nn {
                    big[(t * nn + i, s * nn + j)] = kron[(i, j)];
                }
            }
        }
        mats.push(big);
    }
    let mut pi = vec![ZERO; dim];
    let rho = vec_density(&m.initial().0);
    let s0 = m.start();
    pi[s0 * nn..(s0 + 1) * nn].copy_from_slice(&rho);
    let mut eta = vec![ZERO; dim];
    for s in 0..k {
        for &i in m.accept(s).indices() {
            eta[s * nn + i * n + i] = ONE;
        }
    }
    Ok(Rblm {
        alphabet: m.alphabet().clone(),
        pi,
        mats,
        eta,
        real_valued: true,
    })
}

/// Lazily evaluated combination of machines under tensor product and direct
/// sum. Tensor steps use `(A⊗B) vec(V) = vec(A V Bᵀ)` so the Kronecker
/// matrices are never formed.
#[derive(Clone, Debug)]
pub enum MachineExpr {
    Leaf(Arc<Rblm>),
    Tensor(Box<MachineExpr>, Box<MachineExpr>),
    Sum(Box<MachineExpr>, Box<MachineExpr>),
}

impl MachineExpr {
    pub fn leaf(b: Rblm) -> Self {
        MachineExpr::Leaf(Arc::new(b))
    }

    pub fn shared(b: &Arc<Rblm>) -> Self {
        MachineExpr::Leaf(Arc::clone(b))
    }

    pub fn tensor(a: MachineExpr, b: MachineExpr) -> Result<Self> {
        check_same(a.alphabet(), b.alphabet())?;
        Ok(MachineExpr::Tensor(Box::new(a), Box::new(b)))
    }

    pub fn sum(a: MachineExpr, b: MachineExpr) -> Result<Self> {
        check_same(a.alphabet(), b.alphabet())?;
        Ok(MachineExpr::Sum(Box::new(a), Box::new(b)))
    }

    /// Dense equivalent, for small expressions.
    pub fn materialize(&self) -> Result<Rblm> {
        match self {
            MachineExpr::Leaf(b) => Ok((**b).clone()),
            MachineExpr::Tensor(a, b) => a.materialize()?.tensor(&b.materialize()?),
            MachineExpr::Sum(a, b) => a.materialize()?.direct_sum(&b.materialize()?),
        }
    }
}

fn check_same(a: &Alphabet, b: &Alphabet) -> Result<()> {
    if a != b {
        return Err(QdesError::AlphabetMismatch(format!("{:?} vs {:?}", a.symbols(), b.symbols())));
    }
    Ok(())
}

impl LinearMachine for MachineExpr {
    fn alphabet(&self) -> &Alphabet {
        match self {
            MachineExpr::Leaf(b) => b.alphabet(),
            MachineExpr::Tensor(a, _) | MachineExpr::Sum(a, _) => a.alphabet(),
        }
    }

    fn dim(&self) -> usize {
        match self {
            MachineExpr::Leaf(b) => b.dim(),
            MachineExpr::Tensor(a, b) => a.dim() * b.dim(),
            MachineExpr::Sum(a, b) => a.dim() + b.dim(),
        }
    }

    fn initial(&self) -> Vec<C64> {
        match self {
            MachineExpr::Leaf(b) => b.initial().to_vec(),
            MachineExpr::Tensor(a, b) => kron_vec(&a.initial(), &b.initial()),
            MachineExpr::Sum(a, b) => [a.initial(), b.initial()].concat(),
        }
    }

    fn step(&self, sym: usize, v: &[C64]) -> Vec<C64> {
        match self {
            MachineExpr::Leaf(b) => b.matrix(sym).apply_unchecked(v),
            MachineExpr::Sum(a, b) => {
                let (x, y) = v.split_at(a.dim());
                [a.step(sym, x), b.step(sym, y)].concat()
            }
            MachineExpr::Tensor(a, b) => {
                let (da, db) = (a.dim(), b.dim());
                let mut t = vec![ZERO; da * db];
                for i in 0..da {
                    let row = &v[i * db..(i + 1) * db];
                    if row.iter().all(|z| *z == ZERO) {
                        continue;
                    }
                    t[i * db..(i + 1) * db].copy_from_slice(&b.step(sym, row));
                }
                let mut out = vec![ZERO; da * db];
                let mut col = vec![ZERO; da];
                for j in 0..db {
                    for i in 0..da {
                        col[i] = t[i * db + j];
                    }
                    if col.iter().all(|z| *z == ZERO) {
                        continue;
                    }
                    for (i, z) in a.step(sym, &col).into_iter().enumerate() {
                        out[i * db + j] = z;
                    }
                }
                out
            }
        }
    }

    fn output(&self, v: &[C64]) -> C64 {
        match self {
            MachineExpr::Leaf(b) => dot(b.final_vector(), v),
            MachineExpr::Sum(a, b) => {
                let (x, y) = v.split_at(a.dim());
                a.output(x) + b.output(y)
            }
            MachineExpr::Tensor(a, b) => {
                let db = b.dim();
                let w: Vec<C64> = v.chunks(db).map(|row| b.output(row)).collect();
                a.output(&w)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, r};

    fn alpha(s: &[&str]) -> Alphabet {
        Alphabet::new(s.iter().copied()).unwrap()
    }

    #[test]
    fn empty_word_is_eta_pi() {
        let b = Rblm::new(
            alpha(&["a"]),
            CVector(vec![r(2.0), r(3.0)]),
            vec![CMatrix::identity(2)],
            CVector(vec![r(0.5), r(-1.0)]),
            false,
        )
        .unwrap();
        assert_eq!(b.eval(&Word::empty()).unwrap(), 1.0 - 3.0);
    }

    #[test]
    fn scalar_power() {
        let b = Rblm::scalar(alpha(&["a"]), &[r(0.7)]).unwrap();
        assert!((b.eval(&Word::parse("aa")).unwrap() - 0.49).abs() < 1e-15);
    }

    #[test]
    fn scalar_products_and_sums() {
        let a = alpha(&["a"]);
        let b1 = Rblm::scalar(a.clone(), &[r(0.5)]).unwrap();
        let b2 = Rblm::scalar(a, &[r(0.25)]).unwrap();
        let w = Word::parse("a");
        assert_eq!(b1.tensor(&b2).unwrap().eval(&w).unwrap(), 0.125);
        assert_eq!(b1.direct_sum(&b2).unwrap().eval(&w).unwrap(), 0.75);
        assert_eq!(b1.negate_final().eval(&w).unwrap(), -0.5);
    }

    #[test]
    fn absorb_scalar() {
        let b = Rblm::scalar(alpha(&["a", "t"]), &[r(0.9), r(0.5)]).unwrap();
        let h = b.absorb_symbol("t").unwrap();
        assert_eq!(h.alphabet().symbols(), ["a"]);
        assert_eq!(h.eval(&Word::empty()).unwrap(), 0.5);
        assert!(b.absorb_symbol("x").is_err());
    }

    #[test]
    fn imaginary_value_is_rejected_when_flagged_real() {
        let b = Rblm::new(
            alpha(&["a"]),
            CVector(vec![ONE]),
            vec![CMatrix::diag(&[c(0.0, 1.0)])],
            CVector(vec![ONE]),
            true,
        )
        .unwrap();
        assert!(b.eval(&Word::empty()).is_ok());
        assert!(matches!(b.eval(&Word::parse("a")), Err(QdesError::ImaginaryPart { .. })));
    }

    #[test]
    fn alphabet_mismatch() {
        let b1 = Rblm::one(alpha(&["a"]));
        let b2 = Rblm::one(alpha(&["b"]));
        assert!(matches!(b1.tensor(&b2), Err(QdesError::AlphabetMismatch(_))));
    }

    #[test]
    fn reduction_keeps_word_function() {
        // Two redundant copies plus an unreachable coordinate.
        let m = CMatrix::from_real_rows(&[&[0.5, 0.1, 0.0], &[0.2, 0.3, 0.0], &[0.0, 0.0, 0.9]]).unwrap();
        let m2 = m.tensor(&CMatrix::identity(2));
        let b = Rblm::new(
            alpha(&["a"]),
            CVector::from_real(&[1.0, 1.0, 0.5, 0.5, 0.0, 0.0]),
            vec![m2],
            CVector::from_real(&[1.0, 1.0, -1.0, -1.0, 3.0, 3.0]),
            true,
        )
        .unwrap();
        let red = b.reduce(1e-12);
        assert!(red.dim() <= 2);
        for w in b.alphabet().words_up_to(6) {
            assert!((red.value_complex(&w) - b.value_complex(&w)).norm() < 1e-12);
        }
    }

    #[test]
    fn lazy_tensor_matches_dense() {
        let m1 = CMatrix::from_real_rows(&[&[0.5, 0.1], &[0.2, -0.3]]).unwrap();
        let m2 = CMatrix::from_real_rows(&[&[0.1, 0.4, 0.0], &[0.0, 0.2, 1.0], &[0.3, 0.0, 0.5]]).unwrap();
        let a = Rblm::new(alpha(&["x"]), CVector::from_real(&[1.0, 0.5]), vec![m1], CVector::from_real(&[1.0, -1.0]), true).unwrap();
        let b = Rblm::new(
            alpha(&["x"]),
            CVector::from_real(&[0.2, 0.5, 1.0]),
            vec![m2],
            CVector::from_real(&[1.0, 2.0, 0.5]),
            true,
        )
        .unwrap();
        let expr = MachineExpr::sum(
            MachineExpr::tensor(MachineExpr::leaf(a.clone()), MachineExpr::leaf(b.clone())).unwrap(),
            MachineExpr::leaf(a.clone()),
        )
        .unwrap();
        let dense = expr.materialize().unwrap();
        for w in a.alphabet().words_up_to(5) {
            assert!((expr.value(&w) - dense.value_complex(&w)).norm() < 1e-13);
        }
    }
}
