//! Seeded generators for random automata and machines.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::alphabet::Alphabet;
use crate::automata::{MmQfa, MoQfa, Qfac};
use crate::blm::Rblm;
use crate::supervisory::{ControlSpec, QfaModel};
use crate::linalg::{inner, norm, CMatrix, CVector, Projector, C64, ZERO};

pub type Rng64 = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng64 {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian(rng: &mut impl Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Haar-distributed unitary: Gram–Schmidt on a complex Gaussian matrix.
pub fn unitary(rng: &mut impl Rng, n: usize) -> CMatrix {
    loop {
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
        let mut ok = true;
        for _ in 0..n {
            let mut v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
            for _ in 0..2 {
                for q in &cols {
                    let c = inner(q, &v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let nv = norm(&v);
            if nv < 1e-8 {
                ok = false;
                break;
            }
            cols.push(v.into_iter().map(|z| z / nv).collect());
        }
        if ok {
            return CMatrix::from_columns(&cols).expect("square");
        }
    }
}

/// Real orthogonal matrix from the same procedure on a real Gaussian matrix.
pub fn orthogonal(rng: &mut impl Rng, n: usize) -> CMatrix {
    loop {
        let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
        for _ in 0..n {
            let mut v: Vec<C64> = (0..n).map(|_| C64::new(rng.sample(StandardNormal), 0.0)).collect();
            for _ in 0..2 {
                for q in &cols {
                    let c = inner(q, &v);
                    for (vi, qi) in v.iter_mut().zip(q) {
                        *vi -= c * qi;
                    }
                }
            }
            let nv = norm(&v);
            if nv < 1e-8 {
                break;
            }
            cols.push(v.into_iter().map(|z| z / nv).collect());
        }
        if cols.len() == n {
            return CMatrix::from_columns(&cols).expect("square");
        }
    }
}

pub fn unit_vector(rng: &mut impl Rng, n: usize) -> CVector {
    let v: Vec<C64> = (0..n).map(|_| gaussian(rng)).collect();
    let nv = norm(&v);
    CVector(v.into_iter().map(|z| z / nv).collect())
}

/// Unitary acting as `u` on the listed coordinates and as the identity
/// elsewhere.
pub fn embed(u: &CMatrix, coords: &[usize], n: usize) -> CMatrix {
    let mut out = CMatrix::identity(n);
    for &i in coords {
        out[(i, i)] = ZERO;
    }
    for (a, &i) in coords.iter().enumerate() {
        for (b, &j) in coords.iter().enumerate() {
            out[(i, j)] = u[(a, b)];
        }
    }
    out
}

pub fn symbols(k: usize) -> Alphabet {
    Alphabet::new((0..k).map(|i| i.to_string())).expect("distinct")
}

/// Random subset of `0..n`, each index kept with probability 1/2.
fn random_subset(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    (0..n).filter(|_| rng.gen_bool(0.5)).collect()
}

pub fn mo_qfa(rng: &mut impl Rng, n: usize, alphabet: &Alphabet) -> MoQfa {
    let us = (0..alphabet.len()).map(|_| unitary(rng, n)).collect();
    let accept = Projector::new(n, random_subset(rng, n)).expect("in range");
    MoQfa::with_accepting(alphabet.clone(), us, unit_vector(rng, n), accept).expect("valid by construction")
}

/// Random measure-many QFA; every basis state is assigned to one of the
/// accept, reject and going subspaces uniformly.
pub fn mm_qfa(rng: &mut impl Rng, n: usize, alphabet: &Alphabet) -> MmQfa {
    let mut a = Vec::new();
    let mut r = Vec::new();
    let mut g = Vec::new();
    for i in 0..n {
        match rng.gen_range(0..3) {
            0 => a.push(i),
            1 => r.push(i),
            _ => g.push(i),
        }
    }
    let us = (0..alphabet.len()).map(|_| unitary(rng, n)).collect();
    MmQfa::new(
        alphabet.clone(),
        us,
        unitary(rng, n),
        unit_vector(rng, n),
        Projector::new(n, a).expect("in range"),
        Projector::new(n, r).expect("in range"),
        Projector::new(n, g).expect("in range"),
    )
    .expect("valid by construction")
}

pub fn qfac(rng: &mut impl Rng, k: usize, n: usize, alphabet: &Alphabet) -> Qfac {
    let m = alphabet.len();
    let delta = (0..k).map(|_| (0..m).map(|_| rng.gen_range(0..k)).collect()).collect();
    let us = (0..k).map(|_| (0..m).map(|_| unitary(rng, n)).collect()).collect();
    let accept = (0..k)
        .map(|_| Projector::new(n, random_subset(rng, n)).expect("in range"))
        .collect();
    Qfac::with_accepting(alphabet.clone(), rng.gen_range(0..k), unit_vector(rng, n), delta, us, accept)
        .expect("valid by construction")
}

/// Real random machine with entries uniform in `[-1, 1]`, matrices scaled by
/// `1/√n` so word values stay of order one.
pub fn rblm(rng: &mut impl Rng, n: usize, alphabet: &Alphabet) -> Rblm {
    let s = 1.0 / (n as f64).sqrt();
    let mut vec = |scale: f64| CVector((0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0) * scale, 0.0)).collect());
    let pi = vec(1.0);
    let eta = vec(1.0);
    let mats = (0..alphabet.len())
        .map(|_| {
            let data = (0..n * n).map(|_| C64::new(rng.gen_range(-1.0..1.0) * s, 0.0)).collect();
            CMatrix::from_vec(n, n, data).expect("shape")
        })
        .collect();
    Rblm::new(alphabet.clone(), pi, mats, eta, true).expect("valid by construction")
}

/// How a random pair of machines relates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PairKind {
    /// Drawn independently; almost surely inequivalent at a short word.
    Independent,
    /// Second machine is the first plus an unobservable block.
    Padded,
    /// Second machine is a real orthogonal change of basis of the first.
    Similar,
    /// Second machine differs only in `η`, perturbed orthogonally to the
    /// states reachable by words of length below `depth`.
    Deep(usize),
}

/// A pair with `n1 + n2 <= total`, of the requested relationship.
pub fn rblm_pair(rng: &mut impl Rng, kind: PairKind, total: usize, alphabet: &Alphabet) -> (Rblm, Rblm) {
    match kind {
        PairKind::Independent => {
            let n1 = rng.gen_range(1..total);
            let n2 = rng.gen_range(1..=total - n1);
            (rblm(rng, n1, alphabet), rblm(rng, n2, alphabet))
        }
        PairKind::Padded => {
            let n1 = rng.gen_range(1..=((total - 1) / 2).max(1));
            let pad = rng.gen_range(1..=total.saturating_sub(2 * n1).max(1));
            let b = rblm(rng, n1, alphabet);
            let junk = rblm(rng, pad, alphabet).scale_final(0.0);
            let padded = b.direct_sum(&junk).expect("same alphabet");
            (b, padded)
        }
        PairKind::Similar => {
            let n = rng.gen_range(1..=(total / 2).max(1));
            let b = rblm(rng, n, alphabet);
            let q = orthogonal(rng, n);
            let qt = q.transpose();
            let pi = q.mul_vec(&CVector(b.initial().to_vec())).expect("shape");
            let eta = CVector(qt.apply_left(b.final_vector()).expect("shape"));
            let mats = b
                .matrices()
                .iter()
                .map(|m| q.matmul(m).and_then(|x| x.matmul(&qt)).expect("shape"))
                .collect();
            let c = Rblm::new(alphabet.clone(), pi, mats, eta, true).expect("valid");
            (b, c)
        }
        PairKind::Deep(depth) => {
            let n = rng.gen_range(2..=(total / 2).max(2));
            let b = rblm(rng, n, alphabet);
            // Orthonormal basis of states reached by words shorter than depth.
            let mut basis = crate::linalg::OrthoBasis::new(n);
            for w in alphabet.words_up_to(depth.saturating_sub(1)) {
                basis.try_insert(&b.state(&w), 1e-9);
            }
            let mut d: Vec<C64> = (0..n).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
            for q in basis.vectors() {
                let c = inner(q, &d);
                for (di, qi) in d.iter_mut().zip(q) {
                    *di -= c * qi;
                }
            }
            let nd = norm(&d);
            let eta: Vec<C64> = if nd < 1e-9 {
                b.final_vector().to_vec()
            } else {
                b.final_vector().iter().zip(&d).map(|(e, di)| e + di / nd * 0.5).collect()
            };
            let c = Rblm::new(
                alphabet.clone(),
                CVector(b.initial().to_vec()),
                b.matrices().to_vec(),
                CVector(eta),
                true,
            )
            .expect("valid");
            (b, c)
        }
    }
}

/// A monotone measure-many plant and a target below it.
///
/// Basis: going block `G` (size `g`), reject block `R`, accept block `A`
/// (size `g`) and, for the target only, a private reject block `F` (size
/// `g`). Every `U(σ)` mixes `G ⊕ R`; `U($)` swaps `G` and `A`, so
/// `L_M(s)` is the going mass left after `s` and never increases. The target
/// additionally rotates an amplitude fraction into `F` on each symbol with
/// going factor `c_σ`, giving `L_H(s) = Π c_{s_i}² · L_M(s)`.
#[derive(Clone, Debug)]
pub struct MonotonePair {
    pub plant: MmQfa,
    pub target: MmQfa,
    pub leaks: Vec<f64>,
}

pub struct MonotoneConfig {
    pub going: usize,
    pub reject: usize,
    /// Per-symbol: whether `U(σ)` may move mass from `G` into `R`.
    pub lossy: Vec<bool>,
    /// Per-symbol going factor of the target.
    pub leaks: Vec<f64>,
}

pub fn monotone_mm_pair(rng: &mut impl Rng, alphabet: &Alphabet, cfg: &MonotoneConfig) -> MonotonePair {
    let g = cfg.going;
    let rj = cfg.reject;
    // Plant layout: G | R | A. Target layout: G | R | A | F.
    let n_m = 2 * g + rj;
    let n_h = 3 * g + rj;
    let gr: Vec<usize> = (0..g + rj).collect();
    let gs: Vec<usize> = (0..g).collect();
    let mut plant_us = Vec::new();
    let mut target_us = Vec::new();
    for (sym, &lossy) in cfg.lossy.iter().enumerate() {
        let u = if lossy && rj > 0 {
            unitary(rng, g + rj)
        } else {
            let ug = unitary(rng, g);
            let ur = if rj > 0 { unitary(rng, rj) } else { CMatrix::identity(0) };
            ug.direct_sum(&ur)
        };
        plant_us.push(embed(&u, &gr, n_m));
        let base = embed(&u, &gr, n_h);
        let c = cfg.leaks[sym];
        let s = (1.0 - c * c).max(0.0).sqrt();
        let mut leak = CMatrix::identity(n_h);
        for i in 0..g {
            let f = 2 * g + rj + i;
            leak[(i, i)] = C64::new(c, 0.0);
            leak[(f, f)] = C64::new(c, 0.0);
            leak[(f, i)] = C64::new(s, 0.0);
            leak[(i, f)] = C64::new(-s, 0.0);
        }
        target_us.push(leak.matmul(&base).expect("square"));
    }
    let swap = |n: usize| {
        let mut m = CMatrix::identity(n);
        for i in 0..g {
            let a = g + rj + i;
            m[(i, i)] = ZERO;
            m[(a, a)] = ZERO;
            m[(i, a)] = C64::new(1.0, 0.0);
            m[(a, i)] = C64::new(1.0, 0.0);
        }
        m
    };
    let mut psi = vec![ZERO; n_m];
    let head = unit_vector(rng, g);
    psi[..g].copy_from_slice(&head.0);
    let mut psi_h = psi.clone();
    psi_h.extend(std::iter::repeat_n(ZERO, g));
    let accept: Vec<usize> = (g + rj..2 * g + rj).collect();
    let reject_m: Vec<usize> = (g..g + rj).collect();
    let reject_h: Vec<usize> = (g..g + rj).chain(2 * g + rj..3 * g + rj).collect();
    let plant = MmQfa::new(
        alphabet.clone(),
        plant_us,
        swap(n_m),
        CVector(psi),
        Projector::new(n_m, accept.clone()).expect("range"),
        Projector::new(n_m, reject_m).expect("range"),
        Projector::new(n_m, gs.clone()).expect("range"),
    )
    .expect("valid by construction");
    let target = MmQfa::new(
        alphabet.clone(),
        target_us,
        swap(n_h),
        CVector(psi_h),
        Projector::new(n_h, accept).expect("range"),
        Projector::new(n_h, reject_h).expect("range"),
        Projector::new(n_h, gs).expect("range"),
    )
    .expect("valid by construction");
    MonotonePair {
        plant,
        target,
        leaks: cfg.leaks.clone(),
    }
}

/// A monotone QFA with classical states and a target obtained by sending
/// some transitions to the dead state.
///
/// Classical states `0..live` accept with certainty, state `live` is a
/// measured state whose unitaries are block-diagonal with respect to its
/// accepting projector (so its value never changes while it self-loops), and
/// the last state is dead.
#[derive(Clone, Debug)]
pub struct MonotoneQfacPair {
    pub plant: Qfac,
    pub target: Qfac,
    /// `(state, symbol)` transitions redirected to the dead state.
    pub cut: Vec<(usize, usize)>,
}

pub fn monotone_qfac_pair(rng: &mut impl Rng, alphabet: &Alphabet, live: usize, n: usize, cuts: usize) -> MonotoneQfacPair {
    let k = live + 2;
    let measured = live;
    let dead = live + 1;
    let m = alphabet.len();
    let split = rng.gen_range(1..n.max(2)).min(n);
    let acc_meas: Vec<usize> = (0..split).collect();
    let mut delta = vec![vec![0; m]; k];
    let mut us = vec![Vec::with_capacity(m); k];
    for (s, row) in delta.iter_mut().enumerate() {
        for cell in row.iter_mut() {
            *cell = if s == dead {
                dead
            } else if s == measured {
                if rng.gen_bool(0.7) { measured } else { dead }
            } else {
                match rng.gen_range(0..10) {
                    0..=5 => rng.gen_range(0..live),
                    6..=8 => measured,
                    _ => dead,
                }
            };
            let u = if s == measured {
                let a = unitary(rng, split);
                let b = if n > split { unitary(rng, n - split) } else { CMatrix::identity(0) };
                a.direct_sum(&b)
            } else {
                unitary(rng, n)
            };
            us[s].push(u);
        }
    }
    let mut accept = vec![Projector::full(n); k];
    accept[measured] = Projector::new(n, acc_meas).expect("range");
    accept[dead] = Projector::empty(n);
    let plant = Qfac::with_accepting(alphabet.clone(), 0, unit_vector(rng, n), delta.clone(), us, accept)
        .expect("valid by construction");
    let mut pairs: Vec<(usize, usize)> = (0..=live).flat_map(|s| (0..m).map(move |a| (s, a))).collect();
    pairs.shuffle(rng);
    pairs.truncate(cuts);
    pairs.sort();
    let mut target = plant.clone();
    for &(s, a) in &pairs {
        target = target.retarget_transition(s, a, dead).expect("in range");
    }
    MonotoneQfacPair {
        plant,
        target,
        cut: pairs,
    }
}

fn reachable(q: &Qfac) -> Vec<bool> {
    let mut seen = vec![false; q.classical_states()];
    let mut stack = vec![q.start()];
    seen[q.start()] = true;
    while let Some(s) = stack.pop() {
        for a in 0..q.alphabet().len() {
            let t = q.delta(s, a);
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

/// A small plant/target pair with symbol `0` uncontrollable and `1`
/// controllable.
#[derive(Clone, Debug)]
pub struct RandomControlInstance {
    pub plant: QfaModel,
    pub target: QfaModel,
    pub spec: ControlSpec,
    /// Built to break the controllability condition.
    pub engineered_violation: bool,
}

/// Cycles through four shapes by `index`: measure-many pairs whose target
/// loses mass only on the controllable symbol, or also on the uncontrollable
/// one; and classical-state pairs whose target cuts only controllable
/// transitions, or at least one uncontrollable transition.
pub fn random_control_instance(rng: &mut impl Rng, index: usize) -> RandomControlInstance {
    let alphabet = symbols(2);
    let spec = ControlSpec::from_partition(alphabet.clone(), &["1"], &["0"], 0.5).expect("valid partition");
    let mut violate = index % 2 == 1;
    let (plant, target): (QfaModel, QfaModel) = if index % 4 < 2 {
        // Either the uncontrollable symbol leaks itself (violation at ε), or
        // it loses plant mass once the controllable symbol has leaked
        // (violation after a `1`).
        let deep = violate && index % 8 == 5;
        let leak_uc = if violate && !deep { rng.gen_range(0.4..0.8) } else { 1.0 };
        let cfg = MonotoneConfig {
            going: rng.gen_range(1..=2),
            reject: 1,
            lossy: vec![deep, rng.gen_bool(0.5)],
            leaks: vec![leak_uc, rng.gen_range(0.5..0.9)],
        };
        let pair = monotone_mm_pair(rng, &alphabet, &cfg);
        (pair.plant.into(), pair.target.into())
    } else {
        let live = rng.gen_range(1..=2);
        let n = rng.gen_range(2..=3);
        let pair = monotone_qfac_pair(rng, &alphabet, live, n, 0);
        let dead = live + 1;
        let mut target = pair.plant.clone();
        // Controllable cuts anywhere alive; for a violation also cut one
        // uncontrollable move.
        for s in 0..=live {
            if rng.gen_bool(0.5) {
                target = target.retarget_transition(s, 1, dead).expect("in range");
            }
        }
        if violate {
            // Only a reachable state with a live uncontrollable move makes
            // the cut observable.
            let reach = reachable(&target);
            let candidates: Vec<usize> = (0..=live)
                .filter(|&s| reach[s] && pair.plant.delta(s, 0) != dead)
                .collect();
            match candidates.choose(rng) {
                Some(&s) => target = target.retarget_transition(s, 0, dead).expect("in range"),
                None => violate = false,
            }
        }
        (pair.plant.into(), target.into())
    };
    RandomControlInstance {
        plant,
        target,
        spec,
        engineered_violation: violate,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::language::QuantumLanguage;

    #[test]
    fn haar_unitaries_are_unitary() {
        let mut r = rng(1);
        for n in 1..6 {
            assert!(unitary(&mut r, n).is_unitary(1e-12).unwrap());
            assert!(orthogonal(&mut r, n).is_unitary(1e-12).unwrap());
        }
    }

    #[test]
    fn monotone_pair_is_monotone_and_contained() {
        let mut r = rng(7);
        let a = symbols(2);
        let cfg = MonotoneConfig {
            going: 2,
            reject: 1,
            lossy: vec![true, false],
            leaks: vec![0.8, 1.0],
        };
        let p = monotone_mm_pair(&mut r, &a, &cfg);
        for w in a.words_up_to(5) {
            let lm = p.plant.prob(&w);
            let lh = p.target.prob(&w);
            assert!(lh <= lm + 1e-12);
            let factor: f64 = w.iter().map(|&s| cfg.leaks[s].powi(2)).product();
            assert!((lh - factor * lm).abs() < 1e-12);
            for s in 0..2 {
                let mut ws = w.clone();
                ws.push(s);
                assert!(p.plant.prob(&ws) <= lm + 1e-12);
                assert!(p.target.prob(&ws) <= lh + 1e-12);
            }
        }
    }

    #[test]
    fn monotone_qfac_pair_is_monotone_and_contained() {
        let mut r = rng(3);
        let a = symbols(2);
        let p = monotone_qfac_pair(&mut r, &a, 3, 2, 2);
        for w in a.words_up_to(5) {
            let lm = p.plant.prob(&w);
            let lh = p.target.prob(&w);
            assert!(lh <= lm + 1e-12);
            for s in 0..2 {
                let mut ws = w.clone();
                ws.push(s);
                assert!(p.plant.prob(&ws) <= lm + 1e-12);
                assert!(p.target.prob(&ws) <= lh + 1e-12);
            }
        }
    }

    #[test]
    fn engineered_violations_are_real() {
        use crate::supervisory::check_controllability_exhaustive;
        let mut r = rng(3);
        for i in 0..48 {
            let inst = random_control_instance(&mut r, i);
            let v = check_controllability_exhaustive(&inst.target, &inst.plant, &inst.spec, 6, 1e-9).unwrap();
            assert_eq!(v.holds(), !inst.engineered_violation, "index {i}");
        }
    }
}
