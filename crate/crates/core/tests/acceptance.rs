//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so the lines always reach the terminal.
//! The process fails if any criterion fails other than those listed in
//! `UNATTAINABLE`, or if one of those starts passing (the list is then stale).

use std::collections::{BTreeSet, HashMap};
use std::time::{Duration, Instant};

use qdes::automata::Dfa;
use qdes::blm::{compile_mm_to_rblm, compile_qfac_to_rblm};
use qdes::composition::{parallel_mo, parallel_qfac};
use qdes::equivalence::{equiv_rblm, k_equiv_bruteforce, DEFAULT_EQUIV_TOL};
use qdes::fixtures::{self, AfSearch};
use qdes::random::{self, PairKind};
use qdes::supervisory::{
    check_controllability_exhaustive, check_marking_conditions, check_nonblocking, closed_loop_marked,
    cutpoint_disagreement, decide_controllability, synthesize_supervisor, ClosedLoop, ControlSpec, QfaModel,
};
use qdes::{QuantumLanguage, Rblm, Word, C64};

/// Criteria whose stated threshold the construction cannot meet; see the
/// message printed for each.
const UNATTAINABLE: &[u32] = &[4];

const SEED: u64 = 20_240_917;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit_secs: f64) -> bool {
    elapsed.as_secs_f64() < limit_secs
}

fn words(k: usize, max_len: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..=max_len).flat_map(move |len| {
        let total = k.pow(len as u32);
        (0..total).map(move |mut code| {
            let mut w = vec![0; len];
            for slot in w.iter_mut().rev() {
                *slot = code % k;
                code /= k;
            }
            w
        })
    })
}

/// Number of Myhill–Nerode classes among reachable states, by the
/// pairwise table-filling algorithm. Independent of partition refinement.
fn nerode_classes(d: &Dfa) -> usize {
    let k = d.alphabet().len();
    let mut reach = BTreeSet::from([d.initial()]);
    let mut frontier = vec![d.initial()];
    while let Some(q) = frontier.pop() {
        for a in 0..k {
            let t = d.next(q, a);
            if reach.insert(t) {
                frontier.push(t);
            }
        }
    }
    let states: Vec<usize> = reach.into_iter().collect();
    let n = d.states();
    let acc = |q: usize| d.accepting().contains(&q);
    let mut apart = vec![vec![false; n]; n];
    for &p in &states {
        for &q in &states {
            apart[p][q] = acc(p) != acc(q);
        }
    }
    let mut changed = true;
    while changed {
        changed = false;
        for &p in &states {
            for &q in &states {
                if !apart[p][q] && (0..k).any(|a| apart[d.next(p, a)][d.next(q, a)]) {
                    apart[p][q] = true;
                    changed = true;
                }
            }
        }
    }
    // One representative per class: states not equivalent to an earlier one.
    states
        .iter()
        .enumerate()
        .filter(|&(i, &q)| states[..i].iter().all(|&p| apart[p][q]))
        .count()
}

/// `η · M(w_m) ⋯ M(w_1) · π` by plain loops.
fn naive_value(b: &Rblm, w: &[usize]) -> f64 {
    let n = b.dim();
    let mut v: Vec<C64> = b.initial().to_vec();
    for &s in w {
        let m = b.matrix(s);
        v = (0..n).map(|i| (0..n).map(|j| m.row(i)[j] * v[j]).sum()).collect();
    }
    b.final_vector().iter().zip(&v).map(|(e, x)| e * x).sum::<C64>().re
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let (n, lambda) = (5, 0.5);
    let r = fixtures::eg2_r(n, lambda);
    let m = fixtures::build_eg2(n, lambda).expect("fixture");
    let mut count = 0;
    let mut worst = 0.0f64;
    for w in words(2, 8).filter(|w| !w.is_empty()) {
        let zeros = w.iter().filter(|&&s| s == 0).count() as i32;
        let expect = (1.0 - r).powi(zeros);
        worst = worst.max((m.prob(&w) - expect).abs());
        count += 1;
    }
    let el = t.elapsed();
    outcome(
        count == 510 && worst <= 1e-12 && within(el, 1.0),
        format!("{count} words, max |L − (1−r)^zeros| = {worst:.2e}, {el:.2?}"),
    )
}

fn criterion_2() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for n in 2..=6 {
        let d = fixtures::dfa_bounded_zeros(n);
        let size = d.minimal_size();
        let oracle = nerode_classes(&d);
        let dim = fixtures::build_eg2(n, fixtures::EXAMPLE_LAMBDA).expect("fixture").dim();
        ok &= size == n + 2 && oracle == n + 2 && dim == 3;
        parts.push(format!("N={n}: dfa {size} (oracle {oracle}), qfa dim {dim}"));
    }
    outcome(ok, parts.join("; "))
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let n = 3;
    let d = fixtures::dfa_eg1_language(n);
    let size = d.minimal_size();
    let oracle = nerode_classes(&d);
    let f = fixtures::build_eg1_with(n, fixtures::EXAMPLE_EPSILON, &AfSearch::default()).expect("fixture");
    let block = 2 * f.certificate.multipliers.len();
    let (k, dim) = (f.automaton.classical_states(), f.automaton.dim());
    let el = t.elapsed();
    outcome(
        size >= 8 && oracle == size && k == 2 * n + 2 && dim == block && within(el, 5.0),
        format!("minimal dfa {size} (oracle {oracle}), classical {k}, quantum dim {dim} (AF block {block}), {el:.2?}"),
    )
}

fn criterion_4() -> Outcome {
    let count = |n: usize| {
        let d = fixtures::dfa_egadd_language(n, true);
        (d.minimal_size(), nerode_classes(&d))
    };
    let (c4, o4) = count(4);
    let (c6, o6) = count(6);
    let ratio = c6 as f64 / c4 as f64;
    let classical: Vec<usize> = [4, 6]
        .iter()
        .map(|&n| fixtures::build_egadd(n, fixtures::EXAMPLE_EPSILON).expect("fixture").classical_states())
        .collect();
    let ok = (1.8..=2.8).contains(&ratio) && o4 == c4 && o6 == c6 && classical == [6, 8];
    // Larger sizes, to show the shape of the growth.
    let larger: Vec<String> = [8, 10, 12]
        .iter()
        .map(|&n| format!("N={n}: {}", fixtures::dfa_egadd_language(n, true).minimal_size()))
        .collect();
    outcome(
        ok,
        format!(
            "minimal dfa N=4: {c4} (oracle {o4}), N=6: {c6} (oracle {o6}), ratio {ratio:.3} vs [1.8, 2.8]; \
             classical states {classical:?}; {}. Counts are N²/4 + 3N/2 + 1: quadratic, but the \
             linear term holds the N=6 to N=4 ratio at 19/11",
            larger.join(", ")
        ),
    )
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let alphabet = random::symbols(2);
    let mut rng = random::rng(SEED);
    let (mut agree, mut eq, mut gaps_ok) = (0, 0, true);
    let kinds = [
        PairKind::Independent,
        PairKind::Padded,
        PairKind::Similar,
        PairKind::Deep(1),
        PairKind::Deep(2),
    ];
    for i in 0..100 {
        let (b1, b2) = random::rblm_pair(&mut rng, kinds[i % kinds.len()], 8, &alphabet);
        assert!(b1.dim() + b2.dim() <= 8);
        let k = b1.dim() + b2.dim() - 1;
        let exact = equiv_rblm(&b1, &b2, DEFAULT_EQUIV_TOL).expect("decide");
        let brute = k_equiv_bruteforce(&b1, &b2, k, DEFAULT_EQUIV_TOL).expect("enumerate");
        agree += usize::from(exact.equivalent == brute.equivalent);
        eq += usize::from(exact.equivalent);
        if let Some(w) = &exact.counterexample {
            let idx = alphabet.encode(w).expect("word");
            gaps_ok &= (naive_value(&b1, &idx) - naive_value(&b2, &idx)).abs() > DEFAULT_EQUIV_TOL;
        }
    }
    let el = t.elapsed();
    outcome(
        agree == 100 && gaps_ok && within(el, 10.0),
        format!("{agree}/100 verdicts agree ({eq} equivalent), counterexample gaps > tol: {gaps_ok}, {el:.2?}"),
    )
}

fn criterion_6() -> Outcome {
    let alphabet = random::symbols(2);
    let mut rng = random::rng(SEED + 6);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let n = rand::Rng::gen_range(&mut rng, 1..=4);
        let m = random::mm_qfa(&mut rng, n, &alphabet);
        let b = compile_mm_to_rblm(&m).expect("compile");
        for w in words(2, 5) {
            worst = worst.max((naive_value(&b, &w) - m.accept_prob_running(&w)).abs());
        }
    }
    let mm_worst = worst;
    for _ in 0..50 {
        let k = rand::Rng::gen_range(&mut rng, 1..=3);
        let n = rand::Rng::gen_range(&mut rng, 1..=3);
        let q = random::qfac(&mut rng, k, n, &alphabet);
        let b = compile_qfac_to_rblm(&q).expect("compile");
        for w in words(2, 5) {
            worst = worst.max((naive_value(&b, &w) - q.prob(&w)).abs());
        }
    }
    outcome(
        worst <= 1e-9,
        format!("max gap {mm_worst:.2e} (measure-many), {worst:.2e} overall, 100 automata × 63 words"),
    )
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let mut notes = Vec::new();
    let mut ok = true;
    for inst in [
        fixtures::example4(2).expect("instance"),
        fixtures::example5(4).expect("instance"),
        fixtures::example6(2).expect("instance"),
    ] {
        let v = decide_controllability(&inst.target, &inst.plant, &inst.spec, DEFAULT_EQUIV_TOL).expect("decide");
        ok &= v.holds();
        notes.push(format!("{}: {}", inst.name, if v.holds() { "holds" } else { "fails" }));
    }
    let mut rng = random::rng(SEED + 7);
    let (mut agree, mut engineered, mut violations) = (0, 0, 0);
    for i in 0..30 {
        let inst = random::random_control_instance(&mut rng, i);
        let exact = decide_controllability(&inst.target, &inst.plant, &inst.spec, DEFAULT_EQUIV_TOL).expect("decide");
        let brute = check_controllability_exhaustive(&inst.target, &inst.plant, &inst.spec, 6, 1e-9).expect("oracle");
        agree += usize::from(exact == brute);
        engineered += usize::from(inst.engineered_violation);
        violations += usize::from(!brute.holds());
    }
    let el = t.elapsed();
    ok &= agree == 30 && engineered >= 5 && violations >= 5 && within(el, 30.0);
    outcome(
        ok,
        format!(
            "{}; random: {agree}/30 identical verdicts, {engineered} engineered violations ({violations} found), {el:.2?}",
            notes.join(", ")
        ),
    )
}

fn criterion_8() -> Outcome {
    let horizon = 6;
    let mut ok = true;
    let mut notes = Vec::new();
    for inst in [
        fixtures::example4(2).expect("instance"),
        fixtures::example5(4).expect("instance"),
        fixtures::example6(2).expect("instance"),
    ] {
        let sup = synthesize_supervisor(&inst.plant, &inst.target, &inst.spec).expect("supervisor");
        let cl = ClosedLoop::new(&inst.plant, sup).expect("closed loop");
        let k = inst.spec.alphabet().len();
        let worst = words(k, horizon)
            .map(|w| (cl.eval_indices(&w) - inst.target.prob(&w)).abs())
            .fold(0.0f64, f64::max);
        let pr = inst.target.levels(2 * horizon).extension_max(horizon);
        let split = cutpoint_disagreement(&cl.levels(horizon), &pr, inst.spec.lambda());
        ok &= worst <= 1e-9 && split.is_none();
        notes.push(format!(
            "{}: max |L_S/M − L_H| {worst:.1e}, cut-point sets {}",
            inst.name,
            if split.is_none() { "equal" } else { "differ" }
        ));
    }
    outcome(ok, notes.join("; "))
}

fn criterion_9() -> Outcome {
    let horizon = 6;
    let inst = fixtures::example7(4).expect("instance");
    let spec: &ControlSpec = &inst.spec;
    let (lambda, rho) = (spec.lambda(), spec.rho().expect("isolation radius"));
    let marking = check_marking_conditions(&inst.target, &inst.plant, spec, horizon, 1e-9).expect("marking");
    // The marking target as a 0/1 language is checked in its crisp form.
    let crisp = fixtures::dfa_egadd_language(4, true);
    let crisp_marking = check_marking_conditions(&crisp, &inst.plant, spec, horizon, 1e-9).expect("marking");
    let sup = synthesize_supervisor(&inst.plant, &inst.target, spec).expect("supervisor");
    let cl = ClosedLoop::new(&inst.plant, sup).expect("closed loop");
    let nonblocking = check_nonblocking(&cl, lambda, rho, horizon, 1e-9).expect("nonblocking");
    let marked = closed_loop_marked(&cl, lambda, rho).expect("marked");
    let worst = words(spec.alphabet().len(), horizon)
        .map(|w| (marked.prob(&w) - inst.target.prob(&w)).abs())
        .fold(0.0f64, f64::max);
    outcome(
        marking.holds() && crisp_marking.holds() && nonblocking && worst <= 1e-9,
        format!(
            "marking conditions {:?}, crisp K {:?}, nonblocking {nonblocking}, max |L_S/M,a − K| {worst:.1e}",
            marking, crisp_marking
        ),
    )
}

fn criterion_10() -> Outcome {
    let alphabet = random::symbols(2);
    let mut rng = random::rng(SEED + 10);
    let mut worst = 0.0f64;
    for i in 0..50 {
        let (a, b, c): (QfaModel, QfaModel, QfaModel) = if i % 2 == 0 {
            let k1 = rand::Rng::gen_range(&mut rng, 1..=2);
            let k2 = rand::Rng::gen_range(&mut rng, 1..=2);
            let n1 = rand::Rng::gen_range(&mut rng, 1..=2);
            let n2 = rand::Rng::gen_range(&mut rng, 1..=2);
            let a = random::qfac(&mut rng, k1, n1, &alphabet);
            let b = random::qfac(&mut rng, k2, n2, &alphabet);
            let c = parallel_qfac(&a, &b).expect("compose");
            (a.into(), b.into(), c.into())
        } else {
            let n1 = rand::Rng::gen_range(&mut rng, 1..=3);
            let n2 = rand::Rng::gen_range(&mut rng, 1..=3);
            let a = random::mo_qfa(&mut rng, n1, &alphabet);
            let b = random::mo_qfa(&mut rng, n2, &alphabet);
            let c = parallel_mo(&a, &b).expect("compose");
            (a.into(), b.into(), c.into())
        };
        for w in words(2, 4) {
            worst = worst.max((c.prob(&w) - a.prob(&w) * b.prob(&w)).abs());
        }
    }
    outcome(worst <= 1e-10, format!("max |L_M1⊗M2 − L_M1·L_M2| {worst:.2e} over 50 pairs × 31 words"))
}

fn criterion_11() -> Outcome {
    let p = 11u64;
    let (m, cert) = fixtures::build_af_modp_certified(p, fixtures::EXAMPLE_EPSILON, &AfSearch::default()).expect("fixture");
    let mut witnesses = HashMap::new();
    let mut worst = 0.0f64;
    for len in 0..=3 * p as usize {
        let s: Word = std::iter::repeat_n("0", len).collect();
        let k = fixtures::fact2_witness(&m, &s, "0", 1e-12, 10 * p as usize).expect("witness");
        *witnesses.entry(k).or_insert(0) += 1;
        let back = s.concat(&std::iter::repeat_n("0", k).collect());
        worst = worst.max((m.accept_prob(&back).unwrap() - m.accept_prob(&s).unwrap()).abs());
    }
    let ok = witnesses.keys().all(|&k| k as u64 == p) && worst <= 1e-12;
    outcome(
        ok,
        format!(
            "witness counts {witnesses:?} over |s| ≤ {}, max probability gap {worst:.1e}, block dim {}",
            3 * p,
            2 * cert.multipliers.len()
        ),
    )
}

fn main() {
    type Criterion = (u32, &'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        (1, "bounded-zeros closed form", criterion_1),
        (2, "state complexity, bounded zeros", criterion_2),
        (3, "state complexity, binary sum", criterion_3),
        (4, "state complexity, balanced zeros", criterion_4),
        (5, "equivalence soundness", criterion_5),
        (6, "compilation soundness", criterion_6),
        (7, "controllability decision", criterion_7),
        (8, "closed loop equals target", criterion_8),
        (9, "marking and nonblocking", criterion_9),
        (10, "tensor composition law", criterion_10),
        (11, "probability return", criterion_11),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let o = run();
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag}  {name}: {}", o.detail);
        let allowed = UNATTAINABLE.contains(&id);
        if o.pass == allowed {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all criteria as expected (known unattainable: {UNATTAINABLE:?})");
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
