//! JSON interchange format for every automaton kind.
//!
//! Canonical form: keys sorted, floats written with 17 significant digits
//! in exponent notation, complex entries as `[re, im]`, arrays of scalars on
//! one line. `parse ∘ to_canonical` is the identity on canonical text.
//!
//! ```json
//! {
//!   "accept": [2],
//!   "alphabet": ["0", "1"],
//!   "dim": 3,
//!   "end_unitary": [[[0.0e0, 0.0e0], ...], ...],
//!   "going": [0],
//!   "initial": [[1.0e0, 0.0e0], ...],
//!   "kind": "mm-qfa",
//!   "reject": [1],
//!   "unitaries": {"0": [[...]], "1": [[...]]}
//! }
//! ```
//!
//! Classical-state automata carry `transitions` (one object per state,
//! keyed by symbol), per-state `unitaries` and per-state `accept`/`reject`
//! index sets; bilinear machines carry `pi`, `eta`, `matrices` and
//! `real_valued`; DFAs carry `states`, `initial`, `accepting` and
//! `transitions`.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Map, Number, Value};

use crate::alphabet::Alphabet;
use crate::automata::{Automaton, Dfa, MmQfa, MoQfa, Qfac};
use crate::blm::Rblm;
use crate::error::{QdesError, Result};
use crate::linalg::{CMatrix, CVector, Projector, C64};

fn float(x: f64) -> Value {
    Number::from_f64(x).map(Value::Number).unwrap_or(Value::Null)
}

fn complex(z: C64) -> Value {
    Value::Array(vec![float(z.re), float(z.im)])
}

fn vector(v: &[C64]) -> Value {
    Value::Array(v.iter().map(|&z| complex(z)).collect())
}

fn matrix(m: &CMatrix) -> Value {
    Value::Array((0..m.rows()).map(|i| vector(m.row(i))).collect())
}

fn indices(p: &Projector) -> Value {
    Value::Array(p.indices().iter().map(|&i| json!(i)).collect())
}

fn keyed<T>(alphabet: &Alphabet, items: &[T], f: impl Fn(&T) -> Value) -> Value {
    let mut m = Map::new();
    for (i, x) in items.iter().enumerate() {
        m.insert(alphabet.symbol(i).to_string(), f(x));
    }
    Value::Object(m)
}

/// Document tree of an automaton.
pub fn to_value(a: &Automaton) -> Value {
    let mut doc = Map::new();
    doc.insert("kind".into(), json!(a.kind()));
    doc.insert("alphabet".into(), json!(a.alphabet().symbols()));
    let al = a.alphabet();
    match a {
        Automaton::Dfa(d) => {
            doc.insert("states".into(), json!(d.states()));
            doc.insert("initial".into(), json!(d.initial()));
            doc.insert("accepting".into(), json!(d.accepting().iter().collect::<Vec<_>>()));
            let rows = d.transitions().iter().map(|row| keyed(al, row, |&t| json!(t))).collect();
            doc.insert("transitions".into(), Value::Array(rows));
        }
        Automaton::Mo(m) => {
            doc.insert("dim".into(), json!(m.dim()));
            doc.insert("initial".into(), vector(&m.initial().0));
            doc.insert("unitaries".into(), keyed(al, m.unitaries(), matrix));
            doc.insert("accept".into(), indices(m.accept()));
            doc.insert("reject".into(), indices(m.reject()));
        }
        Automaton::Mm(m) => {
            doc.insert("dim".into(), json!(m.dim()));
            doc.insert("initial".into(), vector(&m.initial().0));
            doc.insert("unitaries".into(), keyed(al, m.unitaries(), matrix));
            doc.insert("end_unitary".into(), matrix(m.end_unitary()));
            doc.insert("accept".into(), indices(m.accept()));
            doc.insert("reject".into(), indices(m.reject()));
            doc.insert("going".into(), indices(m.going()));
        }
        Automaton::Qfac(q) => {
            let k = q.classical_states();
            let syms: Vec<usize> = (0..al.len()).collect();
            doc.insert("classical_states".into(), json!(k));
            doc.insert("start".into(), json!(q.start()));
            doc.insert("dim".into(), json!(q.dim()));
            doc.insert("initial".into(), vector(&q.initial().0));
            let trans = (0..k).map(|s| keyed(al, &syms, |&a| json!(q.delta(s, a)))).collect();
            doc.insert("transitions".into(), Value::Array(trans));
            let us = (0..k).map(|s| keyed(al, &syms, |&a| matrix(q.unitary(s, a)))).collect();
            doc.insert("unitaries".into(), Value::Array(us));
            doc.insert("accept".into(), Value::Array((0..k).map(|s| indices(q.accept(s))).collect()));
            doc.insert("reject".into(), Value::Array((0..k).map(|s| indices(q.reject(s))).collect()));
        }
        Automaton::Rblm(b) => {
            doc.insert("dim".into(), json!(b.dim()));
            doc.insert("pi".into(), vector(b.initial()));
            doc.insert("eta".into(), vector(b.final_vector()));
            doc.insert("matrices".into(), keyed(al, b.matrices(), matrix));
            doc.insert("real_valued".into(), json!(b.is_real_valued()));
        }
    }
    Value::Object(doc)
}

/// Canonical text of any JSON value.
pub fn canonical(v: &Value) -> String {
    let mut out = String::new();
    write_value(v, 0, &mut out);
    out.push('\n');
    out
}

fn scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn flat(v: &Value) -> bool {
    match v {
        Value::Array(xs) => xs.iter().all(scalar),
        Value::Object(m) => m.is_empty(),
        _ => true,
    }
}

fn write_number(n: &Number, out: &mut String) {
    if n.is_f64() {
        let x = n.as_f64().expect("f64");
        let _ = write!(out, "{x:.16e}");
    } else {
        let _ = write!(out, "{n}");
    }
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = |n: usize| "  ".repeat(n);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => write_number(n, out),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string")),
        Value::Array(xs) if flat(v) => {
            out.push('[');
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_value(x, indent, out);
            }
            out.push(']');
        }
        Value::Array(xs) => {
            out.push_str("[\n");
            for (i, x) in xs.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < xs.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push(']');
        }
        Value::Object(m) if m.is_empty() => out.push_str("{}"),
        Value::Object(m) => {
            out.push_str("{\n");
            // serde_json's map is ordered by key.
            for (i, (k, x)) in m.iter().enumerate() {
                out.push_str(&pad(indent + 1));
                out.push_str(&serde_json::to_string(k).expect("key"));
                out.push_str(": ");
                write_value(x, indent + 1, out);
                out.push_str(if i + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&pad(indent));
            out.push('}');
        }
    }
}

pub fn to_canonical(a: &Automaton) -> String {
    canonical(&to_value(a))
}

/// Parses JSON text into a value, locating syntax errors.
pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| QdesError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

struct Reader<'a> {
    doc: &'a Map<String, Value>,
}

fn bad(path: &str, what: &str) -> QdesError {
    QdesError::Document(format!("`{path}`: {what}"))
}

fn as_usize(v: &Value, path: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| bad(path, "expected a non-negative integer"))
}

fn as_f64(v: &Value, path: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| bad(path, "expected a number"))
}

fn as_array<'v>(v: &'v Value, path: &str) -> Result<&'v Vec<Value>> {
    v.as_array().ok_or_else(|| bad(path, "expected an array"))
}

fn as_object<'v>(v: &'v Value, path: &str) -> Result<&'v Map<String, Value>> {
    v.as_object().ok_or_else(|| bad(path, "expected an object"))
}

fn read_complex(v: &Value, path: &str) -> Result<C64> {
    match v {
        Value::Array(xs) if xs.len() == 2 => Ok(C64::new(as_f64(&xs[0], path)?, as_f64(&xs[1], path)?)),
        Value::Number(_) => Ok(C64::new(as_f64(v, path)?, 0.0)),
        _ => Err(bad(path, "expected [re, im] or a real number")),
    }
}

fn read_vector(v: &Value, path: &str) -> Result<Vec<C64>> {
    as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, x)| read_complex(x, &format!("{path}[{i}]")))
        .collect()
}

fn read_matrix(v: &Value, path: &str) -> Result<CMatrix> {
    let rows: Vec<Vec<C64>> = as_array(v, path)?
        .iter()
        .enumerate()
        .map(|(i, r)| read_vector(r, &format!("{path}[{i}]")))
        .collect::<Result<_>>()?;
    if rows.is_empty() {
        return Ok(CMatrix::zeros(0, 0));
    }
    CMatrix::from_rows(&rows).map_err(|e| bad(path, &e.to_string()))
}

fn read_indices(v: &Value, path: &str, dim: usize) -> Result<Projector> {
    let idx: Vec<usize> = as_array(v, path)?
        .iter()
        .map(|x| as_usize(x, path))
        .collect::<Result<_>>()?;
    Projector::new(dim, idx).map_err(|e| bad(path, &e.to_string()))
}

fn by_symbol<'v>(alphabet: &Alphabet, v: &'v Value, path: &str) -> Result<Vec<&'v Value>> {
    let m = as_object(v, path)?;
    if let Some(k) = m.keys().find(|k| !alphabet.contains(k)) {
        return Err(bad(path, &format!("symbol `{k}` is not in the alphabet")));
    }
    alphabet
        .symbols()
        .iter()
        .map(|s| m.get(s).ok_or_else(|| bad(path, &format!("missing entry for symbol `{s}`"))))
        .collect()
}

impl<'a> Reader<'a> {
    fn get(&self, key: &str) -> Result<&'a Value> {
        self.doc.get(key).ok_or_else(|| bad(key, "missing field"))
    }

    fn usize(&self, key: &str) -> Result<usize> {
        as_usize(self.get(key)?, key)
    }

    fn vector(&self, key: &str) -> Result<CVector> {
        Ok(CVector(read_vector(self.get(key)?, key)?))
    }

    fn projector(&self, key: &str, dim: usize) -> Result<Projector> {
        read_indices(self.get(key)?, key, dim)
    }

    fn unitaries(&self, alphabet: &Alphabet, key: &str) -> Result<Vec<CMatrix>> {
        by_symbol(alphabet, self.get(key)?, key)?
            .into_iter()
            .zip(alphabet.symbols())
            .map(|(v, s)| read_matrix(v, &format!("{key}.{s}")))
            .collect()
    }
}

/// Builds an automaton from a document tree and validates it.
pub fn from_value(v: &Value) -> Result<Automaton> {
    let doc = as_object(v, "$")?;
    let r = Reader { doc };
    let kind = r.get("kind")?.as_str().ok_or_else(|| bad("kind", "expected a string"))?;
    let symbols: Vec<String> = as_array(r.get("alphabet")?, "alphabet")?
        .iter()
        .map(|s| s.as_str().map(str::to_string).ok_or_else(|| bad("alphabet", "expected strings")))
        .collect::<Result<_>>()?;
    let alphabet = Alphabet::new(&symbols)?;
    let a = match kind {
        "dfa" => {
            let n = r.usize("states")?;
            let rows = as_array(r.get("transitions")?, "transitions")?;
            if rows.len() != n {
                return Err(bad("transitions", &format!("expected {n} rows, found {}", rows.len())));
            }
            let delta = rows
                .iter()
                .enumerate()
                .map(|(q, row)| {
                    let path = format!("transitions[{q}]");
                    by_symbol(&alphabet, row, &path)?.into_iter().map(|t| as_usize(t, &path)).collect()
                })
                .collect::<Result<_>>()?;
            let accepting: Vec<usize> = as_array(r.get("accepting")?, "accepting")?
                .iter()
                .map(|x| as_usize(x, "accepting"))
                .collect::<Result<_>>()?;
            Automaton::Dfa(Dfa::from_parts(alphabet, delta, r.usize("initial")?, accepting))
        }
        "mo-qfa" => {
            let dim = r.usize("dim")?;
            let us = r.unitaries(&alphabet, "unitaries")?;
            Automaton::Mo(MoQfa::from_parts(
                alphabet,
                us,
                r.vector("initial")?,
                r.projector("accept", dim)?,
                r.projector("reject", dim)?,
            )?)
        }
        "mm-qfa" => {
            let dim = r.usize("dim")?;
            let us = r.unitaries(&alphabet, "unitaries")?;
            Automaton::Mm(MmQfa::from_parts(
                alphabet,
                us,
                read_matrix(r.get("end_unitary")?, "end_unitary")?,
                r.vector("initial")?,
                r.projector("accept", dim)?,
                r.projector("reject", dim)?,
                r.projector("going", dim)?,
            )?)
        }
        "qfac" => {
            let k = r.usize("classical_states")?;
            let dim = r.usize("dim")?;
            let per_state = |key: &str| -> Result<&Vec<Value>> {
                let xs = as_array(r.get(key)?, key)?;
                if xs.len() != k {
                    return Err(bad(key, &format!("expected {k} entries, found {}", xs.len())));
                }
                Ok(xs)
            };
            let delta = per_state("transitions")?
                .iter()
                .enumerate()
                .map(|(s, row)| {
                    let path = format!("transitions[{s}]");
                    by_symbol(&alphabet, row, &path)?.into_iter().map(|t| as_usize(t, &path)).collect()
                })
                .collect::<Result<_>>()?;
            let us = per_state("unitaries")?
                .iter()
                .enumerate()
                .map(|(s, row)| {
                    let path = format!("unitaries[{s}]");
                    by_symbol(&alphabet, row, &path)?
                        .into_iter()
                        .zip(alphabet.symbols())
                        .map(|(m, a)| read_matrix(m, &format!("{path}.{a}")))
                        .collect()
                })
                .collect::<Result<_>>()?;
            let projs = |key: &str| -> Result<Vec<Projector>> {
                per_state(key)?
                    .iter()
                    .enumerate()
                    .map(|(s, x)| read_indices(x, &format!("{key}[{s}]"), dim))
                    .collect()
            };
            Automaton::Qfac(Qfac::from_parts(
                alphabet,
                r.usize("start")?,
                r.vector("initial")?,
                delta,
                us,
                projs("accept")?,
                projs("reject")?,
            )?)
        }
        "rblm" => {
            let mats = r.unitaries(&alphabet, "matrices")?;
            let real = r.get("real_valued")?.as_bool().ok_or_else(|| bad("real_valued", "expected a boolean"))?;
            let b = Rblm::new(alphabet, r.vector("pi")?, mats, r.vector("eta")?, real)?;
            if b.dim() != r.usize("dim")? {
                return Err(bad("dim", "does not match the vectors"));
            }
            Automaton::Rblm(b)
        }
        other => return Err(bad("kind", &format!("unknown kind `{other}`"))),
    };
    let violations = a.validate();
    if violations.is_empty() {
        Ok(a)
    } else {
        Err(QdesError::Invalid(violations))
    }
}

pub fn from_str(text: &str) -> Result<Automaton> {
    from_value(&parse_json(text)?)
}

pub fn load(path: impl AsRef<Path>) -> Result<Automaton> {
    from_str(&std::fs::read_to_string(path)?)
}

pub fn save(a: &Automaton, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_canonical(a))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::build_eg2;

    #[test]
    fn canonical_round_trip() {
        let a = Automaton::Mm(build_eg2(2, 0.5).unwrap());
        let text = to_canonical(&a);
        let b = from_str(&text).unwrap();
        assert_eq!(to_canonical(&b), text);
    }

    #[test]
    fn syntax_error_is_located() {
        match from_str("{\n  \"kind\": \"dfa\",\n  oops\n}") {
            Err(QdesError::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_unitary_names_symbol() {
        let a = Automaton::Mm(build_eg2(2, 0.5).unwrap());
        let mut v = to_value(&a);
        v["unitaries"]["0"][0][0] = json!([2.0, 0.0]);
        match from_value(&v) {
            Err(QdesError::Invalid(vs)) => assert!(vs.iter().any(|x| x.component == "U(0)")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn missing_symbol_is_reported() {
        let a = Automaton::Mm(build_eg2(2, 0.5).unwrap());
        let mut v = to_value(&a);
        v["unitaries"].as_object_mut().unwrap().remove("1");
        assert!(matches!(from_value(&v), Err(QdesError::Document(_))));
    }
}
