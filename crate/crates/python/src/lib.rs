//! Python bindings: load and build automata, evaluate words, and run the
//! equivalence and controllability deciders.

#[pyo3::pymodule]
mod qdes_py {
    use pyo3::exceptions::PyValueError;
    use pyo3::prelude::*;

    use qdes::automata::Automaton as Inner;
    use qdes::composition::{parallel_mo, parallel_qfac};
    use qdes::equivalence::{equiv_rblm, DEFAULT_EQUIV_TOL};
    use qdes::fixtures::{self, AfSearch};
    use qdes::io;
    use qdes::supervisory::{decide_controllability as decide, ControlSpec, ControllabilityVerdict, QfaModel};
    use qdes::{QdesError, QuantumLanguage, Qfac};

    fn err(e: QdesError) -> PyErr {
        PyValueError::new_err(e.to_string())
    }

    /// Any automaton the library reads and writes.
    #[pyclass(frozen)]
    struct Automaton {
        inner: Inner,
    }

    impl Automaton {
        fn model(&self) -> QfaModel {
            self.inner.clone().into()
        }

        fn lifted(&self) -> PyResult<Qfac> {
            match &self.inner {
                Inner::Qfac(q) => Ok(q.clone()),
                Inner::Mo(m) => Ok(Qfac::from_mo(m)),
                Inner::Dfa(d) => Ok(d.to_qfac()),
                other => Err(PyValueError::new_err(format!("cannot compose {} automata", other.kind()))),
            }
        }
    }

    #[pymethods]
    impl Automaton {
        #[staticmethod]
        fn load(path: &str) -> PyResult<Self> {
            io::load(path).map(|inner| Automaton { inner }).map_err(err)
        }

        #[staticmethod]
        fn from_json(text: &str) -> PyResult<Self> {
            io::from_str(text).map(|inner| Automaton { inner }).map_err(err)
        }

        fn to_json(&self) -> String {
            io::to_canonical(&self.inner)
        }

        fn save(&self, path: &str) -> PyResult<()> {
            io::save(&self.inner, path).map_err(err)
        }

        #[getter]
        fn kind(&self) -> &'static str {
            self.inner.kind()
        }

        #[getter]
        fn alphabet(&self) -> Vec<String> {
            self.inner.alphabet().symbols().to_vec()
        }

        /// Acceptance probability (the raw word function for bilinear machines).
        fn prob(&self, word: &str) -> PyResult<f64> {
            let w = self.inner.alphabet().parse_word(word).map_err(err)?;
            match &self.inner {
                Inner::Rblm(b) => b.eval(&w),
                _ => self.model().eval(&w),
            }
            .map_err(err)
        }

        fn minimal_dfa_size(&self) -> PyResult<usize> {
            match &self.inner {
                Inner::Dfa(d) => Ok(d.minimal_size()),
                other => Err(PyValueError::new_err(format!("expected a dfa, found {}", other.kind()))),
            }
        }

        fn __repr__(&self) -> String {
            format!("Automaton(kind={:?}, alphabet={:?})", self.inner.kind(), self.inner.alphabet().symbols())
        }
    }

    /// Fixture automaton: `eg1`, `egadd`, `eg2` or `af-modp` (where `n` is the modulus).
    #[pyfunction]
    #[pyo3(signature = (which, n, epsilon = fixtures::EXAMPLE_EPSILON, lam = fixtures::EXAMPLE_LAMBDA, seed = fixtures::DEFAULT_SEED, target = false))]
    fn example(which: &str, n: usize, epsilon: f64, lam: f64, seed: u64, target: bool) -> PyResult<Automaton> {
        let search = AfSearch {
            seed,
            ..AfSearch::default()
        };
        let inner = match which {
            "eg1" | "egadd" => {
                let (f, dead) = if which == "eg1" {
                    (fixtures::build_eg1_with(n, epsilon, &search), 2 * n + 1)
                } else {
                    (fixtures::build_egadd_with(n, epsilon, &search), n + 1)
                };
                let q = f.map_err(err)?.automaton;
                Inner::Qfac(if target {
                    fixtures::build_spec_variant(&q, dead).map_err(err)?
                } else {
                    q
                })
            }
            "eg2" => {
                let m = fixtures::build_eg2(n, lam).map_err(err)?;
                Inner::Mm(if target { fixtures::build_eg2_spec(&m).map_err(err)? } else { m })
            }
            "af-modp" => Inner::Mo(
                fixtures::build_af_modp_certified(n as u64, epsilon, &search)
                    .map_err(err)?
                    .0,
            ),
            other => return Err(PyValueError::new_err(format!("unknown fixture {other:?}"))),
        };
        Ok(Automaton { inner })
    }

    /// `(equivalent, counterexample)`; the counterexample is the shortest
    /// distinguishing word.
    #[pyfunction]
    #[pyo3(signature = (a, b, tol = DEFAULT_EQUIV_TOL))]
    fn equivalent(a: &Automaton, b: &Automaton, tol: f64) -> PyResult<(bool, Option<String>)> {
        let b1 = a.model().compile().map_err(err)?;
        let b2 = b.model().compile().and_then(|x| x.aligned_to(b1.alphabet())).map_err(err)?;
        let v = equiv_rblm(&b1, &b2, tol).map_err(err)?;
        Ok((v.equivalent, v.counterexample.map(|w| w.to_string())))
    }

    /// Tensor composition of two automata over the same alphabet.
    #[pyfunction]
    fn compose(a: &Automaton, b: &Automaton) -> PyResult<Automaton> {
        let inner = match (&a.inner, &b.inner) {
            (Inner::Mo(m1), Inner::Mo(m2)) => Inner::Mo(parallel_mo(m1, m2).map_err(err)?),
            _ => Inner::Qfac(parallel_qfac(&a.lifted()?, &b.lifted()?).map_err(err)?),
        };
        Ok(Automaton { inner })
    }

    /// `None` when the target is controllable, else `(word, sigma, lhs, rhs)`
    /// for the least violating word.
    #[pyfunction]
    #[pyo3(signature = (plant, target, uncontrollable, tol = DEFAULT_EQUIV_TOL))]
    fn decide_controllability(
        plant: &Automaton,
        target: &Automaton,
        uncontrollable: Vec<String>,
        tol: f64,
    ) -> PyResult<Option<(String, String, f64, f64)>> {
        let (p, t) = (plant.model(), target.model());
        let spec = ControlSpec::new(p.alphabet().clone(), &uncontrollable, fixtures::EXAMPLE_LAMBDA).map_err(err)?;
        Ok(match decide(&t, &p, &spec, tol).map_err(err)? {
            ControllabilityVerdict::Holds => None,
            ControllabilityVerdict::CounterexampleAt { word, sigma, lhs, rhs } => Some((word.to_string(), sigma, lhs, rhs)),
        })
    }
}
