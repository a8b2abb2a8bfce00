//! Python module `ergocheck`.

use num_bigint::BigInt;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use ergocheck::conservation::{find_conservation_relations, reorder_conserved_last, ConservedStructure};
use ergocheck::linalg::{hermite_normal_form, IntMatrix};
use ergocheck::network::{parse_network, ReactionNetwork};
use ergocheck::oracle::{gillespie_simulate, truncated_cme_stationary, CmeOptions};
use ergocheck::rational::{format_rational, parse_rational, Rational};
use ergocheck::report::{self, AnalyzeOptions, ErgodicityReport, Format, OracleMode};

fn value_error(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// A parsed reaction network.
#[pyclass(name = "Network", module = "ergocheck", frozen)]
struct PyNetwork {
    inner: ReactionNetwork,
}

#[pymethods]
impl PyNetwork {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        parse_network(text).map(|inner| Self { inner }).map_err(value_error)
    }

    #[getter]
    fn species(&self) -> Vec<String> {
        self.inner.species().to_vec()
    }

    #[getter]
    fn num_reactions(&self) -> usize {
        self.inner.num_reactions()
    }

    /// `d x K` net change matrix as nested lists.
    fn stoichiometry(&self) -> Vec<Vec<i64>> {
        self.inner.stoichiometry_matrix().to_rows()
    }

    /// Exact mass-action propensity as a `"p/q"` string.
    fn propensity(&self, k: usize, x: Vec<u64>) -> PyResult<String> {
        self.inner.propensity(k, &x).map(|q| format_rational(&q)).map_err(value_error)
    }

    /// Nonnegative conservation vectors in detection order.
    fn conservation_relations(&self) -> PyResult<Vec<Vec<i64>>> {
        find_conservation_relations(&self.inner.stoichiometry_matrix()).map_err(value_error)
    }

    /// Direct-method SSA; returns `(times, states)`.
    fn simulate(&self, x0: Vec<u64>, t_end: f64, seed: u64) -> PyResult<(Vec<f64>, Vec<Vec<u64>>)> {
        let t = gillespie_simulate(&self.inner, &x0, t_end, seed).map_err(value_error)?;
        Ok((t.times, t.states))
    }

    /// Truncated stationary distribution as a JSON string. `upper` bounds
    /// the unconserved species; `totals` fixes the conserved amounts.
    #[pyo3(signature = (upper, totals=None))]
    fn stationary(&self, upper: Vec<u64>, totals: Option<Vec<u64>>) -> PyResult<String> {
        let gammas = find_conservation_relations(&self.inner.stoichiometry_matrix()).map_err(value_error)?;
        let (net, cs) = reorder_conserved_last(&self.inner, &gammas);
        let cs: ConservedStructure = if cs.has_conservation() {
            let totals = totals.ok_or_else(|| PyValueError::new_err("network has conservation relations; pass totals"))?;
            cs.with_totals(&totals, ergocheck::conservation::DEFAULT_MAX_STATES).map_err(value_error)?
        } else {
            cs
        };
        let est = truncated_cme_stationary(&net, &cs, &upper, &CmeOptions::default()).map_err(value_error)?;
        serde_json::to_string(&est).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("Network(species={}, reactions={})", self.inner.dim(), self.inner.num_reactions())
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

/// Verdict and certificates of one analysis.
#[pyclass(name = "Report", module = "ergocheck", frozen)]
struct PyReport {
    inner: ErgodicityReport,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn verdict(&self) -> &'static str {
        self.inner.verdict.as_str()
    }

    #[getter]
    fn exit_code(&self) -> i32 {
        self.inner.exit_code()
    }

    #[getter]
    fn reason(&self) -> Option<String> {
        self.inner.reason.clone()
    }

    /// Lyapunov vector as `"p/q"` strings, when certified.
    #[getter]
    fn lyapunov_vector(&self) -> Option<Vec<String>> {
        self.inner.drift.as_ref().and_then(|d| d.v_positive.clone())
    }

    fn to_json(&self) -> String {
        report::render_report(&self.inner, Format::Json)
    }

    fn to_text(&self) -> String {
        report::render_report(&self.inner, Format::Human)
    }

    fn __repr__(&self) -> String {
        format!("Report(verdict={})", self.inner.verdict.as_str())
    }
}

/// Runs the full pipeline on network text.
#[pyfunction]
#[pyo3(signature = (text, totals=None, witness=None, oracle="off", seed=0, max_states=None))]
fn analyze(
    text: &str,
    totals: Option<Vec<u64>>,
    witness: Option<Vec<String>>,
    oracle: &str,
    seed: u64,
    max_states: Option<usize>,
) -> PyResult<PyReport> {
    let oracle = match oracle {
        "off" => OracleMode::Off,
        "ssa" => OracleMode::Ssa,
        "cme" => OracleMode::Cme,
        other => return Err(PyValueError::new_err(format!("unknown oracle {other:?}"))),
    };
    let mut opts = AnalyzeOptions { totals, oracle, seed, timings: false, ..AnalyzeOptions::default() };
    if let Some(m) = max_states {
        opts.max_states = m;
    }
    let witness: Option<Vec<Rational>> = witness
        .map(|w| w.iter().map(|s| parse_rational(s)).collect::<Result<_, _>>())
        .transpose()
        .map_err(value_error)?;
    report::run(text, witness.as_deref(), &opts).map(|a| PyReport { inner: a.report }).map_err(value_error)
}

type BigMatrix = Vec<Vec<BigInt>>;

/// Column Hermite normal form: returns `(H, U)` with `M U = H`.
#[pyfunction]
fn hermite_normal_form_py(rows: Vec<Vec<i64>>) -> PyResult<(BigMatrix, BigMatrix)> {
    let width = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != width) {
        return Err(PyValueError::new_err("rows have different lengths"));
    }
    let h = hermite_normal_form(&IntMatrix::from_rows(rows));
    Ok((h.h, h.u))
}

#[pymodule]
#[pyo3(name = "ergocheck")]
fn ergocheck_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    let hnf = wrap_pyfunction!(hermite_normal_form_py, m)?;
    m.add("hermite_normal_form", hnf)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
