//! Python bindings: scenarios, engine runs, scoring, the welfare oracle,
//! collusion verdicts and Monte Carlo revenue. Money crosses the boundary as
//! floats in major units.

use std::collections::BTreeMap;

use pyo3::exceptions::{PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use spectra::mechanisms::{self, IncrementSchedule, MechanismConfig, SealedBid};
use spectra::metrics::{self, ValueDistribution};
use spectra::model::{AuctionOutcome, MechanismKind, Money, MINOR_PER_MAJOR};
use spectra::scenarios::{self, Scenario};
use spectra::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::UnknownScenario(_) => PyKeyError::new_err(e.to_string()),
        Error::Config { .. } | Error::Input(_) | Error::Json(_) | Error::OracleBoundExceeded { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn money(major: f64) -> PyResult<Money> {
    if !major.is_finite() || major < 0.0 {
        return Err(PyValueError::new_err(format!("amount must be a non-negative number, got {major}")));
    }
    Ok(Money::from_minor((major * MINOR_PER_MAJOR as f64).round() as i64))
}

fn kind(name: &str) -> PyResult<MechanismKind> {
    name.parse().map_err(PyValueError::new_err)
}

#[pyclass(name = "Scenario", module = "spectra_py", frozen)]
struct PyScenario {
    inner: Scenario,
}

#[pymethods]
impl PyScenario {
    /// Build a catalog scenario by name.
    #[staticmethod]
    fn from_catalog(name: &str) -> PyResult<Self> {
        Ok(PyScenario {
            inner: scenarios::build_scenario(name).map_err(py_err)?,
        })
    }

    /// Load and validate a scenario JSON document.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyScenario {
            inner: Scenario::from_json(text).map_err(py_err)?,
        })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(py_err)
    }

    #[getter]
    fn name(&self) -> String {
        self.inner.name.clone()
    }

    #[getter]
    fn mechanism(&self) -> String {
        self.inner.mechanism.kind.to_string()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn license_ids(&self) -> Vec<String> {
        self.inner.licenses.iter().map(|l| l.id.to_string()).collect()
    }

    #[getter]
    fn bidder_ids(&self) -> Vec<String> {
        self.inner.bidders.iter().map(|b| b.id.to_string()).collect()
    }

    /// A copy with the mechanism, seed, absolute increment (major units) or
    /// HAMR threshold replaced.
    #[pyo3(signature = (mechanism=None, seed=None, increment=None, tsf=None))]
    fn configured(&self, mechanism: Option<&str>, seed: Option<u64>, increment: Option<f64>, tsf: Option<u32>) -> PyResult<Self> {
        let mut s = self.inner.clone();
        if let Some(m) = mechanism {
            s.mechanism.kind = kind(m)?;
        }
        if let Some(seed) = seed {
            s.seed = seed;
            s.mechanism.tie_break_seed = None;
        }
        if let Some(inc) = increment {
            s.mechanism.increment_schedule = IncrementSchedule::Absolute { amount: money(inc)? };
        }
        if let Some(t) = tsf {
            for l in &s.licenses {
                s.mechanism.tsf.insert(l.id.clone(), t);
            }
        }
        if s.mechanism.kind == MechanismKind::Hamr {
            let index = s.license_index();
            s.mechanism.fill_default_tsf(&index);
        }
        s.validate().map_err(py_err)?;
        Ok(PyScenario { inner: s })
    }

    /// Run under the scenario's own mechanism and strategy assignment.
    fn run(&self) -> PyResult<PyOutcome> {
        Ok(PyOutcome {
            inner: mechanisms::run(&self.inner).map_err(py_err)?,
        })
    }

    /// Maximum-welfare allocation as `(allocation, welfare)`.
    fn optimal_allocation(&self) -> PyResult<(BTreeMap<String, Option<String>>, f64)> {
        let sol = self.inner.optimal_allocation().map_err(py_err)?;
        let alloc = sol
            .allocation
            .into_iter()
            .map(|(l, w)| (l.to_string(), w.map(|w| w.to_string())))
            .collect();
        Ok((alloc, sol.welfare.as_major()))
    }

    /// Deviation search for the scenario's cartel: `(verdict, max_gain, witness_trace)`.
    #[pyo3(signature = (mechanism=None))]
    fn collusion_viability(&self, mechanism: Option<&str>) -> PyResult<(String, f64, Vec<String>)> {
        let cartel = self
            .inner
            .cartel()
            .ok_or_else(|| PyValueError::new_err("scenario has no cartel agreement"))?;
        let mut config = self.inner.mechanism.clone();
        if let Some(m) = mechanism {
            config.kind = kind(m)?;
            if config.kind == MechanismKind::Hamr {
                config.fill_default_tsf(&self.inner.license_index());
            }
        }
        let report = metrics::collusion_viability(&self.inner, cartel, &config).map_err(py_err)?;
        Ok((report.verdict.to_string(), report.max_gain().as_major(), report.witness_trace()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Scenario(name={:?}, mechanism={}, licenses={}, bidders={})",
            self.inner.name,
            self.inner.mechanism.kind,
            self.inner.licenses.len(),
            self.inner.bidders.len()
        )
    }
}

#[pyclass(name = "Outcome", module = "spectra_py", frozen)]
struct PyOutcome {
    inner: AuctionOutcome,
}

#[pymethods]
impl PyOutcome {
    #[getter]
    fn mechanism(&self) -> String {
        self.inner.mechanism.to_string()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[getter]
    fn allocation(&self) -> BTreeMap<String, Option<String>> {
        self.inner
            .allocation
            .iter()
            .map(|(l, w)| (l.to_string(), w.as_ref().map(|w| w.to_string())))
            .collect()
    }

    #[getter]
    fn prices(&self) -> BTreeMap<String, Option<f64>> {
        self.inner
            .gross_prices
            .iter()
            .map(|(l, p)| (l.to_string(), p.map(Money::as_major)))
            .collect()
    }

    #[getter]
    fn payments(&self) -> BTreeMap<String, f64> {
        self.inner
            .payments
            .iter()
            .map(|(b, p)| (b.to_string(), p.as_major()))
            .collect()
    }

    #[getter]
    fn revenue(&self) -> f64 {
        self.inner.revenue().as_major()
    }

    #[getter]
    fn rounds(&self) -> u64 {
        self.inner.rounds_elapsed
    }

    #[getter]
    fn raise_rounds(&self) -> u64 {
        self.inner.raise_rounds
    }

    /// `(license, amount, winner)` for every seeded tie-break.
    #[getter]
    fn tie_breaks(&self) -> Vec<(String, f64, String)> {
        self.inner
            .tie_breaks
            .iter()
            .map(|t| (t.license_id.to_string(), t.amount.as_major(), t.winner.to_string()))
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string_pretty(&self.inner).map_err(|e| py_err(e.into()))
    }

    fn __repr__(&self) -> String {
        format!(
            "Outcome(mechanism={}, revenue={}, rounds={})",
            self.inner.mechanism,
            self.inner.revenue(),
            self.inner.rounds_elapsed
        )
    }
}

#[pyfunction]
fn list_scenarios() -> Vec<String> {
    scenarios::catalog().iter().map(|e| e.name.to_owned()).collect()
}

fn sealed(bids: BTreeMap<String, BTreeMap<String, f64>>) -> PyResult<Vec<SealedBid>> {
    let mut out = Vec::new();
    for (bidder, per_license) in bids {
        for (license, amount) in per_license {
            out.push(SealedBid::new(&bidder, &license, money(amount)?));
        }
    }
    Ok(out)
}

/// First-price sealed bid on `bids` = {bidder: {license: amount}}.
#[pyfunction]
fn run_fpsb(scenario: &PyScenario, bids: BTreeMap<String, BTreeMap<String, f64>>) -> PyResult<PyOutcome> {
    let inner = mechanisms::run_fpsb(&scenario.inner, &sealed(bids)?).map_err(py_err)?;
    Ok(PyOutcome { inner })
}

/// Second-price sealed bid on `bids` = {bidder: {license: amount}}.
#[pyfunction]
fn run_vickrey(scenario: &PyScenario, bids: BTreeMap<String, BTreeMap<String, f64>>) -> PyResult<PyOutcome> {
    let inner = mechanisms::run_vickrey(&scenario.inner, &sealed(bids)?).map_err(py_err)?;
    Ok(PyOutcome { inner })
}

/// Metrics of `outcome` against `scenario` as a dict.
#[pyfunction]
fn score<'py>(py: Python<'py>, outcome: &PyOutcome, scenario: &PyScenario) -> PyResult<Bound<'py, PyDict>> {
    let m = metrics::score(&outcome.inner, &scenario.inner);
    let d = PyDict::new(py);
    d.set_item("mechanism", m.mechanism.to_string())?;
    d.set_item("seed", m.seed)?;
    d.set_item("revenue", m.revenue.as_major())?;
    d.set_item("welfare_achieved", m.welfare_achieved.as_major())?;
    d.set_item("welfare_optimal", m.welfare_optimal.map(Money::as_major))?;
    d.set_item("efficiency", m.efficiency)?;
    d.set_item("rounds", m.rounds)?;
    d.set_item("raise_rounds", m.raise_rounds)?;
    let gaps: BTreeMap<String, f64> = m
        .winners_curse_gap
        .iter()
        .map(|(l, g)| (l.to_string(), g.as_major()))
        .collect();
    d.set_item("winners_curse_gap", gaps)?;
    d.set_item("unsold_count", m.unsold_count)?;
    Ok(d)
}

/// `(mean, stderr)` of single-license revenue with IID Uniform[lo, hi] values.
#[pyfunction]
#[pyo3(signature = (mechanism, n_bidders, n_draws, seed, lo=0.0, hi=1.0))]
fn monte_carlo_revenue(mechanism: &str, n_bidders: usize, n_draws: usize, seed: u64, lo: f64, hi: f64) -> PyResult<(f64, f64)> {
    let config = MechanismConfig::new(kind(mechanism)?);
    let est = metrics::monte_carlo_revenue(&config, ValueDistribution::Uniform { lo, hi }, n_bidders, n_draws, seed)
        .map_err(py_err)?;
    Ok((est.mean, est.stderr))
}

#[pymodule]
fn spectra_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyOutcome>()?;
    m.add_function(wrap_pyfunction!(list_scenarios, m)?)?;
    m.add_function(wrap_pyfunction!(run_fpsb, m)?)?;
    m.add_function(wrap_pyfunction!(run_vickrey, m)?)?;
    m.add_function(wrap_pyfunction!(score, m)?)?;
    m.add_function(wrap_pyfunction!(monte_carlo_revenue, m)?)?;
    Ok(())
}
