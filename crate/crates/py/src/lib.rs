//! Python bindings. Structured results cross the boundary as JSON strings
//! (`json.loads` them), simple values as Python scalars.

use std::path::PathBuf;
use std::sync::Arc;

use mdsw_core::session::{CaseHeader, SessionError, SessionService};
use mdsw_core::{
    compile_to_decision_table, evaluate, parse_rulebook, serialize_rulebook, shipped,
    validate_rulebook, AssessmentCase, ClassificationProfile, DerivedRegistry, EvidenceItem,
    ReportFormat, RiskClass,
};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(
    mdsw,
    MdswError,
    PyException,
    "Evaluation or session failure."
);

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn session_error(e: SessionError) -> PyErr {
    MdswError::new_err(format!("{}: {e}", e.code()))
}

fn to_json<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("serializable")
}

/// A parsed rulepack.
#[pyclass(module = "mdsw", frozen)]
struct Rulebook {
    inner: mdsw_core::Rulebook,
}

#[pymethods]
impl Rulebook {
    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Rulebook {
            inner: parse_rulebook(text).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let text = std::fs::read_to_string(&path)
            .map_err(|e| value_error(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// One of the rulepacks bundled with the engine.
    #[staticmethod]
    fn shipped(id: &str) -> PyResult<Self> {
        shipped::all()
            .into_iter()
            .find(|rb| rb.id == id)
            .map(|inner| Rulebook { inner })
            .ok_or_else(|| value_error(format!("no shipped rulebook `{id}`")))
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    #[getter]
    fn version(&self) -> &str {
        &self.inner.version
    }

    /// Question node ids in rulebook order.
    fn questions(&self) -> Vec<String> {
        self.inner.questions().map(|n| n.id.to_string()).collect()
    }

    /// Validation issues as a JSON array.
    fn validate(&self) -> String {
        to_json(&validate_rulebook(&self.inner))
    }

    fn serialize(&self) -> String {
        serialize_rulebook(&self.inner)
    }

    fn decision_table_csv(&self) -> PyResult<String> {
        Ok(compile_to_decision_table(&self.inner)
            .map_err(value_error)?
            .to_csv())
    }

    fn evaluate(&self, case: &Case) -> PyResult<Verdict> {
        let inner = evaluate(&case.inner, &self.inner, &DerivedRegistry::builtin())
            .map_err(|e| MdswError::new_err(e.to_string()))?;
        Ok(Verdict {
            inner,
            case: case.inner.clone(),
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Rulebook({:?}, version={:?})",
            self.inner.id, self.inner.version
        )
    }
}

/// An assessment case: evidence, answers and an optional risk profile.
#[pyclass(module = "mdsw")]
struct Case {
    inner: AssessmentCase,
}

#[pymethods]
impl Case {
    #[new]
    #[pyo3(signature = (id, name = String::new()))]
    fn new(id: String, name: String) -> Self {
        Case {
            inner: AssessmentCase::new(id, name),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Case {
            inner: AssessmentCase::from_json(text).map_err(value_error)?,
        })
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Case {
            inner: AssessmentCase::load(&path).map_err(value_error)?,
        })
    }

    fn to_json(&self) -> String {
        self.inner.to_json_pretty()
    }

    #[getter]
    fn id(&self) -> &str {
        &self.inner.id
    }

    fn answer(&mut self, node: &str, value: bool) {
        self.inner.answers.insert(node.into(), value);
    }

    /// Add an evidence item given as JSON.
    fn add_evidence(&mut self, item_json: &str) -> PyResult<()> {
        let item: EvidenceItem = serde_json::from_str(item_json).map_err(value_error)?;
        let mut evidence = self.inner.evidence.clone();
        evidence.push(item);
        if let Some(i) = mdsw_core::evidence::validate_evidence_set(&evidence).first() {
            return Err(value_error(&i.message));
        }
        self.inner.evidence = evidence;
        Ok(())
    }

    /// Intention resolution as JSON.
    fn intention(&self) -> String {
        to_json(&mdsw_core::intention::resolve_case(&self.inner))
    }

    #[pyo3(signature = (flags, linked_device_class = None))]
    fn set_profile(&mut self, flags: u8, linked_device_class: Option<&str>) -> PyResult<()> {
        if flags >= 64 {
            return Err(value_error("flags must be below 64"));
        }
        self.inner.classification_profile = Some(ClassificationProfile::from_bits(flags));
        self.inner.linked_device_class = linked_device_class
            .map(|c| c.parse::<RiskClass>().map_err(value_error))
            .transpose()?;
        Ok(())
    }
}

/// Result of evaluating a case.
#[pyclass(module = "mdsw", frozen)]
struct Verdict {
    inner: mdsw_core::Verdict,
    case: AssessmentCase,
}

#[pymethods]
impl Verdict {
    #[getter]
    fn qualification(&self) -> &'static str {
        self.inner.qualification.as_str()
    }

    #[getter]
    fn exit_node(&self) -> String {
        self.inner.exit_node.to_string()
    }

    #[getter]
    fn leaf(&self) -> String {
        self.inner.leaf.to_string()
    }

    #[getter]
    fn risk_class(&self) -> Option<&'static str> {
        self.inner.risk_class.map(RiskClass::as_str)
    }

    fn to_json(&self) -> String {
        to_json(&self.inner)
    }

    /// Report in `json` or `md`.
    #[pyo3(signature = (format = "md"))]
    fn report(&self, format: &str) -> PyResult<String> {
        let format: ReportFormat = format.parse().map_err(value_error)?;
        let report = mdsw_core::Report::new(&self.case, &self.inner);
        Ok(mdsw_core::render_report(&report, format))
    }

    fn __repr__(&self) -> String {
        format!(
            "Verdict({}, exit_node={:?})",
            self.inner.qualification,
            self.inner.exit_node.as_str()
        )
    }
}

/// Rule 11 class for a profile given as flag bits (bit 0 = informs
/// diagnosis/therapy, then death, serious deterioration, monitoring,
/// immediate harm, drives a device).
#[pyfunction]
#[pyo3(signature = (flags, linked_device_class = None))]
fn classify(flags: u8, linked_device_class: Option<&str>) -> PyResult<&'static str> {
    if flags >= 64 {
        return Err(value_error("flags must be below 64"));
    }
    let linked = linked_device_class
        .map(|c| c.parse::<RiskClass>().map_err(value_error))
        .transpose()?;
    let (class, _) = mdsw_core::classify(&ClassificationProfile::from_bits(flags), linked)
        .map_err(value_error)?;
    Ok(class.as_str())
}

/// File-backed session service. Methods return JSON.
#[pyclass(module = "mdsw", name = "SessionService", frozen)]
struct PySessionService {
    inner: Arc<SessionService>,
}

#[pymethods]
impl PySessionService {
    #[new]
    fn new(data_dir: PathBuf) -> PyResult<Self> {
        Ok(PySessionService {
            inner: Arc::new(SessionService::open(&data_dir).map_err(session_error)?),
        })
    }

    fn rulebooks(&self) -> String {
        to_json(&self.inner.rulebooks())
    }

    #[pyo3(signature = (rulebook, name = String::new()))]
    fn create_session(&self, rulebook: &str, name: String) -> PyResult<String> {
        let header = CaseHeader {
            name,
            ..CaseHeader::default()
        };
        let view = self
            .inner
            .create_session(rulebook, header)
            .map_err(session_error)?;
        Ok(to_json(&view))
    }

    fn get_session(&self, id: &str) -> PyResult<String> {
        Ok(to_json(&self.inner.get_session(id).map_err(session_error)?))
    }

    fn submit_answer(&self, id: &str, node: &str, answer: bool) -> PyResult<String> {
        let view = self
            .inner
            .submit_answer(id, node, answer)
            .map_err(session_error)?;
        Ok(to_json(&view))
    }

    fn attach_evidence(&self, id: &str, item_json: &str) -> PyResult<String> {
        let item: EvidenceItem = serde_json::from_str(item_json).map_err(value_error)?;
        Ok(to_json(
            &self
                .inner
                .attach_evidence(id, item)
                .map_err(session_error)?,
        ))
    }

    fn get_verdict(&self, id: &str) -> PyResult<String> {
        Ok(to_json(&self.inner.get_verdict(id).map_err(session_error)?))
    }

    #[pyo3(signature = (id, format = "md"))]
    fn report(&self, id: &str, format: &str) -> PyResult<String> {
        let format: ReportFormat = format.parse().map_err(value_error)?;
        self.inner.render_report(id, format).map_err(session_error)
    }
}

#[pymodule]
fn mdsw(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Rulebook>()?;
    m.add_class::<Case>()?;
    m.add_class::<Verdict>()?;
    m.add_class::<PySessionService>()?;
    m.add_function(wrap_pyfunction!(classify, m)?)?;
    m.add("MdswError", m.py().get_type::<MdswError>())?;
    m.add(
        "SHIPPED_RULEBOOKS",
        vec![shipped::MDR_ID, shipped::MEDDEV_ID],
    )?;
    Ok(())
}
