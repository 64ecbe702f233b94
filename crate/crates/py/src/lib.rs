//! Python module `pccd`: codec, schedule, oracle reconstruction and pair
//! evaluation. Tensors cross the boundary as flat lists of 1152 floats in
//! channel, point, component order.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use pccd_core::codec::{self, DbscanParams, ElementSlots, PointCloudTensor};
use pccd_core::crystal::{parse_poscar, write_poscar, CrystalStructure};
use pccd_core::diffusion::{self, NoiseSchedule, OraclePredictor};
use pccd_core::eval::{evaluate_pair, EvalOptions};

fn err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn structure(poscar: &str) -> PyResult<CrystalStructure> {
    parse_poscar(poscar).map_err(err)
}

fn slots_for(s: &CrystalStructure, slots: Option<&str>) -> PyResult<ElementSlots> {
    match slots {
        Some(list) => ElementSlots::parse(list).map_err(err),
        None => ElementSlots::for_structure(s).map_err(err),
    }
}

/// encode(poscar, slots=None) -> (tensor, slot symbols)
#[pyfunction]
#[pyo3(signature = (poscar, slots=None))]
fn encode(poscar: &str, slots: Option<&str>) -> PyResult<(Vec<f64>, Vec<String>)> {
    let s = structure(poscar)?;
    let slots = slots_for(&s, slots)?;
    let x = codec::encode(&s, &slots).map_err(err)?;
    Ok((x.into_vec(), slots.symbols().to_vec()))
}

/// decode(tensor, slots, eps=0.05, min_pts=3) -> POSCAR text
#[pyfunction]
#[pyo3(signature = (tensor, slots, eps=0.05, min_pts=3))]
fn decode(tensor: Vec<f64>, slots: Vec<String>, eps: f64, min_pts: usize) -> PyResult<String> {
    let x = PointCloudTensor::from_vec(tensor).map_err(err)?;
    let slots = ElementSlots::new(&slots).map_err(err)?;
    let params = DbscanParams::new(eps, min_pts).map_err(err)?;
    let d = codec::decode(&x, &slots, &params).map_err(err)?;
    Ok(write_poscar(&d.structure))
}

/// cosine_schedule(steps=1000, offset=0.008) -> (betas, alpha_bars)
#[pyfunction]
#[pyo3(signature = (steps=1000, offset=0.008))]
fn cosine_schedule(steps: usize, offset: f64) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let sch = NoiseSchedule::cosine(steps, offset).map_err(err)?;
    Ok((sch.betas().to_vec(), sch.alpha_bars().to_vec()))
}

/// Noises the encoded structure to step T and denoises it with the exact
/// noise oracle; returns the final tensor.
#[pyfunction]
#[pyo3(signature = (tensor, seed, steps=1000))]
fn reconstruct_oracle(py: Python<'_>, tensor: Vec<f64>, seed: u64, steps: usize) -> PyResult<Vec<f64>> {
    let x0 = PointCloudTensor::from_vec(tensor).map_err(err)?;
    let sch = NoiseSchedule::cosine(steps, diffusion::DEFAULT_OFFSET).map_err(err)?;
    let out = py.detach(|| diffusion::reconstruct(&x0, &OraclePredictor { x0: &x0, schedule: &sch }, &sch, seed, None));
    Ok(out.map_err(err)?.into_vec())
}

/// evaluate(original, predicted) -> dict of match results and distances
#[pyfunction]
fn evaluate<'py>(py: Python<'py>, original: &str, predicted: &str) -> PyResult<Bound<'py, PyDict>> {
    let (o, p) = (structure(original)?, structure(predicted)?);
    let r = evaluate_pair("pair", &o, &p, &EvalOptions::default());
    let d = PyDict::new(py);
    d.set_item("matched", r.matched)?;
    d.set_item("original_sites", r.original_sites)?;
    d.set_item("predicted_sites", r.predicted_sites)?;
    d.set_item("lattice_rel_err", r.lattice_rel_err.to_vec())?;
    d.set_item("mean_abs_coord_err", r.mean_abs_coord_err())?;
    if let Some(dist) = r.distances {
        d.set_item("superpose", dist.superpose)?;
        d.set_item("rms_anon", dist.rms_anonymous)?;
        d.set_item("ged", dist.graph_edit.distance)?;
        d.set_item("ged_exact", dist.graph_edit.exact)?;
    }
    Ok(d)
}

#[pymodule]
fn pccd(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("TENSOR_LEN", codec::TENSOR_LEN)?;
    m.add_function(wrap_pyfunction!(encode, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    m.add_function(wrap_pyfunction!(cosine_schedule, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
