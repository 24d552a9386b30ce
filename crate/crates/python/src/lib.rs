use pyo3::prelude::*;

#[pymodule]
fn lgc(_py: Python<'_>, _m: &Bound<'_, PyModule>) -> PyResult<()> { Ok(()) }
