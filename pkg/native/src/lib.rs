//! Thin tree-sitter facade exposed to Python.
//!
//! Exposes exactly what the linter and graph builder need: grammar lookup,
//! query compilation diagnostics, query-match capture spans (byte offsets),
//! and top-level node ranges. Inline text predicates (#match?, #eq?, ...)
//! are evaluated by the matches iterator, which is why it takes the source.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use streaming_iterator::StreamingIterator;
use tree_sitter::{Language, Parser, Query, QueryCursor};

const LANGUAGE_NAMES: [&str; 6] = ["python", "javascript", "typescript", "tsx", "go", "rust"];

fn language(name: &str) -> PyResult<Language> {
    match name {
        "python" => Ok(tree_sitter_python::LANGUAGE.into()),
        "javascript" => Ok(tree_sitter_javascript::LANGUAGE.into()),
        "typescript" => Ok(tree_sitter_typescript::LANGUAGE_TYPESCRIPT.into()),
        "tsx" => Ok(tree_sitter_typescript::LANGUAGE_TSX.into()),
        "go" => Ok(tree_sitter_go::LANGUAGE.into()),
        "rust" => Ok(tree_sitter_rust::LANGUAGE.into()),
        other => Err(PyValueError::new_err(format!("unknown language: {other}"))),
    }
}

/// Grammar names accepted by the other functions.
#[pyfunction]
fn languages() -> Vec<String> {
    LANGUAGE_NAMES.iter().map(|s| s.to_string()).collect()
}

/// None when the query compiles under the grammar, else the compiler message.
#[pyfunction]
fn query_error(lang: &str, query: &str) -> PyResult<Option<String>> {
    let l = language(lang)?;
    match Query::new(&l, query) {
        Ok(_) => Ok(None),
        Err(e) => Ok(Some(e.to_string())),
    }
}

/// All query matches over the source: (pattern_index, [(capture, start, end)]).
#[pyfunction]
fn query_matches(
    lang: &str,
    source: &[u8],
    query: &str,
) -> PyResult<Vec<(usize, Vec<(String, usize, usize)>)>> {
    let l = language(lang)?;
    let mut parser = Parser::new();
    parser
        .set_language(&l)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let tree = parser
        .parse(source, None)
        .ok_or_else(|| PyValueError::new_err("parse failed"))?;
    let q = Query::new(&l, query).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let names = q.capture_names();
    let mut cursor = QueryCursor::new();
    let mut out = Vec::new();
    let mut it = cursor.matches(&q, tree.root_node(), source);
    while let Some(m) = it.next() {
        let caps = m
            .captures
            .iter()
            .map(|c| {
                (
                    names[c.index as usize].to_string(),
                    c.node.start_byte(),
                    c.node.end_byte(),
                )
            })
            .collect();
        out.push((m.pattern_index, caps));
    }
    Ok(out)
}

/// Byte ranges of the root node's named children (top-level declarations).
#[pyfunction]
fn top_level_ranges(lang: &str, source: &[u8]) -> PyResult<Vec<(usize, usize)>> {
    let l = language(lang)?;
    let mut parser = Parser::new();
    parser
        .set_language(&l)
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let tree = parser
        .parse(source, None)
        .ok_or_else(|| PyValueError::new_err("parse failed"))?;
    let root = tree.root_node();
    let mut cursor = root.walk();
    let out = root
        .named_children(&mut cursor)
        .map(|n| (n.start_byte(), n.end_byte()))
        .collect();
    Ok(out)
}

#[pymodule]
#[pyo3(name = "_treesitter")]
fn contextcov_native(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(languages, m)?)?;
    m.add_function(wrap_pyfunction!(query_error, m)?)?;
    m.add_function(wrap_pyfunction!(query_matches, m)?)?;
    m.add_function(wrap_pyfunction!(top_level_ranges, m)?)?;
    Ok(())
}
