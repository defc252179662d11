use std::fmt::Write as _;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("table {0}: empty grid")]
    EmptyGrid(String),
    #[error("table {name}: column {column} has {got} rows for {want} grid points")]
    Length { name: String, column: String, got: usize, want: usize },
    #[error("table {name}: {source}")]
    Io { name: String, source: std::io::Error },
}

/// Renders `x,<cols>` CSV with 17 significant digits and LF endings.
pub fn render_table(name: &str, x: &[f64], columns: &[(&str, Vec<f64>)]) -> Result<String, TableError> {
    if x.is_empty() {
        return Err(TableError::EmptyGrid(name.into()));
    }
    for (c, v) in columns {
        if v.len() != x.len() {
            return Err(TableError::Length { name: name.into(), column: (*c).into(), got: v.len(), want: x.len() });
        }
    }
    let mut out = String::with_capacity(x.len() * 24 * (columns.len() + 1));
    out.push('x');
    for (c, _) in columns {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (i, xi) in x.iter().enumerate() {
        write!(out, "{xi:.16e}").expect("string write");
        for (_, v) in columns {
            write!(out, ",{:.16e}", v[i]).expect("string write");
        }
        out.push('\n');
    }
    Ok(out)
}

/// Writes `<dir>/<name>.csv` and returns its path.
pub fn emit_table(dir: &Path, name: &str, x: &[f64], columns: &[(&str, Vec<f64>)]) -> Result<PathBuf, TableError> {
    let text = render_table(name, x, columns)?;
    let path = dir.join(format!("{name}.csv"));
    std::fs::write(&path, text).map_err(|source| TableError::Io { name: name.into(), source })?;
    Ok(path)
}
