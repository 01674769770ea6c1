//! Dense matrix files (CSV and MatrixMarket array format) and constraint files.
//!
//! Constraint files are line oriented; `#` starts a comment:
//!
//! ```text
//! factor H                 # following linear lines apply to H (the default)
//! linear 1 0,0:1 1,0:1     # rhs, then row,col:weight (weight defaults to 1)
//! factor W
//! linear 2 0,1 1,1:0.5
//! sphere 0 1.0             # column of W, squared radius
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use crate::constraints::{ConstraintSet, LinearConstraint, SphereConstraint};
use crate::error::{Error, Result};

fn is_matrix_market(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("mtx"))
}

fn parse_err(path: &Path, line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        col,
        msg: msg.into(),
    }
}

/// Reads a dense matrix; `.mtx` files are MatrixMarket, anything else CSV.
pub fn load_matrix(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if is_matrix_market(path) {
        parse_matrix_market(&text, path)
    } else {
        parse_csv(&text, path)
    }
}

fn parse_csv(text: &str, path: &Path) -> Result<Array2<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, 0, e.to_string())
        })?;
        let line = record.position().map_or(rows + 1, |p| p.line() as usize);
        if record.iter().all(|c| c.is_empty()) {
            continue;
        }
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(parse_err(
                    path,
                    line,
                    record.len().min(c) + 1,
                    format!("expected {c} cells, found {}", record.len()),
                ))
            }
            _ => {}
        }
        for (j, cell) in record.iter().enumerate() {
            let x: f64 = cell
                .parse()
                .map_err(|_| parse_err(path, line, j + 1, format!("not a number: '{cell}'")))?;
            if !x.is_finite() {
                return Err(parse_err(path, line, j + 1, format!("non-finite value '{cell}'")));
            }
            data.push(x);
        }
        rows += 1;
    }
    let cols = cols.ok_or_else(|| parse_err(path, 1, 1, "empty matrix"))?;
    Array2::from_shape_vec((rows, cols), data).map_err(|e| parse_err(path, 0, 0, e.to_string()))
}

fn parse_matrix_market(text: &str, path: &Path) -> Result<Array2<f64>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| parse_err(path, 1, 1, "empty file"))?;
    let fields: Vec<String> = header.split_whitespace().map(|s| s.to_ascii_lowercase()).collect();
    if fields.len() < 5
        || fields[0] != "%%matrixmarket"
        || fields[1] != "matrix"
        || fields[2] != "array"
        || fields[3] != "real"
        || fields[4] != "general"
    {
        return Err(parse_err(
            path,
            1,
            1,
            "expected '%%MatrixMarket matrix array real general'",
        ));
    }
    let mut body = lines.filter(|(_, l)| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('%')
    });
    let (ln, size) = body.next().ok_or_else(|| parse_err(path, 2, 1, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|s| s.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(path, ln + 1, 1, format!("bad size line '{size}'")))?;
    if dims.len() != 2 {
        return Err(parse_err(path, ln + 1, 1, "size line needs rows and columns"));
    }
    let (rows, cols) = (dims[0], dims[1]);
    let mut m = Array2::<f64>::zeros((rows, cols));
    let mut count = 0;
    for (ln, l) in body {
        for tok in l.split_whitespace() {
            if count >= rows * cols {
                return Err(parse_err(path, ln + 1, 1, "more values than the declared size"));
            }
            let x: f64 = tok
                .parse()
                .map_err(|_| parse_err(path, ln + 1, 1, format!("not a number: '{tok}'")))?;
            m[[count % rows, count / rows]] = x;
            count += 1;
        }
    }
    if count != rows * cols {
        return Err(parse_err(
            path,
            text.lines().count(),
            1,
            format!("expected {} values, found {count}", rows * cols),
        ));
    }
    Ok(m)
}

/// Writes a dense matrix with 17 significant digits so that reloading is exact.
pub fn save_matrix(m: &Array2<f64>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    if is_matrix_market(path) {
        out.push_str("%%MatrixMarket matrix array real general\n");
        let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
        for j in 0..m.ncols() {
            for i in 0..m.nrows() {
                let _ = writeln!(out, "{:.16e}", m[[i, j]]);
            }
        }
    } else {
        for row in m.rows() {
            let cells: Vec<String> = row.iter().map(|x| format!("{x:.16e}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Loads a data matrix and rejects negative entries, naming the first one found.
pub fn load_data(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let v = load_matrix(path)?;
    if let Some(((i, j), x)) = v.indexed_iter().find(|(_, x)| **x < 0.0) {
        return Err(Error::DomainAt {
            row: i,
            col: j,
            msg: format!("negative data entry {x} in {}", path.display()),
        });
    }
    Ok(v)
}

/// Constraints read from a file, split by factor.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintFile {
    pub w: ConstraintSet,
    pub h: ConstraintSet,
}

pub fn load_constraints(path: impl AsRef<Path>) -> Result<ConstraintFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_constraints(&text, path)
}

/// Parses the constraint text format; `origin` only labels error messages.
pub fn parse_constraints(text: &str, origin: &Path) -> Result<ConstraintFile> {
    let mut out = ConstraintFile::default();
    let mut target_w = false;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("");
        let tokens: Vec<(usize, &str)> = tokenize(line);
        let Some(&(kcol, keyword)) = tokens.first() else {
            continue;
        };
        let err = |col: usize, msg: String| parse_err(origin, ln + 1, col, msg);
        match keyword {
            "factor" => {
                let (c, which) = tokens.get(1).copied().ok_or_else(|| err(kcol, "factor needs W or H".into()))?;
                target_w = match which {
                    "W" | "w" => true,
                    "H" | "h" => false,
                    other => return Err(err(c, format!("unknown factor '{other}'"))),
                };
                if let Some(&(c, _)) = tokens.get(2) {
                    return Err(err(c, "unexpected token".into()));
                }
            }
            "linear" => {
                let (c, rhs_tok) = tokens.get(1).copied().ok_or_else(|| err(kcol, "linear needs a right-hand side".into()))?;
                let rhs: f64 = rhs_tok.parse().map_err(|_| err(c, format!("bad right-hand side '{rhs_tok}'")))?;
                let mut pairs = Vec::new();
                let mut weights = Vec::new();
                for &(c, tok) in &tokens[2..] {
                    let (idx, weight) = match tok.split_once(':') {
                        Some((i, w)) => (i, w.parse::<f64>().map_err(|_| err(c, format!("bad weight in '{tok}'")))?),
                        None => (tok, 1.0),
                    };
                    let (r, cc) = idx.split_once(',').ok_or_else(|| err(c, format!("expected row,col in '{tok}'")))?;
                    let r: usize = r.trim().parse().map_err(|_| err(c, format!("bad row in '{tok}'")))?;
                    let cc: usize = cc.trim().parse().map_err(|_| err(c, format!("bad column in '{tok}'")))?;
                    pairs.push((r, cc));
                    weights.push(weight);
                }
                let lc = LinearConstraint::new(pairs, weights, rhs);
                if target_w {
                    out.w.linear.push(lc);
                } else {
                    out.h.linear.push(lc);
                }
            }
            "sphere" => {
                if tokens.len() != 3 {
                    return Err(err(kcol, "sphere needs a column and a squared radius".into()));
                }
                let (c1, col_tok) = tokens[1];
                let (c2, rho_tok) = tokens[2];
                let column: usize = col_tok.parse().map_err(|_| err(c1, format!("bad column '{col_tok}'")))?;
                let radius_sq: f64 = rho_tok.parse().map_err(|_| err(c2, format!("bad radius '{rho_tok}'")))?;
                out.w.spheres.push(SphereConstraint { column, radius_sq });
            }
            other => return Err(err(kcol, format!("unknown directive '{other}'"))),
        }
    }
    Ok(out)
}

/// Whitespace-separated tokens with their 1-based character column.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((line[..s].chars().count() + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((line[..s].chars().count() + 1, &line[s..]));
    }
    out
}
