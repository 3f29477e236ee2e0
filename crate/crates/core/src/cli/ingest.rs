use std::path::Path;

use log::warn;

use crate::core1d::{DiscreteMeasure1D, Grid1D};
use crate::error::{Error, Result};
use crate::ot2d::{Grid2D, Measure2D};

/// Histograms of one CSV file sharing a grid.
#[derive(Clone, Debug)]
pub struct HistogramSet {
    pub grid: Grid1D,
    pub names: Vec<String>,
    pub measures: Vec<DiscreteMeasure1D>,
    /// Raw integral of every column before normalization.
    pub raw_mass: Vec<f64>,
}

fn reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let f = std::fs::File::open(path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    Ok(csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(f))
}

fn number(s: &str, path: &Path, row: usize, col: usize) -> Result<f64> {
    s.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| Error::Validation(format!("{}: row {row}, column {col}: '{s}' is not a finite number", path.display())))
}

/// Reads `x,<name1>,<name2>,...`; each column is normalized to integral 1.
/// `omega` overrides the domain ends (it must contain the grid).
pub fn ingest_histograms(path: &Path, omega: Option<(f64, f64)>) -> Result<HistogramSet> {
    let mut rd = reader(path)?;
    let header = rd.headers()?.clone();
    if header.len() < 2 {
        return Err(Error::Validation(format!("{}: need a grid column and at least one histogram", path.display())));
    }
    let names: Vec<String> = header.iter().skip(1).map(|s| s.to_string()).collect();
    let mut xs = Vec::new();
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (r, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = r + 2;
        if rec.len() != header.len() {
            return Err(Error::Validation(format!("{}: row {row} has {} fields, expected {}", path.display(), rec.len(), header.len())));
        }
        let x = number(&rec[0], path, row, 1)?;
        if let Some(&prev) = xs.last() {
            if !(x > prev) {
                return Err(Error::Validation(format!("{}: row {row}: grid is not increasing ({x} after {prev})", path.display())));
            }
        }
        xs.push(x);
        for (c, col) in cols.iter_mut().enumerate() {
            let v = number(&rec[c + 1], path, row, c + 2)?;
            if v < 0.0 {
                return Err(Error::Validation(format!("{}: row {row}, column '{}': negative value {v}", path.display(), names[c])));
            }
            col.push(v);
        }
    }
    if xs.len() < 2 {
        return Err(Error::Validation(format!("{}: need at least 2 grid points", path.display())));
    }
    let grid = match omega {
        Some((a, b)) => Grid1D::new(xs, a, b)?,
        None => Grid1D::from_points(xs)?,
    };
    let mut measures = Vec::with_capacity(names.len());
    let mut raw_mass = Vec::with_capacity(names.len());
    for (name, col) in names.iter().zip(cols) {
        if col.iter().all(|v| *v == 0.0) {
            return Err(Error::Validation(format!("{}: column '{name}' is empty (all zero)", path.display())));
        }
        let (m, raw) = DiscreteMeasure1D::normalized(grid.clone(), col)?;
        if (raw - 1.0).abs() > 1e-6 {
            warn!("{}: column '{name}' integrates to {raw}; renormalized", path.display());
        }
        measures.push(m);
        raw_mass.push(raw);
    }
    Ok(HistogramSet { grid, names, measures, raw_mass })
}

/// Reads several histogram files that must share one grid.
pub fn ingest_many(paths: &[impl AsRef<Path>], omega: Option<(f64, f64)>) -> Result<HistogramSet> {
    let mut iter = paths.iter();
    let first = iter.next().ok_or_else(|| Error::Validation("no input files".into()))?;
    let mut set = ingest_histograms(first.as_ref(), omega)?;
    for p in iter {
        let next = ingest_histograms(p.as_ref(), omega)?;
        if !next.grid.same_as(&set.grid) {
            return Err(Error::Validation(format!(
                "{}: grid ({} points on [{}, {}]) differs from {} ({} points on [{}, {}])",
                p.as_ref().display(),
                next.grid.len(),
                next.grid.a(),
                next.grid.b(),
                first.as_ref().display(),
                set.grid.len(),
                set.grid.a(),
                set.grid.b()
            )));
        }
        set.names.extend(next.names);
        set.measures.extend(next.measures);
        set.raw_mass.extend(next.raw_mass);
    }
    Ok(set)
}

/// Reads one 2D measure from rows `i,j,weight` (row index, column index);
/// missing cells are zero. A header line is optional.
pub fn ingest_measure_2d(path: &Path) -> Result<(Measure2D, f64)> {
    let f = std::fs::File::open(path).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    let mut rd = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .has_headers(false)
        .from_reader(f);
    let mut cells = Vec::new();
    for (r, rec) in rd.records().enumerate() {
        let rec = rec?;
        let row = r + 1;
        if r == 0 && rec.get(0).map_or(false, |s| s.parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() != 3 {
            return Err(Error::Validation(format!("{}: row {row} has {} fields, expected i,j,weight", path.display(), rec.len())));
        }
        let idx = |k: usize| -> Result<usize> {
            rec[k]
                .parse::<usize>()
                .map_err(|_| Error::Validation(format!("{}: row {row}: '{}' is not a grid index", path.display(), &rec[k])))
        };
        let (i, j) = (idx(0)?, idx(1)?);
        let w = number(&rec[2], path, row, 3)?;
        if w < 0.0 {
            return Err(Error::Validation(format!("{}: row {row}: negative weight {w}", path.display())));
        }
        cells.push((i, j, w, row));
    }
    let rows = cells.iter().map(|c| c.0 + 1).max().unwrap_or(0);
    let cols = cells.iter().map(|c| c.1 + 1).max().unwrap_or(0);
    let grid = Grid2D::pixels(rows, cols).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    let mut w = vec![f64::NAN; grid.len()];
    for &(i, j, x, row) in &cells {
        let k = grid.index(i, j);
        if !w[k].is_nan() {
            return Err(Error::Validation(format!("{}: row {row}: cell ({i}, {j}) given twice", path.display())));
        }
        w[k] = x;
    }
    w.iter_mut().filter(|x| x.is_nan()).for_each(|x| *x = 0.0);
    let (m, raw) = Measure2D::normalized(grid, w).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))?;
    if (raw - 1.0).abs() > 1e-6 {
        warn!("{}: weights sum to {raw}; renormalized", path.display());
    }
    Ok((m, raw))
}

/// One measure per file, all on the same lattice.
pub fn ingest_many_2d(paths: &[impl AsRef<Path>]) -> Result<Vec<Measure2D>> {
    let mut out: Vec<Measure2D> = Vec::with_capacity(paths.len());
    for p in paths {
        let (m, _) = ingest_measure_2d(p.as_ref())?;
        if let Some(first) = out.first() {
            if first.grid() != m.grid() {
                return Err(Error::Validation(format!(
                    "{}: lattice {}x{} differs from the first file's {}x{}",
                    p.as_ref().display(),
                    m.grid().rows,
                    m.grid().cols,
                    first.grid().rows,
                    first.grid().cols
                )));
            }
        }
        out.push(m);
    }
    if out.is_empty() {
        return Err(Error::Validation("no input files".into()));
    }
    Ok(out)
}
