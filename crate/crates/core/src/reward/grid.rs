use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::geom::Vec2;
use crate::scalar::{from_usize, lit, Real};

use super::Rect;

/// Discrete reward map on a regular grid.
///
/// Cell `(i, j)` is column `i` counted from the west edge and row `j` counted
/// from the south edge; its center sits at `((i + ½)·s, (j + ½)·s)` in a world
/// frame whose origin is the lower-left corner of the map.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap<T> {
    width_m: T,
    height_m: T,
    cell_size_m: T,
    nx: usize,
    ny: usize,
    /// Row-major, south row first.
    values: Vec<T>,
}

fn cell_count<T: Real>(extent: T, cell: T, what: &str) -> Result<usize> {
    let ratio = extent / cell;
    let n = ratio.round();
    if !(ratio.is_finite() && n >= T::one() && (ratio - n).abs() <= lit::<T>(1e-9) * n) {
        return Err(Error::InvalidMap(format!(
            "{what} {extent} is not a positive multiple of the cell size {cell}"
        )));
    }
    Ok(n.to_usize().unwrap_or(0))
}

impl<T: Real> GridMap<T> {
    /// Builds a map from south-first rows. Validates dimensions and non-negativity.
    pub fn new(width_m: T, height_m: T, cell_size_m: T, values: Vec<T>) -> Result<Self> {
        if !(cell_size_m > T::zero() && cell_size_m.is_finite()) {
            return Err(Error::InvalidMap(format!("cell size {cell_size_m} must be positive")));
        }
        let nx = cell_count(width_m, cell_size_m, "width")?;
        let ny = cell_count(height_m, cell_size_m, "height")?;
        if values.len() != nx * ny {
            return Err(Error::InvalidMap(format!(
                "expected {} values for {nx}x{ny} cells, got {}",
                nx * ny,
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(*v >= T::zero() && v.is_finite())) {
            return Err(Error::InvalidMap(format!(
                "cell ({}, {}) has invalid value {}",
                k % nx,
                k / nx,
                values[k]
            )));
        }
        Ok(Self {
            width_m,
            height_m,
            cell_size_m,
            nx,
            ny,
            values,
        })
    }

    /// Rasterizes `f` at cell centers.
    pub fn from_fn(width_m: T, height_m: T, cell_size_m: T, f: impl Fn(Vec2<T>) -> T) -> Result<Self> {
        let nx = cell_count(width_m, cell_size_m, "width")?;
        let ny = cell_count(height_m, cell_size_m, "height")?;
        let half = lit::<T>(0.5);
        let mut values = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                let c = Vec2::new(
                    (from_usize::<T>(i) + half) * cell_size_m,
                    (from_usize::<T>(j) + half) * cell_size_m,
                );
                values.push(f(c));
            }
        }
        Self::new(width_m, height_m, cell_size_m, values)
    }

    pub fn width_m(&self) -> T {
        self.width_m
    }

    pub fn height_m(&self) -> T {
        self.height_m
    }

    pub fn cell_size_m(&self) -> T {
        self.cell_size_m
    }

    /// Number of columns.
    pub fn nx(&self) -> usize {
        self.nx
    }

    /// Number of rows.
    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, i: usize, j: usize) -> T {
        self.values[j * self.nx + i]
    }

    /// World coordinates of the center of cell `(0, 0)`.
    pub fn origin(&self) -> Vec2<T> {
        self.cell_center(0, 0)
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Vec2<T> {
        let half = lit::<T>(0.5);
        Vec2::new(
            (from_usize::<T>(i) + half) * self.cell_size_m,
            (from_usize::<T>(j) + half) * self.cell_size_m,
        )
    }

    pub fn domain(&self) -> Rect<T> {
        Rect::new(Vec2::zero(), Vec2::new(self.width_m, self.height_m))
    }

    pub fn total_mass(&self) -> T {
        self.values.iter().copied().sum()
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    /// Cells as `(center, value)` in storage order.
    pub fn cells(&self) -> impl Iterator<Item = (Vec2<T>, T)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (self.cell_center(i, j), self.value(i, j))))
    }

    /// Parses the text grid format: a `width_m height_m cell_size_m` header
    /// followed by rows of values, northmost row first.
    pub fn parse(text: &str) -> Result<Self> {
        Self::read(text.as_bytes())
    }

    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader
            .lines()
            .enumerate()
            .map(|(k, l)| (k + 1, l))
            .filter(|(_, l)| l.as_ref().map_or(true, |s| !s.trim().is_empty()));

        let (hline, header) = match lines.next() {
            Some((n, l)) => (n, l?),
            None => {
                return Err(Error::Parse {
                    line: 1,
                    column: 1,
                    message: "missing header".into(),
                })
            }
        };
        let fields: Vec<&str> = header.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: hline,
                column: 1,
                message: format!("header needs `width_m height_m cell_size_m`, found {} fields", fields.len()),
            });
        }
        let mut dims = [T::zero(); 3];
        for (c, (f, d)) in fields.iter().zip(dims.iter_mut()).enumerate() {
            *d = f.parse::<T>().map_err(|_| Error::Parse {
                line: hline,
                column: c + 1,
                message: format!("malformed header value `{f}`"),
            })?;
            if !(*d > T::zero() && d.is_finite()) {
                return Err(Error::Parse {
                    line: hline,
                    column: c + 1,
                    message: format!("header value `{f}` must be positive"),
                });
            }
        }
        let [w, h, s] = dims;
        let mismatch = |message: String| Error::Parse {
            line: hline,
            column: 1,
            message,
        };
        let nx = cell_count(w, s, "width").map_err(|e| mismatch(e.to_string()))?;
        let ny = cell_count(h, s, "height").map_err(|e| mismatch(e.to_string()))?;

        let mut rows: Vec<Vec<T>> = Vec::with_capacity(ny);
        let mut last_line = hline;
        for (lineno, line) in lines {
            let line = line?;
            last_line = lineno;
            if rows.len() == ny {
                return Err(Error::Parse {
                    line: lineno,
                    column: 1,
                    message: format!("dimension mismatch: more than {ny} rows"),
                });
            }
            let mut row = Vec::with_capacity(nx);
            for (c, tok) in line.split_whitespace().enumerate() {
                let v = tok.parse::<T>().map_err(|_| Error::Parse {
                    line: lineno,
                    column: c + 1,
                    message: format!("malformed value `{tok}`"),
                })?;
                if !(v >= T::zero() && v.is_finite()) {
                    return Err(Error::Parse {
                        line: lineno,
                        column: c + 1,
                        message: format!("negative or non-finite cell value `{tok}`"),
                    });
                }
                row.push(v);
            }
            if row.len() != nx {
                return Err(Error::Parse {
                    line: lineno,
                    column: row.len().min(nx) + 1,
                    message: format!("dimension mismatch: expected {nx} values, found {}", row.len()),
                });
            }
            rows.push(row);
        }
        if rows.len() != ny {
            return Err(Error::Parse {
                line: last_line + 1,
                column: 1,
                message: format!("dimension mismatch: expected {ny} rows, found {}", rows.len()),
            });
        }
        let values = rows.into_iter().rev().flatten().collect();
        Self::new(w, h, s, values)
    }

    /// Writes the grid format. Values use shortest round-trip formatting.
    pub fn write(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "{} {} {}", self.width_m, self.height_m, self.cell_size_m)?;
        for j in (0..self.ny).rev() {
            let row = &self.values[j * self.nx..(j + 1) * self.nx];
            let mut first = true;
            for v in row {
                if !first {
                    out.write_all(b" ")?;
                }
                first = false;
                write!(out, "{v}")?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf).expect("write to Vec");
        String::from_utf8(buf).expect("utf8")
    }
}

/// One `(cell center, weight)` entry per nonzero cell, weights summing to 1.
pub fn grid_mass_points<T: Real>(map: &GridMap<T>) -> Result<Vec<(Vec2<T>, T)>> {
    let total = map.total_mass();
    if !(total > T::zero()) {
        return Err(Error::NoRewardMass);
    }
    Ok(map
        .cells()
        .filter(|(_, v)| *v > T::zero())
        .map(|(c, v)| (c, v / total))
        .collect())
}
