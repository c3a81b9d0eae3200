use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::GeoPoint;
use crate::error::{Error, Result};

const NODATA_OUT: f64 = -9999.0;

/// Georeferencing of a north-up raster whose samples sit at cell centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridGeometry {
    pub n_rows: usize,
    pub n_cols: usize,
    /// Longitude of the west edge of the first column.
    pub xll_corner_deg: f64,
    /// Latitude of the south edge of the last row.
    pub yll_corner_deg: f64,
    pub cell_size_deg: f64,
}

impl GridGeometry {
    /// Geometry whose north-west sample sits at `nw` with the given spacing.
    pub fn from_nw_sample(nw: GeoPoint, spacing_arcsec: f64, n_rows: usize, n_cols: usize) -> Self {
        let cell = spacing_arcsec / 3600.0;
        GridGeometry {
            n_rows,
            n_cols,
            xll_corner_deg: nw.lon_deg - 0.5 * cell,
            yll_corner_deg: nw.lat_deg - (n_rows as f64 - 0.5) * cell,
            cell_size_deg: cell,
        }
    }

    pub fn spacing_arcsec(&self) -> f64 {
        self.cell_size_deg * 3600.0
    }

    /// Location of sample (0, 0).
    pub fn origin(&self) -> GeoPoint {
        self.center_of(0, 0)
    }

    pub fn center_of(&self, row: usize, col: usize) -> GeoPoint {
        GeoPoint {
            lat_deg: self.yll_corner_deg + (self.n_rows as f64 - row as f64 - 0.5) * self.cell_size_deg,
            lon_deg: self.xll_corner_deg + (col as f64 + 0.5) * self.cell_size_deg,
        }
    }

    /// Fractional (row, col) of a point, sample centers at integers.
    pub fn fractional_index(&self, p: GeoPoint) -> (f64, f64) {
        let top = self.yll_corner_deg + (self.n_rows as f64 - 0.5) * self.cell_size_deg;
        let left = self.xll_corner_deg + 0.5 * self.cell_size_deg;
        ((top - p.lat_deg) / self.cell_size_deg, (p.lon_deg - left) / self.cell_size_deg)
    }

    /// True when bilinear interpolation is defined at `p`.
    pub fn contains(&self, p: GeoPoint) -> bool {
        let (r, c) = self.fractional_index(p);
        let eps = 1e-9;
        r >= -eps
            && c >= -eps
            && r <= (self.n_rows as f64 - 1.0) + eps
            && c <= (self.n_cols as f64 - 1.0) + eps
    }

    fn validate(&self) -> Result<()> {
        if !(self.cell_size_deg > 0.0) || !self.cell_size_deg.is_finite() {
            return Err(Error::invariant("spacing_arcsec", "cell size must be positive"));
        }
        if self.n_rows == 0 || self.n_cols == 0 {
            return Err(Error::invariant("n_rows", "raster must have at least one row and column"));
        }
        if !self.xll_corner_deg.is_finite() || !self.yll_corner_deg.is_finite() {
            return Err(Error::invariant("origin", "corner coordinates must be finite"));
        }
        Ok(())
    }
}

/// Row-major raster; NaN marks missing data.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    geometry: GridGeometry,
    values: Vec<f64>,
}

impl Raster {
    pub fn new(geometry: GridGeometry, values: Vec<f64>) -> Result<Self> {
        geometry.validate()?;
        if geometry.n_rows * geometry.n_cols != values.len() {
            return Err(Error::invariant(
                "elevations",
                format!(
                    "{} values for a {}x{} raster",
                    values.len(),
                    geometry.n_rows,
                    geometry.n_cols
                ),
            ));
        }
        if values.iter().any(|v| v.is_infinite()) {
            return Err(Error::invariant("elevations", "values must be finite"));
        }
        Ok(Raster { geometry, values })
    }

    pub fn from_fn(geometry: GridGeometry, mut f: impl FnMut(GeoPoint) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(geometry.n_rows * geometry.n_cols);
        for r in 0..geometry.n_rows {
            for c in 0..geometry.n_cols {
                values.push(f(geometry.center_of(r, c)));
            }
        }
        Raster::new(geometry, values)
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.geometry
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.geometry.n_cols + col]
    }

    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Raster {
        Raster {
            geometry: self.geometry,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Bilinear interpolation of the four samples surrounding `p`.
    pub fn interpolate(&self, p: GeoPoint) -> Result<f64> {
        let g = &self.geometry;
        if !g.contains(p) {
            return Err(Error::OutOfBounds(p));
        }
        let (r, c) = g.fractional_index(p);
        let r = r.clamp(0.0, (g.n_rows - 1) as f64);
        let c = c.clamp(0.0, (g.n_cols - 1) as f64);
        let r0 = (r.floor() as usize).min(g.n_rows.saturating_sub(2));
        let c0 = (c.floor() as usize).min(g.n_cols.saturating_sub(2));
        let r1 = (r0 + 1).min(g.n_rows - 1);
        let c1 = (c0 + 1).min(g.n_cols - 1);
        let fr = r - r0 as f64;
        let fc = c - c0 as f64;
        let mut acc = 0.0;
        for (rr, wr) in [(r0, 1.0 - fr), (r1, fr)] {
            for (cc, wc) in [(c0, 1.0 - fc), (c1, fc)] {
                let w = wr * wc;
                if w == 0.0 {
                    continue;
                }
                let v = self.get(rr, cc);
                if v.is_nan() {
                    return Err(Error::NoData(p));
                }
                acc += w * v;
            }
        }
        Ok(acc)
    }

    /// Parses an ESRI ASCII grid.
    pub fn parse_ascii_grid(text: &str) -> Result<Self> {
        let mut header = AsciiHeader::default();
        let mut lines = text.lines().enumerate().peekable();
        while let Some((idx, line)) = lines.peek().copied() {
            let mut parts = line.split_whitespace();
            let Some(key) = parts.next() else {
                lines.next();
                continue;
            };
            let key = key.to_ascii_lowercase();
            if key.chars().next().is_some_and(|c| c.is_ascii_digit() || c == '-' || c == '+' || c == '.') {
                break;
            }
            let value = parts.next().ok_or_else(|| Error::Parse {
                row: idx + 1,
                reason: format!("header `{key}` has no value"),
            })?;
            let num = |v: &str| {
                v.parse::<f64>().map_err(|e| Error::Parse {
                    row: idx + 1,
                    reason: format!("header `{key}`: {e}"),
                })
            };
            match key.as_str() {
                "ncols" => header.ncols = Some(num(value)? as usize),
                "nrows" => header.nrows = Some(num(value)? as usize),
                "xllcorner" => header.xll = Some((num(value)?, false)),
                "xllcenter" => header.xll = Some((num(value)?, true)),
                "yllcorner" => header.yll = Some((num(value)?, false)),
                "yllcenter" => header.yll = Some((num(value)?, true)),
                "cellsize" => header.cell = Some(num(value)?),
                "nodata_value" => header.nodata = Some(num(value)?),
                other => {
                    return Err(Error::Parse {
                        row: idx + 1,
                        reason: format!("unknown header key `{other}`"),
                    })
                }
            }
            lines.next();
        }
        let missing = |k: &str| Error::Parse {
            row: 0,
            reason: format!("missing header `{k}`"),
        };
        let n_cols = header.ncols.ok_or_else(|| missing("ncols"))?;
        let n_rows = header.nrows.ok_or_else(|| missing("nrows"))?;
        let cell = header.cell.ok_or_else(|| missing("cellsize"))?;
        let (xll, xc) = header.xll.ok_or_else(|| missing("xllcorner"))?;
        let (yll, yc) = header.yll.ok_or_else(|| missing("yllcorner"))?;
        let geometry = GridGeometry {
            n_rows,
            n_cols,
            xll_corner_deg: if xc { xll - 0.5 * cell } else { xll },
            yll_corner_deg: if yc { yll - 0.5 * cell } else { yll },
            cell_size_deg: cell,
        };
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for (idx, line) in lines {
            for tok in line.split_whitespace() {
                let v: f64 = tok.parse().map_err(|e| Error::Parse {
                    row: idx + 1,
                    reason: format!("value `{tok}`: {e}"),
                })?;
                values.push(if header.nodata == Some(v) { f64::NAN } else { v });
            }
        }
        Raster::new(geometry, values)
    }

    pub fn to_ascii_grid(&self) -> String {
        let g = &self.geometry;
        let mut out = String::new();
        let _ = writeln!(out, "ncols {}", g.n_cols);
        let _ = writeln!(out, "nrows {}", g.n_rows);
        let _ = writeln!(out, "xllcorner {}", g.xll_corner_deg);
        let _ = writeln!(out, "yllcorner {}", g.yll_corner_deg);
        let _ = writeln!(out, "cellsize {}", g.cell_size_deg);
        let _ = writeln!(out, "NODATA_value {NODATA_OUT}");
        for row in self.values.chunks(g.n_cols) {
            let mut first = true;
            for v in row {
                if !first {
                    out.push(' ');
                }
                first = false;
                let v = if v.is_nan() { NODATA_OUT } else { *v };
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Raster::parse_ascii_grid(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_ascii_grid())?;
        Ok(())
    }
}

#[derive(Default)]
struct AsciiHeader {
    ncols: Option<usize>,
    nrows: Option<usize>,
    xll: Option<(f64, bool)>,
    yll: Option<(f64, bool)>,
    cell: Option<f64>,
    nodata: Option<f64>,
}

/// Elevations in meters above sea level.
#[derive(Debug, Clone, PartialEq)]
pub struct TerrainGrid(Raster);

impl TerrainGrid {
    pub fn new(raster: Raster) -> Self {
        TerrainGrid(raster)
    }

    pub fn from_fn(geometry: GridGeometry, f: impl FnMut(GeoPoint) -> f64) -> Result<Self> {
        Raster::from_fn(geometry, f).map(TerrainGrid)
    }

    /// Constant-elevation grid.
    pub fn flat(geometry: GridGeometry, elevation_m: f64) -> Result<Self> {
        Raster::new(geometry, vec![elevation_m; geometry.n_rows * geometry.n_cols]).map(TerrainGrid)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Raster::load(path).map(TerrainGrid)
    }

    pub fn raster(&self) -> &Raster {
        &self.0
    }

    pub fn geometry(&self) -> &GridGeometry {
        self.0.geometry()
    }

    pub fn origin(&self) -> GeoPoint {
        self.0.geometry().origin()
    }

    pub fn spacing_arcsec(&self) -> f64 {
        self.0.geometry().spacing_arcsec()
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        self.0.geometry().contains(p)
    }

    pub fn elevation_at(&self, p: GeoPoint) -> Result<f64> {
        self.0.interpolate(p)
    }

    /// Same grid with `f` applied to every elevation.
    pub fn map_elevations(&self, f: impl Fn(f64) -> f64) -> TerrainGrid {
        TerrainGrid(self.0.map_values(f))
    }
}

/// Persons per square mile.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationGrid(Raster);

impl PopulationGrid {
    pub fn new(raster: Raster) -> Result<Self> {
        if raster.values().iter().any(|v| *v < 0.0) {
            return Err(Error::invariant("population", "densities must be non-negative"));
        }
        Ok(PopulationGrid(raster))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        PopulationGrid::new(Raster::load(path)?)
    }

    pub fn raster(&self) -> &Raster {
        &self.0
    }

    pub fn density_at(&self, p: GeoPoint) -> Result<f64> {
        self.0.interpolate(p)
    }
}
