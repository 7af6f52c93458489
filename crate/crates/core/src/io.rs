//! Plain-number encodings of points, boundary points, measures, boundary maps
//! and isometries, as JSON-friendly vectors or CSV tables.
//!
//! A vector in `𝔽^{p+1}` is flattened to `d(p+1)` reals, coordinate by
//! coordinate, each scalar as its `d` real components.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::algebra::Space;
use crate::error::{Error, Result};
use crate::geometry::{BoundaryPoint, Point};
use crate::hvec::HVec;
use crate::isometry::Isometry;
use crate::measures::{BoundaryMap, BoundaryMapSample, BoundaryMeasure};
use crate::qmatrix::QMatrix;
use crate::quat::Quat;

pub fn flatten(space: &Space, v: &HVec) -> Vec<f64> {
    v.iter().flat_map(|&q| space.algebra().to_components(q)).collect()
}

pub fn unflatten(space: &Space, c: &[f64]) -> Result<HVec> {
    let d = space.d();
    if c.len() != d * space.coords() {
        return Err(Error::Parse(format!("{space} vector needs {} reals, got {}", d * space.coords(), c.len())));
    }
    c.chunks(d)
        .map(|ch| space.algebra().from_slice(ch))
        .collect::<Result<Vec<Quat>>>()
        .map(HVec)
}

pub fn point_coords(x: &Point) -> Vec<f64> {
    flatten(&x.space(), x.rep())
}

pub fn point_from_coords(space: &Space, c: &[f64]) -> Result<Point> {
    Point::new(*space, unflatten(space, c)?)
}

pub fn boundary_coords(t: &BoundaryPoint) -> Vec<f64> {
    flatten(&t.space(), t.rep())
}

pub fn boundary_from_coords(space: &Space, c: &[f64]) -> Result<BoundaryPoint> {
    BoundaryPoint::new(*space, unflatten(space, c)?)
}

/// Column names `z1_re, z1_im, …` (or `z1_re, z1_i, z1_j, z1_k`) with `prefix`.
pub fn coord_header(space: &Space, prefix: &str) -> Vec<String> {
    let parts: &[&str] = if space.d() == 2 { &["re", "im"] } else { &["re", "i", "j", "k"] };
    (1..=space.coords())
        .flat_map(|i| parts.iter().map(move |p| format!("{prefix}z{i}_{p}")))
        .collect()
}

/// Matrix of an isometry as rows of flattened scalars.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsometryRecord {
    pub rows: Vec<Vec<f64>>,
}

impl IsometryRecord {
    pub fn from_isometry(g: &Isometry) -> IsometryRecord {
        let space = g.space();
        IsometryRecord {
            rows: g.mat().rows().iter().map(|r| flatten(&space, &HVec(r.clone()))).collect(),
        }
    }

    pub fn to_isometry(&self, space: &Space) -> Result<Isometry> {
        if self.rows.len() != space.coords() {
            return Err(Error::Parse(format!("{space} matrix needs {} rows", space.coords())));
        }
        let rows = self
            .rows
            .iter()
            .map(|r| unflatten(space, r).map(|v| v.0))
            .collect::<Result<Vec<_>>>()?;
        Isometry::new(*space, QMatrix::from_rows(rows))
    }
}

/// Measure CSV: one row per atom, the boundary coordinates then `weight`.
pub fn write_measure_csv<W: Write>(w: W, mu: &BoundaryMeasure) -> Result<()> {
    let space = mu.space();
    let mut out = csv::Writer::from_writer(w);
    let mut header = coord_header(&space, "");
    header.push("weight".into());
    out.write_record(&header)?;
    for (t, m) in mu.atoms() {
        let mut row: Vec<String> = boundary_coords(t).iter().map(|x| format!("{x:e}")).collect();
        row.push(format!("{m:e}"));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_measure_csv<R: Read>(r: R, space: &Space) -> Result<BoundaryMeasure> {
    let width = space.d() * space.coords();
    let mut rd = csv::Reader::from_reader(r);
    let mut atoms = Vec::new();
    for rec in rd.records() {
        let vals = parse_row(&rec?, width + 1)?;
        atoms.push((boundary_from_coords(space, &vals[..width])?, vals[width]));
    }
    BoundaryMeasure::new(*space, atoms)
}

/// Boundary-map CSV: source coordinates (`s_` prefix) then target coordinates (`t_` prefix).
pub fn write_map_csv<W: Write>(w: W, map: &BoundaryMapSample) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let (s, t) = (map.source(), map.target_space());
    let mut header = coord_header(&s, "s_");
    header.extend(coord_header(&t, "t_"));
    out.write_record(&header)?;
    for (a, b) in map.pairs() {
        let row: Vec<String> = boundary_coords(a)
            .into_iter()
            .chain(boundary_coords(b))
            .map(|x| format!("{x:e}"))
            .collect();
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_map_csv<R: Read>(r: R, source: &Space, target: &Space) -> Result<BoundaryMapSample> {
    let ws = source.d() * source.coords();
    let wt = target.d() * target.coords();
    let mut rd = csv::Reader::from_reader(r);
    let mut pairs = Vec::new();
    for rec in rd.records() {
        let vals = parse_row(&rec?, ws + wt)?;
        pairs.push((boundary_from_coords(source, &vals[..ws])?, boundary_from_coords(target, &vals[ws..])?));
    }
    BoundaryMapSample::new(*source, *target, pairs)
}

fn parse_row(rec: &csv::StringRecord, width: usize) -> Result<Vec<f64>> {
    if rec.len() != width {
        return Err(Error::Parse(format!("expected {width} columns, got {}", rec.len())));
    }
    rec.iter()
        .map(|f| f.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{f:?}: {e}"))))
        .collect()
}
