//! Nodal dumps: a JSON header next to either a CSV table or raw little-endian `f64` values.
//!
//! The CSV has one row per node in index order (axis 0 fastest) with columns
//! `x1,…,xn,value`. The binary body is `node_count` little-endian `f64`
//! values in the same order, with no framing.

use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ScalarField;
use crate::error::{Error, Result};
use crate::geometry::Grid;
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub format: String,
    pub byte_order: String,
    pub dims: usize,
    pub horizontal_dims: usize,
    pub counts: Vec<usize>,
    pub spacing: Vec<f64>,
    pub origin: Vec<f64>,
    pub ell: f64,
    pub node_count: usize,
}

impl FieldHeader {
    pub fn describe<T: Scalar>(field: &ScalarField<T>, format: &str) -> Self {
        let g = field.grid();
        Self {
            format: format.to_string(),
            byte_order: "little-endian".to_string(),
            dims: g.dim(),
            horizontal_dims: g.horizontal_dims(),
            counts: g.counts().to_vec(),
            spacing: g.spacing().iter().map(|h| h.as_f64()).collect(),
            origin: g.origin().iter().map(|o| o.as_f64()).collect(),
            ell: g.ell().as_f64(),
            node_count: g.node_count(),
        }
    }
}

pub fn write_csv<T: Scalar, W: Write>(field: &ScalarField<T>, mut out: W) -> Result<()> {
    let g = field.grid();
    let names: Vec<String> = (1..=g.dim()).map(|a| format!("x{a}")).collect();
    writeln!(out, "{},value", names.join(","))?;
    for (i, v) in field.values().iter().enumerate() {
        for x in g.node_coords(i) {
            write!(out, "{},", x.as_f64())?;
        }
        writeln!(out, "{:e}", v.as_f64())?;
    }
    Ok(())
}

pub fn write_binary<T: Scalar, W: Write>(field: &ScalarField<T>, mut out: W) -> Result<()> {
    for v in field.values() {
        out.write_all(&v.as_f64().to_le_bytes())?;
    }
    Ok(())
}

/// Reads a binary body back onto `grid`, which must match the header.
pub fn read_binary<R: Read>(header: &FieldHeader, grid: Arc<Grid<f64>>, mut input: R) -> Result<ScalarField<f64>> {
    if header.counts != grid.counts() {
        return Err(Error::InvalidParameter(format!(
            "header describes {:?} nodes, grid has {:?}",
            header.counts,
            grid.counts()
        )));
    }
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * header.node_count {
        return Err(Error::DimensionMismatch {
            expected: 8 * header.node_count,
            got: bytes.len(),
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    ScalarField::from_values(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{CrossSection, DomainSpec};
    use proptest::prelude::*;

    fn grid() -> Arc<Grid<f64>> {
        let spec = DomainSpec::new(CrossSection::unit_box(1).unwrap(), 1.0, vec![1.0]).unwrap();
        Arc::new(Grid::build(&spec, 0.5).unwrap())
    }

    #[test]
    fn csv_layout() {
        let g = grid();
        let v = ScalarField::from_fn(g.clone(), |x| x[0] + 2.0 * x[1]);
        let mut buf = Vec::new();
        write_csv(&v, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x1,x2,value");
        assert_eq!(lines.len(), g.node_count() + 1);
        let center = g.node_index(&[2, 2]);
        assert_eq!(lines[center + 1], "0,0,0e0");
        let header = FieldHeader::describe(&v, "csv");
        assert_eq!(header.counts, vec![5, 5]);
        assert_eq!(header.byte_order, "little-endian");
    }

    proptest! {
        #[test]
        fn binary_round_trip(vals in prop::collection::vec(-1e6f64..1e6, 25)) {
            let g = grid();
            let v = ScalarField::from_values(g.clone(), vals).unwrap();
            let mut buf = Vec::new();
            write_binary(&v, &mut buf).unwrap();
            prop_assert_eq!(buf.len(), 8 * 25);
            let header = FieldHeader::describe(&v, "binary");
            let back = read_binary(&header, g, buf.as_slice()).unwrap();
            prop_assert_eq!(back.values(), v.values());
        }
    }
}
