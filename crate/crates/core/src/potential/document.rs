//! JSON potential documents.
//!
//! ```text
//! {"kind":"cell","a":<number>,"segments":[[x_lo,x_hi,v],...]}
//! {"kind":"ncell","n":<int>,"cell":<cell-object>}
//! {"kind":"hetero","cells":[{"x_lo":..,"x_hi":..,"segments":[...]},...]}
//! ```
//!
//! Hetero segments are in local coordinates of their cell, i.e. they tile
//! `[0, x_hi - x_lo]`. The `kind` key of a nested cell object is optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{assemble_hetero, assemble_n_cell, build_cell, CellPotential, HeteroPotential, NCellPotential, Piece, Profile};
use crate::error::{Error, Result};

/// Any potential that can be read from a document.
#[derive(Debug, Clone, PartialEq)]
pub enum Potential {
    Cell(CellPotential),
    NCell(NCellPotential),
    Hetero(HeteroPotential),
}

impl Potential {
    pub fn kind(&self) -> &'static str {
        match self {
            Potential::Cell(_) => "cell",
            Potential::NCell(_) => "ncell",
            Potential::Hetero(_) => "hetero",
        }
    }

    /// The underlying cell when the potential is periodic in structure.
    pub fn as_cell(&self) -> Option<&CellPotential> {
        match self {
            Potential::Cell(c) => Some(c),
            Potential::NCell(p) => Some(p.cell()),
            Potential::Hetero(_) => None,
        }
    }
}

impl Profile for Potential {
    fn support(&self) -> (f64, f64) {
        match self {
            Potential::Cell(c) => c.support(),
            Potential::NCell(p) => p.support(),
            Potential::Hetero(h) => h.support(),
        }
    }

    fn pieces(&self) -> Vec<Piece> {
        match self {
            Potential::Cell(c) => c.pieces(),
            Potential::NCell(p) => p.pieces(),
            Potential::Hetero(h) => h.pieces(),
        }
    }

    fn evaluate(&self, x: f64) -> f64 {
        match self {
            Potential::Cell(c) => c.evaluate(x),
            Potential::NCell(p) => p.evaluate(x),
            Potential::Hetero(h) => h.evaluate(x),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum Doc {
    Cell(CellDoc),
    Ncell { n: i64, cell: NestedCellDoc },
    Hetero { cells: Vec<HeteroCellDoc> },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CellDoc {
    a: f64,
    segments: Vec<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NestedCellDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    kind: Option<String>,
    a: f64,
    segments: Vec<[f64; 3]>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct HeteroCellDoc {
    x_lo: f64,
    x_hi: f64,
    segments: Vec<[f64; 3]>,
}

fn tuples(segments: &[[f64; 3]]) -> Vec<(f64, f64, f64)> {
    segments.iter().map(|s| (s[0], s[1], s[2])).collect()
}

fn arrays(cell: &CellPotential) -> Vec<[f64; 3]> {
    cell.segments().iter().map(|s| [s.x_lo, s.x_hi, s.v]).collect()
}

/// Parse and validate a potential document.
pub fn load_potential(text: &str) -> Result<Potential> {
    let doc: Doc = serde_json::from_str(text).map_err(|e| Error::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    match doc {
        Doc::Cell(c) => Ok(Potential::Cell(build_cell(c.a, &tuples(&c.segments))?)),
        Doc::Ncell { n, cell } => {
            if let Some(kind) = cell.kind.as_deref() {
                if kind != "cell" {
                    return Err(Error::Validation(format!(
                        "ncell expects a nested cell object, found kind \"{kind}\""
                    )));
                }
            }
            let c = build_cell(cell.a, &tuples(&cell.segments))?;
            Ok(Potential::NCell(assemble_n_cell(c, n)?))
        }
        Doc::Hetero { cells } => {
            let parts: Vec<_> = cells.iter().map(|c| (c.x_lo, c.x_hi, tuples(&c.segments))).collect();
            Ok(Potential::Hetero(assemble_hetero(&parts)?))
        }
    }
}

pub fn load_potential_file(path: &Path) -> Result<Potential> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    load_potential(&text)
}

/// Serialize a potential to its document form.
pub fn save_potential(pot: &Potential) -> String {
    let doc = match pot {
        Potential::Cell(c) => Doc::Cell(CellDoc { a: c.a(), segments: arrays(c) }),
        Potential::NCell(p) => Doc::Ncell {
            n: p.n() as i64,
            cell: NestedCellDoc { kind: Some("cell".into()), a: p.cell().a(), segments: arrays(p.cell()) },
        },
        Potential::Hetero(h) => Doc::Hetero {
            cells: h
                .cells()
                .iter()
                .map(|c| HeteroCellDoc { x_lo: c.x_lo, x_hi: c.x_hi, segments: arrays(&c.profile) })
                .collect(),
        },
    };
    serde_json::to_string(&doc).expect("potential documents always serialize")
}
