//! Plain-text mesh format.
//!
//! ```text
//! d ncells nverts
//! x y [z]                      one line per vertex
//! v_1 .. v_{2^d}               one line per cell, 0-based, reference corner order
//! nboundary                    number of tag lines that follow
//! cell local_facet D|N         one line per tagged boundary facet
//! ```
//!
//! Boundary facets without a tag line default to Dirichlet. Blank lines and
//! lines starting with `#` are ignored.

use std::io::{BufRead, Write};

use super::{BoundaryTag, Mesh};
use crate::error::{MfmfeError, Result};

pub fn write_mesh<W: Write>(mesh: &Mesh, mut out: W) -> Result<()> {
    let dim = mesh.dim();
    writeln!(out, "{} {} {}", dim, mesh.num_cells(), mesh.num_vertices())?;
    for v in mesh.vertices() {
        let coords: Vec<String> = v[..dim].iter().map(|x| format!("{x:.17e}")).collect();
        writeln!(out, "{}", coords.join(" "))?;
    }
    for cell in mesh.cells() {
        let ids: Vec<String> = cell.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", ids.join(" "))?;
    }
    let tagged: Vec<_> = mesh.facets().iter().filter(|f| f.is_boundary()).collect();
    writeln!(out, "{}", tagged.len())?;
    for f in tagged {
        let t = match f.tag {
            Some(BoundaryTag::Neumann) => 'N',
            _ => 'D',
        };
        writeln!(out, "{} {} {}", f.owner.0, f.owner.1, t)?;
    }
    Ok(())
}

pub fn read_mesh<R: BufRead>(input: R) -> Result<Mesh> {
    let mut lines = input
        .lines()
        .enumerate()
        .map(|(i, l)| l.map(|s| (i + 1, s)))
        .filter(|r| {
            r.as_ref()
                .map(|(_, s)| !s.trim().is_empty() && !s.trim_start().starts_with('#'))
                .unwrap_or(true)
        });
    let mut next = |what: &str| -> Result<(usize, Vec<String>)> {
        match lines.next() {
            Some(Ok((n, s))) => Ok((n, s.split_whitespace().map(String::from).collect())),
            Some(Err(e)) => Err(e.into()),
            None => Err(MfmfeError::Parse {
                line: 0,
                reason: format!("unexpected end of input, expected {what}"),
            }),
        }
    };
    fn num<T: std::str::FromStr>(line: usize, tok: Option<&String>) -> Result<T> {
        tok.and_then(|t| t.parse().ok()).ok_or(MfmfeError::Parse {
            line,
            reason: format!("bad or missing number {tok:?}"),
        })
    }

    let (ln, hdr) = next("header")?;
    let dim: usize = num(ln, hdr.first())?;
    let ncells: usize = num(ln, hdr.get(1))?;
    let nverts: usize = num(ln, hdr.get(2))?;
    if !(2..=3).contains(&dim) {
        return Err(MfmfeError::Parse {
            line: ln,
            reason: format!("dimension {dim}"),
        });
    }
    let mut vertices = Vec::with_capacity(nverts);
    for _ in 0..nverts {
        let (ln, t) = next("vertex")?;
        let mut x = [0.0; 3];
        for (a, xa) in x.iter_mut().enumerate().take(dim) {
            *xa = num(ln, t.get(a))?;
        }
        vertices.push(x);
    }
    let mut cells = Vec::with_capacity(ncells);
    for _ in 0..ncells {
        let (ln, t) = next("cell")?;
        let mut c = [0usize; 8];
        for (i, ci) in c.iter_mut().enumerate().take(1 << dim) {
            *ci = num(ln, t.get(i))?;
        }
        cells.push(c);
    }
    let mut mesh = Mesh::new(dim, vertices, cells)?;
    let (ln, t) = next("boundary count")?;
    let nb: usize = num(ln, t.first())?;
    for _ in 0..nb {
        let (ln, t) = next("boundary tag")?;
        let c: usize = num(ln, t.first())?;
        let lf: usize = num(ln, t.get(1))?;
        if c >= mesh.num_cells() || lf >= 2 * dim {
            return Err(MfmfeError::Parse {
                line: ln,
                reason: format!("facet ({c}, {lf}) out of range"),
            });
        }
        let tag = match t.get(2).map(String::as_str) {
            Some("D") => BoundaryTag::Dirichlet,
            Some("N") => BoundaryTag::Neumann,
            other => {
                return Err(MfmfeError::Parse {
                    line: ln,
                    reason: format!("unknown boundary tag {other:?}"),
                })
            }
        };
        let f = mesh.cell_facet(c, lf);
        mesh.set_boundary_tag(f, tag).map_err(|_| MfmfeError::Parse {
            line: ln,
            reason: format!("facet ({c}, {lf}) is not on the boundary"),
        })?;
    }
    Ok(mesh)
}
