//! Plain-text mesh format:
//!
//! ```text
//! dim n_vertices n_cells n_facets
//! x y [z]                  (n_vertices rows)
//! v0 v1 v2 [v3]            (n_cells rows)
//! v0 v1 [v2] tag           (n_facets rows; 0 Dirichlet, 1 Neumann, 2 artificial outer)
//! ```
//!
//! Coordinates are written in shortest round-trip form, so a write/read
//! cycle reproduces the mesh bit for bit.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::sync::Arc;

use crate::error::{Error, Result};

use super::mesh::Mesh;
use super::tagging::{FacetTag, TaggedMesh};

pub fn write_mesh<W: Write>(tagged: &TaggedMesh, mut out: W) -> Result<()> {
    let m = tagged.mesh();
    writeln!(out, "{} {} {} {}", m.dim(), m.n_vertices(), m.n_cells(), m.n_facets())?;
    for v in 0..m.n_vertices() {
        let row: Vec<String> = m.vertex(v).iter().map(|x| format!("{x:?}")).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    for c in 0..m.n_cells() {
        let row: Vec<String> = m.cell(c).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", row.join(" "))?;
    }
    for f in 0..m.n_facets() {
        let row: Vec<String> = m.facet(f).iter().map(|v| v.to_string()).collect();
        writeln!(out, "{} {}", row.join(" "), tagged.tag(f).code())?;
    }
    Ok(())
}

fn parse<T: std::str::FromStr>(tok: Option<&str>, what: &str, line: usize) -> Result<T> {
    tok.ok_or_else(|| Error::Parse(format!("line {line}: missing {what}")))?
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: bad {what}")))
}

/// Reads a mesh written by [`write_mesh`]. The patch scale is not part of
/// the format and must be supplied by the caller.
pub fn read_mesh<R: BufRead>(input: R, epsilon: f64) -> Result<TaggedMesh> {
    let mut lines = input.lines().enumerate();
    let mut next = || -> Result<(usize, String)> {
        match lines.next() {
            Some((i, l)) => Ok((i + 1, l?)),
            None => Err(Error::Parse("unexpected end of file".into())),
        }
    };
    let (ln, header) = next()?;
    let mut it = header.split_whitespace();
    let dim: usize = parse(it.next(), "dim", ln)?;
    let nv: usize = parse(it.next(), "n_vertices", ln)?;
    let nc: usize = parse(it.next(), "n_cells", ln)?;
    let nf: usize = parse(it.next(), "n_facets", ln)?;
    if dim != 2 && dim != 3 {
        return Err(Error::Parse(format!("unsupported dimension {dim}")));
    }
    let mut coords = Vec::with_capacity(nv * dim);
    for _ in 0..nv {
        let (ln, l) = next()?;
        let mut it = l.split_whitespace();
        for _ in 0..dim {
            coords.push(parse::<f64>(it.next(), "coordinate", ln)?);
        }
    }
    let mut cells = Vec::with_capacity(nc * (dim + 1));
    for _ in 0..nc {
        let (ln, l) = next()?;
        let mut it = l.split_whitespace();
        for _ in 0..=dim {
            cells.push(parse::<usize>(it.next(), "vertex index", ln)?);
        }
    }
    let mut given: HashMap<Vec<usize>, FacetTag> = HashMap::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = next()?;
        let mut it = l.split_whitespace();
        let mut key = Vec::with_capacity(dim);
        for _ in 0..dim {
            key.push(parse::<usize>(it.next(), "vertex index", ln)?);
        }
        let tag = FacetTag::from_code(parse(it.next(), "tag", ln)?)?;
        key.sort_unstable();
        given.insert(key, tag);
    }
    let mesh = Mesh::new(dim, coords, cells)?;
    if mesh.n_facets() != nf {
        return Err(Error::NotWatertight(format!("file lists {nf} facets, mesh boundary has {}", mesh.n_facets())));
    }
    let mut tags = Vec::with_capacity(nf);
    for f in 0..mesh.n_facets() {
        let mut key = mesh.facet(f).to_vec();
        key.sort_unstable();
        tags.push(*given.get(&key).ok_or_else(|| Error::Parse(format!("boundary facet {key:?} missing from file")))?);
    }
    TaggedMesh::from_parts(Arc::new(mesh), tags, epsilon)
}
