//! Field files and JSON report envelopes.
//!
//! A field file is a mesh in the core text format followed by
//!
//! ```text
//! field <n_vertices> <epsilon>
//! value                    (n_vertices rows)
//! ```

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use mixeig::fem::Field;
use mixeig::geometry::{read_mesh, write_mesh, TaggedMesh};
use serde::Serialize;

use crate::error::CliError;

pub fn write_field(path: &Path, tagged: &TaggedMesh, field: &Field) -> Result<(), CliError> {
    let f = File::create(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let mut out = BufWriter::new(f);
    write_mesh(tagged, &mut out)?;
    writeln!(out, "field {} {:?}", field.values().len(), tagged.epsilon())?;
    for v in field.values() {
        writeln!(out, "{v:?}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<Field, CliError> {
    let f = File::open(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let mut input = BufReader::new(f);
    // ε only matters for tags, which the field does not use
    let tagged = read_mesh(&mut input, 0.0)?;
    let parse_err = |m: &str| CliError::Core(mixeig::Error::Parse(format!("{}: {m}", path.display())));
    let mut header = String::new();
    input.read_line(&mut header)?;
    let mut it = header.split_whitespace();
    if it.next() != Some("field") {
        return Err(parse_err("missing `field` block after the mesh"));
    }
    let n: usize = it.next().and_then(|t| t.parse().ok()).ok_or_else(|| parse_err("bad field length"))?;
    let mut values = Vec::with_capacity(n);
    for line in input.lines().take(n) {
        values.push(line?.trim().parse::<f64>().map_err(|_| parse_err("bad field value"))?);
    }
    if values.len() != n {
        return Err(parse_err("truncated field block"));
    }
    Ok(Field::new(tagged.mesh().clone(), values)?)
}

#[derive(Serialize)]
pub struct Versions {
    pub mixeig: &'static str,
    pub cli: &'static str,
}

#[derive(Serialize)]
pub struct Envelope<'a, T: Serialize> {
    pub command: &'a str,
    pub config_hash: &'a str,
    pub versions: Versions,
    pub result: &'a T,
}

pub fn envelope<'a, T: Serialize>(command: &'a str, config_hash: &'a str, result: &'a T) -> Envelope<'a, T> {
    Envelope {
        command,
        config_hash,
        versions: Versions { mixeig: mixeig::VERSION, cli: env!("CARGO_PKG_VERSION") },
        result,
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Core(mixeig::Error::Parse(e.to_string())))?;
    std::fs::write(path, text + "\n").map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })
}

/// Creates `dir` and returns `dir/name`.
pub fn out_path(dir: &Path, name: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io { path: dir.to_path_buf(), source: e })?;
    Ok(dir.join(name))
}

pub fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use mixeig::geometry::{build_half_ball_mesh, tag_dirichlet};
    use std::sync::Arc;

    #[test]
    fn field_round_trip() {
        let mesh = Arc::new(build_half_ball_mesh(1.0, 0.4, 1.0).unwrap());
        let field = Field::from_fn(mesh.clone(), |x| x[2] / 3.0);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("v.field");
        write_field(&path, &tag_dirichlet(&mesh), &field).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.values(), field.values());
        assert_eq!(back.mesh().fingerprint(), mesh.fingerprint());
    }
}
