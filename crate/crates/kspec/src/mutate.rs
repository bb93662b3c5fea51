//! Writing mutants to disk.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use kspec_core::mutagen::Mutation;

pub const MANIFEST: &str = "manifest.csv";

/// Writes `<id>.mvm` per mutant and a manifest of id, operator and site.
/// Returns the program paths in manifest order.
pub fn write_mutants(m: &Mutation, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut manifest = csv::Writer::from_writer(Vec::new());
    manifest.write_record(["id", "base", "operator", "site", "description"])?;
    let mut paths = Vec::new();
    for mutant in &m.mutants {
        let path = dir.join(format!("{}.mvm", mutant.id()));
        let text = format!(
            "; {} at instruction {} of {}\n{}",
            mutant.op,
            mutant.site,
            mutant.base,
            mutant.program.disassemble()
        );
        fs::write(&path, text)?;
        manifest.write_record([
            mutant.id().as_str(),
            mutant.base.as_str(),
            mutant.op.id(),
            &mutant.site.to_string(),
            mutant.op.description(),
        ])?;
        paths.push(path);
    }
    let bytes = manifest.into_inner().map_err(|e| io::Error::other(e.to_string()))?;
    fs::write(dir.join(MANIFEST), bytes)?;
    Ok(paths)
}
