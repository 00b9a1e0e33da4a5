use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use ssc_core::layout::{INPUT_SHEET, OUTPUT_SHEET, WORKINGS_SHEET};
use ssc_core::{serialize_csv, serialize_grid_json, WorkbookGrid};

use crate::FormatArg;

/// Files to write, as paths relative to the output directory.
pub type Artifacts = Vec<(PathBuf, String)>;

pub fn render_artifacts(
    wb: &WorkbookGrid,
    stem: &str,
    format: FormatArg,
) -> Result<Artifacts, ssc_core::emitter::CsvError> {
    let mut files = Vec::new();
    if matches!(format, FormatArg::GridJson | FormatArg::Both) {
        let mut json = serialize_grid_json(wb);
        json.push('\n');
        files.push((PathBuf::from(format!("{stem}.grid.json")), json));
    }
    if matches!(format, FormatArg::Csv | FormatArg::Both) {
        for sheet in [INPUT_SHEET, WORKINGS_SHEET, OUTPUT_SHEET] {
            let text = serialize_csv(wb, sheet)?;
            files.push((Path::new(stem).join(format!("{sheet}.csv")), text));
        }
    }
    Ok(files)
}

/// Writes every file into a staging directory inside `out`, then renames
/// them into place. If any step fails, files and directories created by
/// this call are removed again.
pub fn write_atomically(out: &Path, files: &Artifacts) -> io::Result<()> {
    let mut created_dirs = Vec::new();
    let mut placed = Vec::new();
    let result = place(out, files, &mut created_dirs, &mut placed);
    if result.is_err() {
        for path in placed.iter().rev() {
            let _ = fs::remove_file(path);
        }
        for dir in created_dirs.iter().rev() {
            let _ = fs::remove_dir(dir);
        }
    }
    result
}

fn create_dirs(dir: &Path, created: &mut Vec<PathBuf>) -> io::Result<()> {
    let mut missing = Vec::new();
    let mut cur = Some(dir);
    while let Some(d) = cur {
        if d.as_os_str().is_empty() || d.exists() {
            break;
        }
        missing.push(d.to_path_buf());
        cur = d.parent();
    }
    for d in missing.into_iter().rev() {
        fs::create_dir(&d)?;
        created.push(d);
    }
    Ok(())
}

fn place(
    out: &Path,
    files: &Artifacts,
    created_dirs: &mut Vec<PathBuf>,
    placed: &mut Vec<PathBuf>,
) -> io::Result<()> {
    create_dirs(out, created_dirs)?;
    let staging = tempfile::Builder::new().prefix(".ssc-").tempdir_in(out)?;
    for (rel, text) in files {
        let path = staging.path().join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, text)?;
    }
    for (rel, _) in files {
        if let Some(parent) = out.join(rel).parent() {
            create_dirs(parent, created_dirs)?;
        }
    }
    for (rel, _) in files {
        let target = out.join(rel);
        if target.is_dir() {
            return Err(io::Error::new(
                io::ErrorKind::AlreadyExists,
                format!("{} is a directory", target.display()),
            ));
        }
    }
    for (rel, _) in files {
        let target = out.join(rel);
        fs::rename(staging.path().join(rel), &target)?;
        placed.push(target);
    }
    Ok(())
}
