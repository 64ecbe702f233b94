//! Reading input directories.

use std::path::{Path, PathBuf};

use pccd_core::codec::{encode, ElementSlots, PointCloudTensor};
use pccd_core::crystal::{parse_poscar, validate_encodable, CrystalStructure};

use crate::error::{CliError, Result};

/// Extensions that are never POSCAR text.
const SKIP_EXT: [&str; 7] = ["pct", "pccdckpt", "csv", "json", "md", "txt", "py"];

/// Regular, non-hidden files of `path` in name order; `path` itself when it
/// is a file.
pub fn list_files(path: &Path) -> Result<Vec<PathBuf>> {
    if path.is_file() {
        return Ok(vec![path.to_path_buf()]);
    }
    let rd = std::fs::read_dir(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for entry in rd {
        let p = entry?.path();
        let hidden = p.file_name().and_then(|n| n.to_str()).is_none_or(|n| n.starts_with('.'));
        if p.is_file() && !hidden {
            out.push(p);
        }
    }
    out.sort();
    Ok(out)
}

fn extension(p: &Path) -> Option<String> {
    p.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase)
}

pub fn file_name(p: &Path) -> String {
    p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

/// Name without its last extension, used to name derived files.
pub fn stem(p: &Path) -> String {
    p.file_stem().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn is_pct(p: &Path) -> bool {
    extension(p).as_deref() == Some("pct")
}

fn is_poscar_candidate(p: &Path) -> bool {
    extension(p).is_none_or(|e| !SKIP_EXT.contains(&e.as_str()))
}

/// One input file and what became of it.
#[derive(Debug, Clone)]
pub struct Entry {
    pub id: String,
    pub path: PathBuf,
    pub outcome: std::result::Result<Encoded, String>,
}

#[derive(Debug, Clone)]
pub struct Encoded {
    pub structure: CrystalStructure,
    pub slots: ElementSlots,
    pub tensor: PointCloudTensor,
}

/// Parses and encodes every POSCAR candidate under `path`. Files that fail
/// carry the reason instead.
pub fn load_poscars(path: &Path, fixed: Option<&ElementSlots>) -> Result<Vec<Entry>> {
    let files: Vec<PathBuf> = list_files(path)?.into_iter().filter(|p| is_poscar_candidate(p)).collect();
    use rayon::prelude::*;
    Ok(files
        .into_par_iter()
        .map(|p| {
            let outcome = load_one(&p, fixed);
            Entry { id: file_name(&p), path: p, outcome }
        })
        .collect())
}

fn load_one(p: &Path, fixed: Option<&ElementSlots>) -> std::result::Result<Encoded, String> {
    let text = std::fs::read_to_string(p).map_err(|e| e.to_string())?;
    let structure = parse_poscar(&text).map_err(|e| format!("parse error: {e}"))?;
    if let Err(v) = validate_encodable(&structure) {
        return Err(v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; "));
    }
    let slots = match fixed {
        Some(s) => s.clone(),
        None => ElementSlots::for_structure(&structure).map_err(|e| e.to_string())?,
    };
    let tensor = encode(&structure, &slots).map_err(|e| e.to_string())?;
    Ok(Encoded { structure, slots, tensor })
}

pub fn read_poscar(p: &Path) -> Result<CrystalStructure> {
    let text = std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", p.display())))?;
    parse_poscar(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
}

pub fn read_pct(p: &Path) -> std::result::Result<PointCloudTensor, String> {
    let bytes = std::fs::read(p).map_err(|e| e.to_string())?;
    PointCloudTensor::from_pct_bytes(&bytes).map_err(|e| e.to_string())
}

/// Directory from the command line, else from the config; it must exist.
pub fn require_dir(flag: Option<&Path>, cfg: Option<&Path>, what: &str) -> Result<PathBuf> {
    let p = flag
        .or(cfg)
        .ok_or_else(|| CliError::Usage(format!("no {what} given (flag or config key dataset_dir)")))?;
    if !p.exists() {
        return Err(CliError::Usage(format!("{what} {} does not exist", p.display())));
    }
    Ok(p.to_path_buf())
}
