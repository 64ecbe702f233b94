use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use pccd_core::codec::ElementSlots;
use pccd_core::crystal::write_poscar;

use crate::args::DecodeArgs;
use crate::config::RunConfig;
use crate::dataset::{file_name, is_pct, list_files, read_pct, stem};
use crate::error::{CliError, Result};
use crate::manifest::OutputDir;

use super::{decode_cells, table, try_decode, DECODE_COLUMNS};

/// Slot lists recorded by `encode` beside the tensors, keyed by tensor file name.
fn manifest_slots(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    let Ok(mut r) = csv::Reader::from_path(dir.join(super::encode::MANIFEST)) else {
        return out;
    };
    for rec in r.records().flatten() {
        if let (Some(t), Some(s)) = (rec.get(1), rec.get(3)) {
            if !t.is_empty() {
                out.insert(t.to_string(), s.to_string());
            }
        }
    }
    out
}

pub fn run(a: &DecodeArgs, cfg: RunConfig, argv: &[String]) -> Result<()> {
    let mut files: Vec<PathBuf> = Vec::new();
    for p in &a.inputs {
        if !p.exists() {
            return Err(CliError::Usage(format!("{} does not exist", p.display())));
        }
        files.extend(list_files(p)?.into_iter().filter(|f| is_pct(f)));
    }
    if files.is_empty() {
        return Err(CliError::Input("no .pct files given".into()));
    }
    let fixed = cfg.fixed_slots()?;
    let mut recorded: BTreeMap<PathBuf, BTreeMap<String, String>> = BTreeMap::new();
    let jobs: Vec<(PathBuf, std::result::Result<ElementSlots, String>)> = files
        .into_iter()
        .map(|f| {
            let slots = match &fixed {
                Some(s) => Ok(s.clone()),
                None => {
                    let dir = f.parent().unwrap_or(Path::new(".")).to_path_buf();
                    let known = recorded.entry(dir.clone()).or_insert_with(|| manifest_slots(&dir));
                    match known.get(&file_name(&f)) {
                        Some(list) => ElementSlots::parse(list).map_err(|e| e.to_string()),
                        None => Err("element slots unknown; pass --slots".to_string()),
                    }
                }
            };
            (f, slots)
        })
        .collect();
    let decoded: Vec<_> = jobs
        .par_iter()
        .map(|(f, slots)| {
            let slots = slots.clone()?;
            let x = read_pct(f)?;
            try_decode(&x, &slots, &cfg.codec.dbscan)
        })
        .collect();

    let mut out = OutputDir::create(&cfg.output_dir)?;
    let mut rows = Vec::new();
    let mut ok = 0;
    for ((f, _), d) in jobs.iter().zip(&decoded) {
        if let Ok(d) = d {
            out.write(&format!("{}.vasp", stem(f)), write_poscar(&d.structure).as_bytes())?;
            ok += 1;
        }
        let mut row = vec![file_name(f)];
        row.extend(decode_cells(d));
        rows.push(row);
    }
    let header: Vec<&str> = std::iter::once("file").chain(DECODE_COLUMNS).collect();
    out.write("decode_report.csv", &table(&header, &rows)?)?;
    out.finish("decode", argv, &cfg)?;
    if ok == 0 {
        return Err(CliError::Input("no tensor could be decoded".into()));
    }
    Ok(())
}
