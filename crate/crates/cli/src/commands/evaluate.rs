use std::collections::BTreeMap;

use rayon::prelude::*;

use pccd_core::crystal::{parse_poscar, CrystalStructure};
use pccd_core::eval::{atom_count_confusion, evaluate_pair, novelty_check, Corpus, Novelty};

use crate::args::EvaluateArgs;
use crate::config::RunConfig;
use crate::dataset::{file_name, list_files, require_dir};
use crate::error::{CliError, Result};
use crate::manifest::OutputDir;

use super::{table, write_reports};

/// Parseable POSCAR files of a directory keyed by file name; the rest are logged.
fn read_dir(dir: &std::path::Path) -> Result<BTreeMap<String, CrystalStructure>> {
    let files = list_files(dir)?;
    let parsed: Vec<_> = files
        .par_iter()
        .map(|p| (file_name(p), std::fs::read_to_string(p).map_err(|e| e.to_string()).and_then(|t| parse_poscar(&t).map_err(|e| e.to_string()))))
        .collect();
    let mut out = BTreeMap::new();
    for (name, s) in parsed {
        match s {
            Ok(s) => {
                out.insert(name, s);
            }
            Err(why) => log::warn!("skipping {}: {why}", name),
        }
    }
    Ok(out)
}

pub fn run(a: &EvaluateArgs, cfg: RunConfig, argv: &[String]) -> Result<()> {
    let odir = require_dir(Some(&a.original), None, "original directory")?;
    let pdir = require_dir(Some(&a.predicted), None, "predicted directory")?;
    let opts = cfg.eval_options()?;
    let originals = read_dir(&odir)?;
    let predicted = read_dir(&pdir)?;
    let pairs: Vec<(&String, &CrystalStructure, &CrystalStructure)> = originals
        .iter()
        .filter_map(|(k, o)| predicted.get(k).map(|p| (k, o, p)))
        .collect();
    if pairs.is_empty() {
        return Err(CliError::Input("no original/predicted pairs share a file name".into()));
    }
    for k in originals.keys().filter(|k| !predicted.contains_key(*k)) {
        log::warn!("{k} has no prediction");
    }
    let reports: Vec<_> = pairs.par_iter().map(|(id, o, p)| evaluate_pair(id, o, p, &opts)).collect();
    // originals without a prediction count as undecoded
    let counts: Vec<(usize, usize)> =
        originals.iter().map(|(k, o)| (o.len(), predicted.get(k).map_or(0, |p| p.len()))).collect();
    let confusion = atom_count_confusion(&counts);

    let mut out = OutputDir::create(&cfg.output_dir)?;
    write_reports(&mut out, &reports, &confusion)?;
    if let Some(c) = &a.corpus {
        let cdir = require_dir(Some(c), None, "corpus directory")?;
        let corpus: Corpus = read_dir(&cdir)?.into_iter().collect();
        let tol = cfg.evaluation.novelty_tol;
        let rows: Vec<[String; 4]> = pairs
            .par_iter()
            .map(|(id, _, p)| {
                let (status, of) = match novelty_check(p, &corpus, tol) {
                    Novelty::Novel => ("novel", String::new()),
                    Novelty::MatchOf(m) => ("known", m),
                };
                [id.to_string(), p.reduced_formula(), status.into(), of]
            })
            .collect();
        out.write("novelty.csv", &table(&["id", "formula", "status", "match"], &rows)?)?;
    }
    out.finish("evaluate", argv, &cfg)?;
    Ok(())
}
