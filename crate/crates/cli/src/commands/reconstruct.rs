use rayon::prelude::*;

use pccd_core::codec::PointCloudTensor;
use pccd_core::crystal::write_poscar;
use pccd_core::diffusion::{reconstruct, OraclePredictor};
use pccd_core::eval::{atom_count_confusion, evaluate_pair, MatchReport};

use crate::args::ReconstructArgs;
use crate::config::RunConfig;
use crate::dataset::{load_poscars, require_dir, stem, Encoded};
use crate::error::{CliError, Result};
use crate::manifest::OutputDir;

use super::{decode_cells, load_model, table, try_decode, write_reports, Predictor, DECODE_COLUMNS};

struct Run<'a> {
    id: String,
    file: String,
    seed: u64,
    source: &'a Encoded,
}

pub fn run(a: &ReconstructArgs, cfg: RunConfig, argv: &[String]) -> Result<()> {
    let seed = cfg.require_seed()?;
    if a.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let dir = require_dir(a.dataset_dir.as_deref(), cfg.dataset_dir.as_deref(), "dataset directory")?;
    let sch = cfg.schedule()?;
    let model = match &a.checkpoint {
        Some(p) if !a.oracle => Some(load_model(p, &sch)?),
        _ => None,
    };
    let opts = cfg.eval_options()?;
    let entries = load_poscars(&dir, cfg.fixed_slots()?.as_ref())?;

    let mut runs = Vec::new();
    let mut skipped = Vec::new();
    for e in &entries {
        match &e.outcome {
            Ok(enc) => {
                for k in 0..a.trials {
                    let (id, file) = if a.trials == 1 {
                        (e.id.clone(), stem(&e.path))
                    } else {
                        (format!("{}#{k}", e.id), format!("{}_t{k}", stem(&e.path)))
                    };
                    let seed = seed.wrapping_add(runs.len() as u64);
                    runs.push(Run { id, file, seed, source: enc });
                }
            }
            Err(why) => {
                log::warn!("skipping {}: {why}", e.id);
                skipped.push((e.id.clone(), why.clone()));
            }
        }
    }
    if runs.is_empty() {
        return Err(CliError::Input(format!("no encodable structures in {}", dir.display())));
    }
    log::info!("{} reconstructions", runs.len());

    let results: Vec<(std::result::Result<PointCloudTensor, String>, _, Option<MatchReport>)> = runs
        .par_iter()
        .map(|r| {
            let x0 = &r.source.tensor;
            let out = match &model {
                Some(m) => reconstruct(x0, &Predictor::trained(m, &sch, &cfg), &sch, r.seed, None),
                None => reconstruct(x0, &Predictor::Oracle(OraclePredictor { x0, schedule: &sch }), &sch, r.seed, None),
            }
            .map_err(|e| e.to_string());
            let decoded = match &out {
                Ok(x) => try_decode(x, &r.source.slots, &cfg.codec.dbscan),
                Err(e) => Err(e.clone()),
            };
            let report = decoded.as_ref().ok().map(|d| evaluate_pair(&r.id, &r.source.structure, &d.structure, &opts));
            (out, decoded, report)
        })
        .collect();

    let mut out = OutputDir::create(&cfg.output_dir)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    let mut counts = Vec::new();
    for (r, (x, decoded, report)) in runs.iter().zip(&results) {
        let err = match x {
            Ok(x) => {
                out.write(&format!("reconstructed/{}.pct", r.file), &x.to_pct_bytes())?;
                format!("{:?}", x.max_abs_diff(&r.source.tensor))
            }
            Err(_) => String::new(),
        };
        if let Ok(d) = decoded {
            out.write(&format!("reconstructed/{}.vasp", r.file), write_poscar(&d.structure).as_bytes())?;
        }
        let mut row = vec![r.id.clone(), r.seed.to_string(), err];
        row.extend(decode_cells(decoded));
        rows.push(row);
        counts.push((r.source.structure.len(), decoded.as_ref().map_or(0, |d| d.structure.len())));
        if let Some(rep) = report {
            reports.push(rep.clone());
        }
    }
    for (id, why) in skipped {
        let mut row = vec![id, String::new(), String::new(), "skipped".into()];
        row.extend(std::iter::repeat_n(String::new(), 4));
        row.push(why);
        rows.push(row);
    }
    let header: Vec<&str> = ["id", "seed", "max_abs_tensor_err"].into_iter().chain(DECODE_COLUMNS).collect();
    out.write("reconstruct_report.csv", &table(&header, &rows)?)?;
    let confusion = atom_count_confusion(&counts);
    write_reports(&mut out, &reports, &confusion)?;
    out.finish("reconstruct", argv, &cfg)?;
    println!("atom-count accuracy {} ({} of {})", confusion.diagonal_fraction(), confusion.trace(), confusion.total());
    Ok(())
}
