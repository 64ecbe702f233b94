use rayon::prelude::*;

use pccd_core::codec::{encode, ElementSlots, PointCloudTensor};
use pccd_core::crystal::write_poscar;
use pccd_core::diffusion::{sample, OraclePredictor};

use crate::args::GenerateArgs;
use crate::config::RunConfig;
use crate::dataset::read_poscar;
use crate::error::{CliError, Result};
use crate::manifest::OutputDir;

use super::{decode_cells, load_model, table, try_decode, Predictor, DECODE_COLUMNS};

pub fn run(a: &GenerateArgs, cfg: RunConfig, argv: &[String]) -> Result<()> {
    let seed = cfg.require_seed()?;
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let elements = a.elements.as_deref().or(cfg.codec.slots.as_deref());
    let slots = elements
        .map(ElementSlots::parse)
        .transpose()
        .map_err(|e| CliError::Usage(format!("{e} (input up to three elements)")))?;
    let sch = cfg.schedule()?;

    let bound;
    let model;
    let (slots, predictor) = match (&a.oracle_poscar, &a.checkpoint) {
        (Some(p), _) => {
            let s = read_poscar(p)?;
            let slots = match slots {
                Some(sl) => sl,
                None => ElementSlots::for_structure(&s).map_err(|e| CliError::Input(e.to_string()))?,
            };
            bound = encode(&s, &slots).map_err(|e| CliError::Input(e.to_string()))?;
            (slots, Predictor::Oracle(OraclePredictor { x0: &bound, schedule: &sch }))
        }
        (None, Some(p)) => {
            let slots = slots.ok_or_else(|| CliError::Usage("--elements is required".into()))?;
            model = load_model(p, &sch)?;
            (slots, Predictor::trained(&model, &sch, &cfg))
        }
        (None, None) => return Err(CliError::Usage("--checkpoint is required".into())),
    };

    let samples: Vec<(u64, std::result::Result<PointCloudTensor, String>)> = (0..a.count as u64)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_add(i);
            (s, sample(&predictor, &sch, s, None).map_err(|e| e.to_string()))
        })
        .collect();

    let mut out = OutputDir::create(&cfg.output_dir)?;
    let mut rows = Vec::new();
    for (i, (s, x)) in samples.iter().enumerate() {
        let name = format!("generated_{i:04}");
        let decoded = match x {
            Ok(x) => {
                out.write(&format!("{name}.pct"), &x.to_pct_bytes())?;
                try_decode(x, &slots, &cfg.codec.dbscan)
            }
            Err(e) => Err(e.clone()),
        };
        if let Ok(d) = &decoded {
            out.write(&format!("{name}.vasp"), write_poscar(&d.structure).as_bytes())?;
        }
        let mut row = vec![i.to_string(), s.to_string()];
        row.extend(decode_cells(&decoded));
        rows.push(row);
    }
    let header: Vec<&str> = ["index", "seed"].into_iter().chain(DECODE_COLUMNS).collect();
    out.write("generate_report.csv", &table(&header, &rows)?)?;
    out.finish("generate", argv, &cfg)?;
    Ok(())
}
