use pccd_core::crystal::{parse_poscar, CrystalStructure};

use crate::args::EncodeArgs;
use crate::config::RunConfig;
use crate::dataset::{load_poscars, require_dir, stem};
use crate::error::{CliError, Result};
use crate::manifest::OutputDir;

use super::table;

pub const MANIFEST: &str = "encode_manifest.csv";
pub const COLUMNS: [&str; 7] = ["filename", "tensor", "formula", "slots", "site_count", "status", "violations"];

pub fn run(a: &EncodeArgs, cfg: RunConfig, argv: &[String]) -> Result<()> {
    let input = require_dir(a.input.as_deref(), cfg.dataset_dir.as_deref(), "input")?;
    let fixed = cfg.fixed_slots()?;
    let entries = load_poscars(&input, fixed.as_ref())?;
    let mut out = OutputDir::create(&cfg.output_dir)?;
    let mut seen = std::collections::BTreeSet::new();
    let mut rows = Vec::new();
    let mut encoded = 0;
    for e in &entries {
        match &e.outcome {
            Ok(enc) => {
                let name = format!("{}.pct", stem(&e.path));
                if !seen.insert(name.clone()) {
                    return Err(CliError::Input(format!("two inputs would both be written to {name}")));
                }
                out.write(&name, &enc.tensor.to_pct_bytes())?;
                encoded += 1;
                rows.push([
                    e.id.clone(),
                    name,
                    enc.structure.reduced_formula(),
                    enc.slots.to_string(),
                    enc.structure.len().to_string(),
                    "encoded".into(),
                    String::new(),
                ]);
            }
            Err(why) => {
                // parseable but not encodable files still get formula and size
                let parsed: Option<CrystalStructure> =
                    std::fs::read_to_string(&e.path).ok().and_then(|t| parse_poscar(&t).ok());
                rows.push([
                    e.id.clone(),
                    String::new(),
                    parsed.as_ref().map(|s| s.reduced_formula()).unwrap_or_default(),
                    String::new(),
                    parsed.as_ref().map(|s| s.len().to_string()).unwrap_or_default(),
                    "skipped".into(),
                    why.clone(),
                ]);
                log::warn!("{}: {why}", e.id);
            }
        }
    }
    out.write(MANIFEST, &table(&COLUMNS, &rows)?)?;
    out.finish("encode", argv, &cfg)?;
    log::info!("encoded {encoded} of {} files", entries.len());
    if encoded == 0 {
        return Err(CliError::Input(format!("no encodable POSCAR files in {}", input.display())));
    }
    Ok(())
}
