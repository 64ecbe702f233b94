use crate::config::RunConfig;
use crate::error::Result;
use crate::manifest::OutputDir;

pub fn run(cfg: RunConfig, argv: &[String]) -> Result<()> {
    let sch = cfg.schedule()?;
    let mut out = OutputDir::create(&cfg.output_dir)?;
    out.write("schedule.csv", sch.to_csv().as_bytes())?;
    out.finish("inspect-schedule", argv, &cfg)?;
    println!("alpha_bar_T {}", sch.alpha_bar(sch.steps()));
    Ok(())
}
