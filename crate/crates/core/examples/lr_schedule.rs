//! Cosine and linear LR curves with the phase-2 handoff, as CSV.

use std::io;

use blendplan::lr::{sample, write_csv};
use blendplan::{phase_boundary_lr, Decay, LrConfig};

fn main() -> blendplan::Result<()> {
    let total = 1_000_000_000_000;
    let cosine = LrConfig::new(total, 600_000_000_000)?;
    let linear = cosine.clone().with_decay(Decay::Linear);
    eprintln!(
        "phase 2 starts at {:e} (cosine) and {:e} (linear)",
        phase_boundary_lr(&cosine)?,
        phase_boundary_lr(&linear)?
    );
    write_csv(&sample(&cosine, total / 20)?, io::stdout().lock()).expect("stdout");
    Ok(())
}
