//! Reweight a blend so math is seen exactly 8 times in phase 2.

use blendplan::ratio::{format_percent, int, to_f64};
use blendplan::{key_epochs, reference_manifest, target_epochs_blend, Catalog};

fn main() -> blendplan::Result<()> {
    let m = reference_manifest();
    let base = Catalog::builtin().blend("P2-Blend1")?;
    let budget = 300_000_000_000;
    println!("before: math {:.3} epochs", to_f64(&key_epochs(&base, budget, &m, "math")?));
    let tuned = target_epochs_blend(&base, "math", &int(8), budget, &m)?;
    println!("after:  math {:.3} epochs", to_f64(&key_epochs(&tuned, budget, &m, "math")?));
    for (key, w) in &tuned.weights {
        println!("  {key:<14} {:>7.3}% (was {}%)", 100.0 * to_f64(w), format_percent(&base.weight(key)));
    }
    Ok(())
}
