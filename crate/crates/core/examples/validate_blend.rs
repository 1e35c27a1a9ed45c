//! Validate every bundled preset plus one broken blend.

use blendplan::ratio::parse_percent;
use blendplan::{reference_manifest, validate_blend, BlendSpec, Catalog};

fn main() -> blendplan::Result<()> {
    let catalog = Catalog::builtin();
    let m = reference_manifest();
    for name in catalog.blend_names() {
        let problems = validate_blend(&catalog.blend(name)?, &m);
        println!("{name:<20} {}", if problems.is_empty() { "ok" } else { "INVALID" });
    }
    let broken = BlendSpec::new(
        "broken",
        [
            ("math".to_string(), parse_percent("60")?),
            ("astrology".to_string(), parse_percent("30")?),
        ],
    );
    for d in validate_blend(&broken, &m) {
        println!("{d}");
    }
    Ok(())
}
