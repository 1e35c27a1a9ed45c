//! Split a blend's crawl share across quality buckets.

use blendplan::crawl::natural_crawl_blend;
use blendplan::ratio::{format_percent, to_f64};
use blendplan::{expand_crawl, probe_blend, reference_manifest, Catalog};

fn main() -> blendplan::Result<()> {
    let catalog = Catalog::builtin();
    let m = reference_manifest();
    let p1 = catalog.blend("P1-Blend1")?;

    for name in ["CC-Blend1", "CC-Blend3"] {
        let expanded = expand_crawl(&p1, &catalog.crawl_blend(name)?)?;
        println!("{}", expanded.name);
        for (key, w) in expanded.weights.iter().filter(|(k, _)| k.starts_with("crawl")) {
            println!("  {key:<28} {:>6}%", format_percent(w));
        }
    }

    let nd = natural_crawl_blend(&m)?;
    println!("natural crawl split");
    for (label, w) in nd.bucket_weights(&m)? {
        println!("  {label:?}: {:.2}%", 100.0 * to_f64(&w));
    }

    let probe = probe_blend("crawl/medium", &m)?;
    println!("probe for crawl/medium, {} tokens:", probe.recommended_budget);
    for (key, w) in &probe.blend.weights {
        println!("  {key}: {}%", format_percent(w));
    }
    Ok(())
}
