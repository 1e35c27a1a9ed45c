//! Two-phase pretraining data blend planning.
//!
//! The crate turns a dataset [`manifest`] into validated [`blend`] weights,
//! exact epoch accounting, horizon-rescaled plans, deterministic token
//! [`schedule`]s and the matching [`lr`] schedule. It never reads corpus bytes
//! and never trains anything; every quantity is derived from token counts.
//!
//! ```
//! use blendplan::{compose_plan, plan_key_epochs, ratio, reference_manifest, Catalog};
//!
//! let catalog = Catalog::builtin();
//! let plan = compose_plan(
//!     catalog.blend("P1-Blend4")?,
//!     catalog.blend("P2-Blend1")?,
//!     1_000_000_000_000,
//!     ratio(3, 10),
//! )?;
//! let math = plan_key_epochs(&plan, &reference_manifest(), "math")?;
//! assert!((blendplan::to_f64(&math) - 8.57).abs() < 0.01);
//! # Ok::<(), blendplan::Error>(())
//! ```

pub mod blend;
pub mod catalog;
pub mod cli;
pub mod crawl;
pub mod error;
pub mod lr;
pub mod manifest;
pub mod ratio;
pub mod schedule;
pub mod simulate;
pub mod units;

pub use blend::{
    compose_plan, epochs_seen, key_epochs, load_blend, natural_distribution, plan_epochs, plan_key_epochs,
    rescale_for_horizon, resolve, target_epochs_blend, validate_blend, BlendSpec, Diagnostic, EpochCaps,
    PhaseConfig, TrainingPlan,
};
pub use catalog::Catalog;
pub use crawl::{cc_blend_preset, expand_crawl, probe_blend, CrawlBlend, CrawlPart};
pub use error::{Error, Result};
pub use lr::{lr_at, phase_boundary_lr, Decay, LrConfig};
pub use manifest::{
    downsample, load_manifest, reference_manifest, save_manifest, Category, DataSource, Manifest, QualityLabel, Shard,
};
pub use ratio::{parse_ratio, ratio, to_f64, Ratio};
pub use schedule::{
    build_schedule, partition_for_worker, prefix_counts, Cursor, Ordering, Schedule, ScheduleConfig, ScheduleItem,
};
pub use simulate::{exposure_report, horizon_whatif, overexposure_check, ExposureReport, Milestone};
pub use units::parse_tokens;
