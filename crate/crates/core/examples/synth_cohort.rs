//! Generates a synthetic cohort, writes it in the ingest formats and
//! compares trait moments with their targets.
//!
//!     cargo run --example synth_cohort [out_dir]

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use emotrait::cohort::{write_trait_table, FrameFormat, TraitKind};
use emotrait::features::describe;
use emotrait::synth::{one_link_per_trait, plant_cohort, PlantSpec};

fn main() -> emotrait::Result<()> {
    let out = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    let spec = PlantSpec {
        hz: 2.0,
        links: one_link_per_trait(0.012, 0.002),
        ..PlantSpec::desk(10)
    };
    let synth = plant_cohort(&spec)?;

    let frames = out.join("frames.csv");
    synth.write_frames(BufWriter::new(File::create(&frames)?), FrameFormat::Csv)?;
    write_trait_table(File::create(out.join("traits.csv"))?, &synth.traits)?;
    std::fs::write(out.join("ground_truth.json"), synth.truth.to_json())?;
    println!("wrote {} participants to {}", synth.traits.len(), out.display());

    println!("{:<24}{:>8}{:>8}{:>8}{:>8}", "trait", "M", "M*", "SD", "SD*");
    for t in TraitKind::ALL {
        let col: Vec<f64> = synth.traits.rows.values().filter_map(|r| r.get(t)).collect();
        let d = describe(&col)?;
        let r = t.reference_stats();
        println!("{:<24}{:>8.2}{:>8.2}{:>8.2}{:>8.2}", t.display_name(), d.mean, r.mean, d.sd, r.sd);
    }
    for l in synth.truth.links.iter().take(4) {
        println!("link {} -> {} beta {} implied rho {:.3}", l.link.feature.name(), l.link.trait_kind.display_name(), l.link.beta, l.implied_rho);
    }
    Ok(())
}
