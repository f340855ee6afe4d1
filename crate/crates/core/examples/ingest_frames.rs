//! Parses a frame log, drops bad frames and joins the streams with a
//! trait table.
//!
//!     cargo run --example ingest_frames

use std::io::Cursor;

use emotrait::cohort::{Cohort, FrameFormat};
use emotrait::synth::{plant_cohort, PlantSpec};

fn main() -> emotrait::Result<()> {
    let synth = plant_cohort(&PlantSpec {
        n_participants: 20,
        hz: 2.0,
        ..PlantSpec::paper_scale(1)
    })?;
    let mut log = Vec::new();
    synth.write_frames(&mut log, FrameFormat::Jsonl)?;

    // a few malformed frames: out of range, over-summed, a duplicate timestamp
    let bad = [
        r#"{"participant_id":"s0001","video_id":3,"timestamp_ms":0,"angry":1.4,"disgusted":0,"fearful":0,"happy":0,"neutral":0,"sad":0,"surprised":0}"#,
        r#"{"participant_id":"s0001","video_id":3,"timestamp_ms":1,"angry":0.9,"disgusted":0.9,"fearful":0,"happy":0,"neutral":0,"sad":0,"surprised":0}"#,
        r#"{"participant_id":"s0001","video_id":3,"timestamp_ms":500,"angry":0.1,"disgusted":0,"fearful":0,"happy":0.5,"neutral":0.4,"sad":0,"surprised":0}"#,
    ];
    for line in bad {
        log.extend_from_slice(line.as_bytes());
        log.push(b'\n');
    }

    let (cohort, validation, assembly) = Cohort::ingest(Cursor::new(log), FrameFormat::Jsonl, synth.traits.clone())?;
    println!("records read      {}", validation.records_read);
    println!("frames retained   {}", validation.retained_frames);
    println!("out of range      {}", validation.out_of_range);
    println!("sum above 1.5     {}", validation.over_sum);
    println!("no face           {}", validation.no_face);
    println!("duplicates        {}", validation.duplicates);
    println!("absent streams    {}", validation.absent_streams);
    println!("cohort size       {}", cohort.len());
    for (family, n) in &assembly.family_n {
        println!("  {family:<10} N = {n}");
    }
    Ok(())
}
