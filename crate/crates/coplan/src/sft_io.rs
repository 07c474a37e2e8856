//! Fine-tuning records from scenarios, and their JSONL files.
//!
//! Each line is one record with keys, in order: `instruction`,
//! `text_prompt`, `images` (two base64 PGMs: current and past BEV),
//! `reasoning`, `targets` (`[[dx, dy], ...]`, one per nominal waypoint).

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use coplan_core::scenario::{Scenario, Trajectory};
use coplan_core::sft::{build_sft_record, SftRecord, DEFAULT_REASONING_TEMPLATE};
use coplan_core::Error as CoreError;

use crate::config::PipelineConfig;
use crate::pgm::bev_to_base64_pgm;
use crate::pipeline::{ground_truth, prepare, StageLatency};
use crate::{Error, Result};

/// A record together with the plans it was derived from.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledRecord {
    pub record: SftRecord,
    pub nominal: Trajectory,
    pub safe: Trajectory,
}

/// Build the record of one scenario: prompts as the pipeline would send
/// them, the full-information geometric plan as target, and its decision
/// log as reasoning.
pub fn scenario_record(scenario: &Scenario, cfg: &PipelineConfig, template: &str) -> Result<LabeledRecord> {
    let instruction = cfg.instruction()?;
    let prep = prepare(scenario, cfg, &instruction, &mut StageLatency::default())
        .map_err(|e| Error::Format(format!("{}: {} stage failed: {}", scenario.id, e.stage, e.message)))?;
    let nav_count = prep.text.content().nav.len();
    if nav_count != prep.nominal.len() {
        return Err(CoreError::LengthMismatch {
            expected: prep.nominal.len(),
            got: nav_count,
        }
        .into());
    }
    let (safe, decision, _) = ground_truth(scenario, &prep.nominal, cfg)?;
    let images = [
        bev_to_base64_pgm(&prep.visual.bev_now),
        bev_to_base64_pgm(&prep.visual.bev_past),
    ];
    let record = build_sft_record(
        &prep.text,
        images,
        &prep.nominal.positions(),
        &safe.positions(),
        &decision,
        template,
    )?;
    Ok(LabeledRecord {
        record,
        nominal: prep.nominal,
        safe,
    })
}

pub fn default_template() -> &'static str {
    DEFAULT_REASONING_TEMPLATE
}

/// Write one record per line; returns the number written.
pub fn export_jsonl<'a>(records: impl IntoIterator<Item = &'a SftRecord>, path: &Path) -> Result<usize> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut n = 0;
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        n += 1;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(n)
}

pub fn read_jsonl(path: &Path) -> Result<Vec<SftRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if !line.trim().is_empty() {
            out.push(serde_json::from_str(&line)?);
        }
    }
    Ok(out)
}
