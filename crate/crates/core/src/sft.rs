//! Supervised fine-tuning records: instruction, prompts, a reasoning trace
//! from the geometric planner's decision log, and residual targets.

use alloc::string::String;
use alloc::vec::Vec;

use crate::alignment::TextPrompt;
use crate::geom::Vec2;
use crate::planner::AvoidanceDecision;
use crate::{Error, Result};

/// Default reasoning template. `{trigger}`, `{candidate}` and `{clearance}`
/// are replaced with the decision log's narration.
pub const DEFAULT_REASONING_TEMPLATE: &str = "Trigger: {trigger}. Decision: {candidate}. Result: {clearance}.";

/// `safe_j - nominal_j` for every waypoint.
pub fn gt_residuals(nominal: &[Vec2], safe: &[Vec2]) -> Result<Vec<Vec2>> {
    if nominal.len() != safe.len() {
        return Err(Error::LengthMismatch {
            expected: nominal.len(),
            got: safe.len(),
        });
    }
    Ok(safe.iter().zip(nominal).map(|(&s, &g)| s - g).collect())
}

pub fn render_reasoning(decision: &AvoidanceDecision, template: &str) -> String {
    template
        .replace("{trigger}", &decision.trigger_text())
        .replace("{candidate}", &decision.candidate_text())
        .replace("{clearance}", &decision.clearance_text())
}

/// One training example. Field order is the serialized key order.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SftRecord {
    pub instruction: String,
    pub text_prompt: String,
    /// Current and past BEV images (inline base64 or file paths).
    pub images: [String; 2],
    pub reasoning: String,
    pub targets: Vec<[f64; 2]>,
}

impl SftRecord {
    pub fn target_deltas(&self) -> Vec<Vec2> {
        self.targets.iter().map(|&[x, y]| Vec2::new(x, y)).collect()
    }
}

/// Assemble a record from a prompt, the encoded images and the oracle's
/// safe plan. Targets are the residuals that turn `nominal` into `safe`.
pub fn build_sft_record(
    text: &TextPrompt,
    images: [String; 2],
    nominal: &[Vec2],
    safe: &[Vec2],
    decision: &AvoidanceDecision,
    template: &str,
) -> Result<SftRecord> {
    if images.iter().any(String::is_empty) {
        return Err(Error::Empty("images"));
    }
    let targets = gt_residuals(nominal, safe)?.into_iter().map(|d| [d.x, d.y]).collect();
    Ok(SftRecord {
        instruction: text.instruction.clone(),
        text_prompt: text.context_block.clone(),
        images,
        reasoning: render_reasoning(decision, template),
        targets,
    })
}
