//! Ego-frame alignment and prompt encoding.
//!
//! The textual context is a line-oriented grammar, fixed field order:
//!
//! ```text
//! HAZARD x=<f> y=<f> t=<f>        | HAZARD none
//! NAV n=<int>
//! WP <j> x=<f> y=<f>              (n lines)
//! EGO n=<int>
//! S t=<f> x=<f> y=<f> vx=<f> vy=<f> yaw=<f>   (n lines)
//! ```
//!
//! Positions are ego-relative and times are relative to `t_now`.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt::Write;

use crate::bev::BevMap;
use crate::geom::Vec2;
use crate::structuring::ContextPackage;
use crate::{Error, Result};

/// Instruction shipped with the crate.
pub const DEFAULT_INSTRUCTION: &str = include_str!("../assets/instruction.txt");

/// Total prompt token budget (text plus visual).
pub const DEFAULT_TOKEN_BUDGET: usize = 1600;
pub const DEFAULT_PATCH_SIZE: usize = 8;

/// Decimals used for coordinates in an unreduced prompt.
pub const FULL_PRECISION: usize = 2;
/// Decimals after the rounding stage of [`reduce_tokens`].
pub const REDUCED_PRECISION: usize = 1;

pub fn to_ego_frame(p: Vec2, ego: Vec2) -> Vec2 {
    p - ego
}

pub fn from_ego_frame(rel: Vec2, ego: Vec2) -> Vec2 {
    rel + ego
}

pub fn normalize_time(t: f64, t0: f64) -> f64 {
    t - t0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedHazard {
    pub pos: Vec2,
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignedState {
    pub t: f64,
    pub pos: Vec2,
    pub vel: Vec2,
    pub yaw: f64,
}

/// A [`ContextPackage`] translated to the ego frame on a zero-centred clock.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedContext {
    pub hazard: Option<AlignedHazard>,
    pub nav: Vec<Vec2>,
    pub history: Vec<AlignedState>,
}

/// Translate every position by the current ego position and shift every
/// time by `t_now`. Without history the first navigation waypoint stands in
/// for the ego position.
pub fn align_context(ctx: &ContextPackage) -> AlignedContext {
    let ego = ctx
        .ego_now()
        .map(|s| s.position())
        .or_else(|| ctx.nav_eff.first().map(|w| w.xy()))
        .unwrap_or(Vec2::ZERO);
    AlignedContext {
        hazard: ctx.hazard.map(|h| AlignedHazard {
            pos: to_ego_frame(h.position(), ego),
            t: normalize_time(h.t_h, ctx.t_now),
        }),
        nav: ctx.nav_eff.iter().map(|w| to_ego_frame(w.xy(), ego)).collect(),
        history: ctx
            .ego_history
            .iter()
            .map(|s| AlignedState {
                t: normalize_time(s.time(ctx.dt), ctx.t_now),
                pos: to_ego_frame(s.position(), ego),
                vel: s.velocity(),
                yaw: s.yaw,
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TextPrompt {
    pub instruction: String,
    pub context_block: String,
    /// Whitespace-delimited words of instruction plus context block.
    pub estimated_tokens: usize,
    content: AlignedContext,
    precision: usize,
}

impl TextPrompt {
    pub fn content(&self) -> &AlignedContext {
        &self.content
    }

    pub fn precision(&self) -> usize {
        self.precision
    }

    /// Instruction and context as sent to a planner.
    pub fn full_text(&self) -> String {
        let mut s = String::with_capacity(self.instruction.len() + self.context_block.len() + 1);
        s.push_str(self.instruction.trim_end());
        s.push('\n');
        s.push_str(&self.context_block);
        s
    }

    fn render(instruction: String, content: AlignedContext, precision: usize) -> Self {
        let context_block = render_block(&content, precision);
        let estimated_tokens = word_count(&instruction) + word_count(&context_block);
        Self {
            instruction,
            context_block,
            estimated_tokens,
            content,
            precision,
        }
    }
}

fn word_count(s: &str) -> usize {
    s.split_whitespace().count()
}

/// Fixed-point rendering without a negative zero.
pub fn fmt_fixed(v: f64, decimals: usize) -> String {
    let s = format!("{:.*}", decimals, v);
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        String::from(&s[1..])
    } else {
        s
    }
}

fn render_block(c: &AlignedContext, precision: usize) -> String {
    let f = |v: f64| fmt_fixed(v, precision);
    let mut out = String::new();
    // HAZARD is never reduced
    match &c.hazard {
        Some(h) => {
            let hf = |v: f64| fmt_fixed(v, FULL_PRECISION);
            let _ = writeln!(out, "HAZARD x={} y={} t={}", hf(h.pos.x), hf(h.pos.y), hf(h.t));
        }
        None => out.push_str("HAZARD none\n"),
    }
    let _ = writeln!(out, "NAV n={}", c.nav.len());
    for (j, w) in c.nav.iter().enumerate() {
        let _ = writeln!(out, "WP {} x={} y={}", j, f(w.x), f(w.y));
    }
    let _ = writeln!(out, "EGO n={}", c.history.len());
    for s in &c.history {
        let _ = writeln!(
            out,
            "S t={} x={} y={} vx={} vy={} yaw={}",
            f(s.t),
            f(s.pos.x),
            f(s.pos.y),
            f(s.vel.x),
            f(s.vel.y),
            f(s.yaw)
        );
    }
    out
}

pub fn encode_text_prompt(ctx: &ContextPackage, instruction: &str) -> TextPrompt {
    TextPrompt::render(String::from(instruction), align_context(ctx), FULL_PRECISION)
}

/// Current and past overlaid BEV rasters.
#[derive(Debug, Clone, PartialEq)]
pub struct VisualPrompt {
    pub bev_now: BevMap,
    pub bev_past: BevMap,
    pub patch_size: usize,
}

impl VisualPrompt {
    pub fn new(bev_now: BevMap, bev_past: BevMap, patch_size: usize) -> Result<Self> {
        if bev_now.grid != bev_past.grid {
            return Err(Error::ShapeMismatch("current and past BEV grids differ"));
        }
        if !(bev_past.timestamp < bev_now.timestamp) {
            return Err(Error::InvalidState("past BEV must precede current BEV"));
        }
        if patch_size == 0 {
            return Err(Error::Config("patch size must be positive"));
        }
        Ok(Self {
            bev_now,
            bev_past,
            patch_size,
        })
    }

    /// Two maps, one token per patch each.
    pub fn visual_tokens(&self) -> Result<usize> {
        let g = self.bev_now.grid;
        let p = self.patch_size;
        if p == 0 || !g.width.is_multiple_of(p) || !g.height.is_multiple_of(p) {
            return Err(Error::Config("patch size must divide the BEV dimensions"));
        }
        Ok(2 * (g.width / p) * (g.height / p))
    }
}

pub fn estimate_tokens(tp: &TextPrompt, vp: &VisualPrompt) -> Result<usize> {
    Ok(tp.estimated_tokens + vp.visual_tokens()?)
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReduceError {
    #[error("token budget must be positive")]
    InvalidBudget,
    #[error("prompt still needs {tokens} tokens after every reduction (budget {budget})")]
    OverBudget {
        best_effort: Box<TextPrompt>,
        tokens: usize,
        budget: usize,
    },
}

/// Shrink a prompt's text until `estimated_tokens <= budget`.
///
/// Stages, each applied only while still over budget: round coordinates to
/// one decimal; keep every other history sample (always keeping the most
/// recent); drop navigation waypoints from the tail, never below two. The
/// HAZARD line and the field order are untouched.
pub fn reduce_tokens(tp: &TextPrompt, budget: usize) -> core::result::Result<TextPrompt, ReduceError> {
    if budget == 0 {
        return Err(ReduceError::InvalidBudget);
    }
    if tp.estimated_tokens <= budget {
        return Ok(tp.clone());
    }
    let mut content = tp.content.clone();
    let precision = tp.precision.min(REDUCED_PRECISION);
    let mut cur = TextPrompt::render(tp.instruction.clone(), content.clone(), precision);

    if cur.estimated_tokens > budget {
        let n = content.history.len();
        content.history = content
            .history
            .iter()
            .enumerate()
            .filter(|(i, _)| (n - 1 - i).is_multiple_of(2))
            .map(|(_, s)| *s)
            .collect();
        cur = TextPrompt::render(tp.instruction.clone(), content.clone(), precision);
    }
    while cur.estimated_tokens > budget && content.nav.len() > 2 {
        content.nav.pop();
        cur = TextPrompt::render(tp.instruction.clone(), content.clone(), precision);
    }
    if cur.estimated_tokens > budget {
        let tokens = cur.estimated_tokens;
        return Err(ReduceError::OverBudget {
            best_effort: Box::new(cur),
            tokens,
            budget,
        });
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bev::GridSpec;
    use crate::scenario::{AgentId, HazardAlert, VehicleState, Waypoint};

    fn ctx(hazard: bool, n_hist: i64, n_nav: usize) -> ContextPackage {
        ContextPackage {
            hazard: hazard.then_some(HazardAlert {
                x: 80.0,
                y: 0.0,
                z: 0.0,
                t_h: 3.0,
                issue_time: 0.0,
            }),
            nav_start: 0,
            nav_eff: (0..n_nav)
                .map(|i| Waypoint::new(30.0 + 5.0 * i as f64, -2.0, 0.0))
                .collect(),
            ego_history: (0..n_hist)
                .map(|i| {
                    let k = i - (n_hist - 1);
                    VehicleState {
                        agent_id: AgentId::from("ego"),
                        k,
                        x: 30.0 + k as f64,
                        y: -2.0,
                        z: 0.0,
                        vx: 10.0,
                        vy: 0.0,
                        yaw: 0.0,
                    }
                })
                .collect(),
            t_now: 0.0,
            dt: 0.1,
        }
    }

    #[test]
    fn ego_frame_examples() {
        assert_eq!(to_ego_frame(Vec2::new(10.0, 5.0), Vec2::new(10.0, 5.0)), Vec2::ZERO);
        assert_eq!(
            to_ego_frame(Vec2::new(80.0, 0.0), Vec2::new(30.0, -2.0)),
            Vec2::new(50.0, 2.0)
        );
        let p = Vec2::new(1.5, -7.25);
        let e = Vec2::new(-3.0, 2.0);
        assert_eq!(from_ego_frame(to_ego_frame(p, e), e), p);
    }

    #[test]
    fn time_examples() {
        assert_eq!(normalize_time(4.0, 4.0), 0.0);
        assert_eq!(normalize_time(2.5, 4.0), -1.5);
        assert_eq!(normalize_time(7.0, 4.0), 3.0);
    }

    #[test]
    fn prompt_layout() {
        let tp = encode_text_prompt(&ctx(true, 3, 2), "Plan.");
        let expected = "HAZARD x=50.00 y=2.00 t=3.00\n\
NAV n=2\n\
WP 0 x=0.00 y=0.00\n\
WP 1 x=5.00 y=0.00\n\
EGO n=3\n\
S t=-0.20 x=-2.00 y=0.00 vx=10.00 vy=0.00 yaw=0.00\n\
S t=-0.10 x=-1.00 y=0.00 vx=10.00 vy=0.00 yaw=0.00\n\
S t=0.00 x=0.00 y=0.00 vx=10.00 vy=0.00 yaw=0.00\n";
        assert_eq!(tp.context_block, expected);
        assert_eq!(tp.estimated_tokens, 1 + 4 + 2 + 8 + 2 + 21);
    }

    #[test]
    fn absent_hazard_renders_none() {
        let tp = encode_text_prompt(&ctx(false, 1, 1), "x");
        assert!(tp.context_block.starts_with("HAZARD none\nNAV n=1\n"));
    }

    #[test]
    fn encoding_is_deterministic() {
        let c = ctx(true, 21, 5);
        assert_eq!(
            encode_text_prompt(&c, DEFAULT_INSTRUCTION),
            encode_text_prompt(&c, DEFAULT_INSTRUCTION)
        );
    }

    #[test]
    fn no_negative_zero() {
        assert_eq!(fmt_fixed(-0.001, 2), "0.00");
        assert_eq!(fmt_fixed(-0.0, 1), "0.0");
        assert_eq!(fmt_fixed(-0.05, 2), "-0.05");
        assert_eq!(fmt_fixed(1.25, 1), "1.2");
    }

    fn vp(size: usize, patch: usize) -> VisualPrompt {
        let g = GridSpec::new(size, size, 1.0, (0, 0)).unwrap();
        VisualPrompt::new(BevMap::empty(g, 0.0), BevMap::empty(g, -0.5), patch).unwrap()
    }

    #[test]
    fn token_estimate_examples() {
        let mut tp = encode_text_prompt(&ctx(false, 0, 0), "");
        tp.estimated_tokens = 120;
        assert_eq!(estimate_tokens(&tp, &vp(64, 8)).unwrap(), 248);
        tp.estimated_tokens = 0;
        assert_eq!(estimate_tokens(&tp, &vp(8, 8)).unwrap(), 2);
        assert!(estimate_tokens(&tp, &vp(64, 7)).is_err());
    }

    #[test]
    fn visual_prompt_invariants() {
        let g = GridSpec::new(8, 8, 1.0, (0, 0)).unwrap();
        let g2 = GridSpec::new(16, 8, 1.0, (0, 0)).unwrap();
        assert!(VisualPrompt::new(BevMap::empty(g, 0.0), BevMap::empty(g, 0.0), 8).is_err());
        assert!(VisualPrompt::new(BevMap::empty(g, 0.0), BevMap::empty(g2, -1.0), 8).is_err());
        assert!(VisualPrompt::new(BevMap::empty(g, 0.0), BevMap::empty(g, -1.0), 0).is_err());
    }

    #[test]
    fn reduce_noop_under_budget() {
        let tp = encode_text_prompt(&ctx(true, 21, 5), DEFAULT_INSTRUCTION);
        assert_eq!(reduce_tokens(&tp, 10_000).unwrap(), tp);
        assert_eq!(reduce_tokens(&tp, 0), Err(ReduceError::InvalidBudget));
    }

    #[test]
    fn reduce_thins_history_once() {
        let tp = encode_text_prompt(&ctx(true, 21, 5), "go");
        let out = reduce_tokens(&tp, tp.estimated_tokens - 1).unwrap();
        assert_eq!(out.content().history.len(), 11);
        assert_eq!(out.content().nav.len(), 5);
        assert_eq!(out.content().history.last().unwrap().t, 0.0);
        assert!(out.context_block.contains("EGO n=11\n"));
        assert_eq!(out.precision(), REDUCED_PRECISION);
        // HAZARD line verbatim
        assert_eq!(out.context_block.lines().next(), tp.context_block.lines().next());
    }

    #[test]
    fn reduce_truncates_nav_then_fails() {
        let tp = encode_text_prompt(&ctx(true, 4, 6), "go");
        // after thinning: 2 history lines (14 words). Each WP line is 4 words.
        let thinned = 1 + 4 + 2 + 6 * 4 + 2 + 2 * 7;
        let out = reduce_tokens(&tp, thinned - 8).unwrap();
        assert_eq!(out.content().nav.len(), 4);
        match reduce_tokens(&tp, 5) {
            Err(ReduceError::OverBudget {
                best_effort,
                tokens,
                budget,
            }) => {
                assert_eq!(budget, 5);
                assert_eq!(best_effort.content().nav.len(), 2);
                assert_eq!(best_effort.estimated_tokens, tokens);
                assert!(best_effort.context_block.starts_with("HAZARD x=50.00"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn full_text_joins_instruction() {
        let tp = encode_text_prompt(&ctx(false, 0, 1), "Do it.\n");
        assert_eq!(
            tp.full_text(),
            "Do it.\nHAZARD none\nNAV n=1\nWP 0 x=0.00 y=0.00\nEGO n=0\n"
        );
    }
}
