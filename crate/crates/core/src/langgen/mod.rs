//! Instruction generation: path segmentation, physical task patterns,
//! template realization and the rejection-sampling generator.

mod generator;
mod matcher;
mod template;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

pub use generator::{
    generate_dataset, generate_indexed, generate_instance, generate_unrestricted, verify_instance, DatasetStream, GeneratorConfig,
    Mix, VerifyError,
};
pub use matcher::{match_candidates, match_pattern, pattern_slots, Binding, COUNT_WORDS, SIDE_WORDS};
pub use template::{realize, Piece, Slot, Template, TemplateError, TemplateSet, BUNDLED_TEMPLATES};

use crate::worldsim::{execute, Action, Node, Outcome, Pose, WorldMap};

/// Task taxonomy of single-sentence instructions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskCategory {
    LanguageOnly,
    TurnToX,
    MoveToX,
    TurnAndMoveToX,
    Orient,
    Description,
    MoveUntil,
    AnyCombination,
}

impl TaskCategory {
    pub const ALL: [TaskCategory; 8] = [
        TaskCategory::LanguageOnly,
        TaskCategory::TurnToX,
        TaskCategory::MoveToX,
        TaskCategory::TurnAndMoveToX,
        TaskCategory::Orient,
        TaskCategory::Description,
        TaskCategory::MoveUntil,
        TaskCategory::AnyCombination,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TaskCategory::LanguageOnly => "LanguageOnly",
            TaskCategory::TurnToX => "TurnToX",
            TaskCategory::MoveToX => "MoveToX",
            TaskCategory::TurnAndMoveToX => "TurnAndMoveToX",
            TaskCategory::Orient => "Orient",
            TaskCategory::Description => "Description",
            TaskCategory::MoveUntil => "MoveUntil",
            TaskCategory::AnyCombination => "AnyCombination",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Share of the category in the original human corpus.
    pub fn corpus_frequency(self) -> f64 {
        match self {
            TaskCategory::LanguageOnly => 0.317,
            TaskCategory::TurnToX => 0.0701,
            TaskCategory::MoveToX => 0.1338,
            TaskCategory::TurnAndMoveToX => 0.0173,
            TaskCategory::Orient => 0.0516,
            TaskCategory::Description => 0.0964,
            TaskCategory::MoveUntil => 0.0871,
            TaskCategory::AnyCombination => 0.2267,
        }
    }
}

impl fmt::Display for TaskCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SegmentKind {
    Turn,
    Move,
}

/// Maximal run of turns or of moves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Segment {
    pub kind: SegmentKind,
    pub actions: Vec<Action>,
}

/// Split an action sequence into alternating turn and move runs. Anything
/// from the first STOP on is ignored.
pub fn segment_path(actions: &[Action]) -> Vec<Segment> {
    let mut segments: Vec<Segment> = Vec::new();
    for &a in actions.iter().take_while(|&&a| a != Action::Stop) {
        let kind = if a.is_turn() { SegmentKind::Turn } else { SegmentKind::Move };
        match segments.last_mut() {
            Some(s) if s.kind == kind => s.actions.push(a),
            _ => segments.push(Segment { kind, actions: alloc::vec![a] }),
        }
    }
    segments
}

/// One training example.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub id: u64,
    pub seed: u64,
    pub category: TaskCategory,
    pub world: WorldMap,
    pub start: Pose,
    /// Goal of the sampled path; the instruction may cover only a prefix.
    pub goal: Node,
    pub instruction: Vec<String>,
    /// Gold actions, ending with STOP.
    pub actions: Vec<Action>,
}

impl Instance {
    /// Pose reached by the gold actions.
    pub fn gold_pose(&self) -> Pose {
        execute(&self.world, self.start, &self.actions, self.actions.len().max(1)).pose
    }

    /// Whether the gold actions execute cleanly and end with STOP.
    pub fn gold_executes(&self) -> bool {
        let run = execute(&self.world, self.start, &self.actions, self.actions.len().max(1));
        run.outcome == Outcome::Stopped && run.applied == self.actions.len()
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GenError {
    #[error("no {category} instance found within {attempts} attempts")]
    Exhausted { category: TaskCategory, attempts: usize },
    #[error("invalid mix: {0}")]
    InvalidMix(String),
    #[error(transparent)]
    Template(#[from] TemplateError),
}
