//! Lattice-surgery program representation and its JSON ingestion format.
//!
//! A [`Program`] is an ordered list of timed instructions over a grid of
//! `d x d` surface-code patches. The JSON schema (version 1) is:
//!
//! ```text
//! {
//!   "format": 1,
//!   "distance": 7,
//!   "round_time_us": 1.0,              // optional, default 1
//!   "grid": {"rows": 4, "cols": 8},
//!   "instructions": [
//!     {"kind": "TTeleport", "patches": [[1, 0], [0, 0]],
//!      "start_round": 7, "duration": 7},
//!     {"kind": "SGate", "patches": [[1, 0]], "start_round": 14,
//!      "duration": 2, "conditional_on": 0}
//!   ]
//! }
//! ```
//!
//! `blocking` may be given per instruction; it defaults to `true` for
//! `TTeleport` and `false` otherwise.

mod builtins;

pub use builtins::{builtin_program, Builtin, BuiltinParams};

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

/// Current JSON schema version.
pub const FORMAT_VERSION: u64 = 1;

/// Grid position of one surface-code patch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PatchId {
    pub row: u32,
    pub col: u32,
}

impl PatchId {
    pub const fn new(row: u32, col: u32) -> Self {
        Self { row, col }
    }

    /// Row-major linear index on a grid with `cols` columns.
    pub fn index(self, cols: u32) -> usize {
        (self.row as usize) * (cols as usize) + self.col as usize
    }

    /// Checkerboard color of the patch (0 or 1).
    pub fn color(self) -> u8 {
        ((self.row + self.col) % 2) as u8
    }

    pub fn is_grid_adjacent(self, other: PatchId) -> bool {
        self.row.abs_diff(other.row) + self.col.abs_diff(other.col) == 1
    }
}

impl fmt::Display for PatchId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.row, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InstructionKind {
    Idle,
    MergeZZ,
    MergeXX,
    Split,
    TTeleport,
    Measure,
    SGate,
    YMeasure,
}

impl InstructionKind {
    pub const ALL: [InstructionKind; 8] = [
        InstructionKind::Idle,
        InstructionKind::MergeZZ,
        InstructionKind::MergeXX,
        InstructionKind::Split,
        InstructionKind::TTeleport,
        InstructionKind::Measure,
        InstructionKind::SGate,
        InstructionKind::YMeasure,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstructionKind::Idle => "Idle",
            InstructionKind::MergeZZ => "MergeZZ",
            InstructionKind::MergeXX => "MergeXX",
            InstructionKind::Split => "Split",
            InstructionKind::TTeleport => "TTeleport",
            InstructionKind::Measure => "Measure",
            InstructionKind::SGate => "SGate",
            InstructionKind::YMeasure => "YMeasure",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == s)
    }

    /// Activity label used in traces.
    pub fn label(self) -> &'static str {
        match self {
            InstructionKind::Idle => "idle",
            InstructionKind::MergeZZ => "merge_zz",
            InstructionKind::MergeXX => "merge_xx",
            InstructionKind::Split => "split",
            InstructionKind::TTeleport => "t_teleport",
            InstructionKind::Measure => "measure",
            InstructionKind::SGate => "s_gate",
            InstructionKind::YMeasure => "y_measure",
        }
    }

    /// Kinds that join their patches into one code block (spatial faces).
    pub fn is_merge(self) -> bool {
        matches!(
            self,
            InstructionKind::MergeZZ | InstructionKind::MergeXX | InstructionKind::TTeleport
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instruction {
    pub kind: InstructionKind,
    pub patches: Vec<PatchId>,
    pub start_round: u64,
    pub duration: u64,
    pub blocking: bool,
    pub conditional_on: Option<usize>,
}

impl Instruction {
    pub fn new(kind: InstructionKind, patches: Vec<PatchId>, start_round: u64, duration: u64) -> Self {
        Self {
            kind,
            patches,
            start_round,
            duration,
            blocking: kind == InstructionKind::TTeleport,
            conditional_on: None,
        }
    }

    pub fn conditional(mut self, target: usize) -> Self {
        self.conditional_on = Some(target);
        self
    }

    pub fn end_round(&self) -> u64 {
        self.start_round + self.duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    pub rows: u32,
    pub cols: u32,
}

impl Grid {
    pub fn contains(&self, p: PatchId) -> bool {
        p.row < self.rows && p.col < self.cols
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub distance: u32,
    pub grid: Grid,
    pub instructions: Vec<Instruction>,
    /// Duration of one syndrome round in microseconds.
    pub round_time_us: f64,
}

/// One invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    EvenDistance(u32),
    DistanceTooSmall(u32),
    ZeroDuration { instruction: usize },
    EmptyPatches { instruction: usize },
    DuplicatePatch { instruction: usize, patch: PatchId },
    PatchOutsideGrid { instruction: usize, patch: PatchId },
    Overlap { patch: PatchId, round: u64, first: usize, second: usize },
    ConditionalOnNonSGate { instruction: usize },
    DanglingConditional { instruction: usize, target: usize },
    ConditionalTargetNotBlocking { instruction: usize, target: usize },
    TTeleportNotBlocking { instruction: usize },
    BadRoundTime,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::EvenDistance(d) => write!(f, "distance {d} must be odd"),
            Diagnostic::DistanceTooSmall(d) => write!(f, "distance {d} must be at least 3"),
            Diagnostic::ZeroDuration { instruction } => {
                write!(f, "instruction {instruction}: duration must be >= 1")
            }
            Diagnostic::EmptyPatches { instruction } => {
                write!(f, "instruction {instruction}: patch list is empty")
            }
            Diagnostic::DuplicatePatch { instruction, patch } => {
                write!(f, "instruction {instruction}: patch {patch} listed twice")
            }
            Diagnostic::PatchOutsideGrid { instruction, patch } => {
                write!(f, "instruction {instruction}: patch {patch} outside grid")
            }
            Diagnostic::Overlap { patch, round, first, second } => write!(
                f,
                "overlap: instructions {first} and {second} both occupy patch {patch} at round {round}"
            ),
            Diagnostic::ConditionalOnNonSGate { instruction } => {
                write!(f, "instruction {instruction}: conditional_on is only allowed on SGate")
            }
            Diagnostic::DanglingConditional { instruction, target } => write!(
                f,
                "instruction {instruction}: dangling conditional (target {target} does not precede it)"
            ),
            Diagnostic::ConditionalTargetNotBlocking { instruction, target } => write!(
                f,
                "instruction {instruction}: conditional target {target} is not blocking"
            ),
            Diagnostic::TTeleportNotBlocking { instruction } => {
                write!(f, "instruction {instruction}: TTeleport must be blocking")
            }
            Diagnostic::BadRoundTime => write!(f, "round_time_us must be positive and finite"),
        }
    }
}

#[derive(Debug, Error)]
pub enum ProgramError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("schema violation at {location}: {message}")]
    Schema { location: String, message: String },
    #[error("invalid program: {}", join_diagnostics(.0))]
    Invalid(Vec<Diagnostic>),
    #[error("unknown builtin program `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid builtin parameters: {0}")]
    BadParams(String),
}

fn join_diagnostics(d: &[Diagnostic]) -> String {
    d.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

/// Checks every program invariant and returns one diagnostic per violation.
pub fn validate(p: &Program) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if p.distance % 2 == 0 {
        out.push(Diagnostic::EvenDistance(p.distance));
    }
    if p.distance < 3 {
        out.push(Diagnostic::DistanceTooSmall(p.distance));
    }
    if !(p.round_time_us.is_finite() && p.round_time_us > 0.0) {
        out.push(Diagnostic::BadRoundTime);
    }
    for (i, ins) in p.instructions.iter().enumerate() {
        if ins.duration == 0 {
            out.push(Diagnostic::ZeroDuration { instruction: i });
        }
        if ins.patches.is_empty() {
            out.push(Diagnostic::EmptyPatches { instruction: i });
        }
        let mut seen = Vec::with_capacity(ins.patches.len());
        for &patch in &ins.patches {
            if !p.grid.contains(patch) {
                out.push(Diagnostic::PatchOutsideGrid { instruction: i, patch });
            }
            if seen.contains(&patch) {
                out.push(Diagnostic::DuplicatePatch { instruction: i, patch });
            }
            seen.push(patch);
        }
        if ins.kind == InstructionKind::TTeleport && !ins.blocking {
            out.push(Diagnostic::TTeleportNotBlocking { instruction: i });
        }
        if let Some(target) = ins.conditional_on {
            if ins.kind != InstructionKind::SGate {
                out.push(Diagnostic::ConditionalOnNonSGate { instruction: i });
            }
            if target >= i {
                out.push(Diagnostic::DanglingConditional { instruction: i, target });
            } else if !p.instructions[target].blocking {
                out.push(Diagnostic::ConditionalTargetNotBlocking { instruction: i, target });
            }
        }
    }

    // Spacetime exclusivity: sort intervals per patch and look for overlaps.
    let mut per_patch: HashMap<PatchId, Vec<(u64, u64, usize)>> = HashMap::new();
    for (i, ins) in p.instructions.iter().enumerate() {
        for &patch in &ins.patches {
            per_patch
                .entry(patch)
                .or_default()
                .push((ins.start_round, ins.end_round(), i));
        }
    }
    let mut patches: Vec<_> = per_patch.keys().copied().collect();
    patches.sort();
    for patch in patches {
        let mut v = per_patch.remove(&patch).unwrap();
        v.sort();
        let mut reach: Option<(u64, usize)> = None;
        for (s, e, i) in v {
            if let Some((end, j)) = reach {
                if s < end {
                    out.push(Diagnostic::Overlap { patch, round: s, first: j, second: i });
                }
                if e > end {
                    reach = Some((e, i));
                }
            } else {
                reach = Some((e, i));
            }
        }
    }
    out
}

impl Program {
    /// Validates and returns the program, or every violation found.
    pub fn checked(self) -> Result<Self, ProgramError> {
        let diags = validate(&self);
        if diags.is_empty() {
            Ok(self)
        } else {
            Err(ProgramError::Invalid(diags))
        }
    }

    /// Final nominal round of the program.
    pub fn nominal_end(&self) -> u64 {
        self.instructions.iter().map(Instruction::end_round).max().unwrap_or(0)
    }

    pub fn count(&self, kind: InstructionKind) -> usize {
        self.instructions.iter().filter(|i| i.kind == kind).count()
    }

    pub fn to_json_value(&self) -> Value {
        let instructions: Vec<Value> = self
            .instructions
            .iter()
            .map(|ins| {
                let mut m = Map::new();
                m.insert("kind".into(), json!(ins.kind.name()));
                m.insert(
                    "patches".into(),
                    Value::Array(ins.patches.iter().map(|p| json!([p.row, p.col])).collect()),
                );
                m.insert("start_round".into(), json!(ins.start_round));
                m.insert("duration".into(), json!(ins.duration));
                m.insert("blocking".into(), json!(ins.blocking));
                if let Some(c) = ins.conditional_on {
                    m.insert("conditional_on".into(), json!(c));
                }
                Value::Object(m)
            })
            .collect();
        json!({
            "format": FORMAT_VERSION,
            "distance": self.distance,
            "round_time_us": self.round_time_us,
            "grid": {"rows": self.grid.rows, "cols": self.grid.cols},
            "instructions": instructions,
        })
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_value()).expect("program serializes")
    }
}

fn schema(location: impl Into<String>, message: impl Into<String>) -> ProgramError {
    ProgramError::Schema { location: location.into(), message: message.into() }
}

fn get_u64(obj: &Map<String, Value>, field: &str, loc: &str) -> Result<u64, ProgramError> {
    obj.get(field)
        .ok_or_else(|| schema(format!("{loc}.{field}"), "missing field"))?
        .as_u64()
        .ok_or_else(|| schema(format!("{loc}.{field}"), "expected a non-negative integer"))
}

/// Parses and validates a JSON program document.
pub fn parse_program(text: &str) -> Result<Program, ProgramError> {
    let root: Value = serde_json::from_str(text)?;
    let obj = root.as_object().ok_or_else(|| schema("$", "expected an object"))?;
    let format = get_u64(obj, "format", "$")?;
    if format != FORMAT_VERSION {
        return Err(schema("$.format", format!("unsupported format {format}")));
    }
    let distance = get_u64(obj, "distance", "$")?;
    let distance = u32::try_from(distance).map_err(|_| schema("$.distance", "too large"))?;
    let round_time_us = match obj.get("round_time_us") {
        None => 1.0,
        Some(v) => v
            .as_f64()
            .ok_or_else(|| schema("$.round_time_us", "expected a number"))?,
    };
    let grid = obj
        .get("grid")
        .and_then(Value::as_object)
        .ok_or_else(|| schema("$.grid", "missing or not an object"))?;
    let grid = Grid {
        rows: get_u64(grid, "rows", "$.grid")? as u32,
        cols: get_u64(grid, "cols", "$.grid")? as u32,
    };
    let list = obj
        .get("instructions")
        .and_then(Value::as_array)
        .ok_or_else(|| schema("$.instructions", "missing or not an array"))?;

    let mut instructions = Vec::with_capacity(list.len());
    for (i, item) in list.iter().enumerate() {
        let loc = format!("$.instructions[{i}]");
        let o = item.as_object().ok_or_else(|| schema(&loc, "expected an object"))?;
        let kind_name = o
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| schema(format!("{loc}.kind"), "missing or not a string"))?;
        let kind = InstructionKind::from_name(kind_name)
            .ok_or_else(|| schema(format!("{loc}.kind"), format!("unknown kind `{kind_name}`")))?;
        let patches_v = o
            .get("patches")
            .and_then(Value::as_array)
            .ok_or_else(|| schema(format!("{loc}.patches"), "missing or not an array"))?;
        let mut patches = Vec::with_capacity(patches_v.len());
        for (k, pv) in patches_v.iter().enumerate() {
            let pair = pv
                .as_array()
                .filter(|a| a.len() == 2)
                .and_then(|a| Some((a[0].as_u64()?, a[1].as_u64()?)))
                .ok_or_else(|| schema(format!("{loc}.patches[{k}]"), "expected [row, col]"))?;
            patches.push(PatchId::new(pair.0 as u32, pair.1 as u32));
        }
        let start_round = get_u64(o, "start_round", &loc)?;
        let duration = get_u64(o, "duration", &loc)?;
        let blocking = match o.get("blocking") {
            None => kind == InstructionKind::TTeleport,
            Some(v) => v
                .as_bool()
                .ok_or_else(|| schema(format!("{loc}.blocking"), "expected a boolean"))?,
        };
        let conditional_on = match o.get("conditional_on") {
            None | Some(Value::Null) => None,
            Some(v) => Some(v.as_u64().ok_or_else(|| {
                schema(format!("{loc}.conditional_on"), "expected an instruction index")
            })? as usize),
        };
        instructions.push(Instruction { kind, patches, start_round, duration, blocking, conditional_on });
    }
    Program { distance, grid, instructions, round_time_us }.checked()
}
