//! Generators for the microbenchmark programs.

use std::fmt;
use std::str::FromStr;

use super::{Grid, Instruction, InstructionKind as K, PatchId, Program, ProgramError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Builtin {
    RepeatedT,
    Msd15To1,
    ZigzagChain,
    Toffoli,
}

impl Builtin {
    pub const ALL: [Builtin; 4] = [Builtin::RepeatedT, Builtin::Msd15To1, Builtin::ZigzagChain, Builtin::Toffoli];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::RepeatedT => "repeated_t",
            Builtin::Msd15To1 => "msd_15to1",
            Builtin::ZigzagChain => "zigzag_chain",
            Builtin::Toffoli => "toffoli",
        }
    }
}

impl fmt::Display for Builtin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Builtin {
    type Err = ProgramError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Builtin::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| ProgramError::UnknownBuiltin(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuiltinParams {
    pub d: u32,
    /// Number of T gates (`repeated_t`) or window cells (`zigzag_chain`).
    pub count: usize,
}

impl BuiltinParams {
    pub fn new(d: u32, count: usize) -> Self {
        Self { d, count }
    }
}

/// Duration of the conditional S correction in rounds.
pub const S_GATE_ROUNDS: u64 = 2;

pub fn builtin_program(which: Builtin, params: BuiltinParams) -> Result<Program, ProgramError> {
    let d = params.d;
    if d < 3 || d % 2 == 0 {
        return Err(ProgramError::BadParams(format!("d must be odd and >= 3, got {d}")));
    }
    if params.count == 0 && matches!(which, Builtin::RepeatedT | Builtin::ZigzagChain) {
        return Err(ProgramError::BadParams("count must be >= 1".into()));
    }
    let p = match which {
        Builtin::RepeatedT => repeated_t(d, params.count),
        Builtin::Msd15To1 => msd_15to1(d),
        Builtin::ZigzagChain => zigzag_chain(d, params.count),
        Builtin::Toffoli => toffoli(d),
    };
    p.checked()
}

fn program(d: u32, rows: u32, cols: u32, instructions: Vec<Instruction>) -> Program {
    Program { distance: d, grid: Grid { rows, cols }, instructions, round_time_us: 1.0 }
}

fn pid(r: u32, c: u32) -> PatchId {
    PatchId::new(r, c)
}

/// Appends a T teleport followed by its conditional S on `data`.
fn push_t(out: &mut Vec<Instruction>, patches: Vec<PatchId>, start: u64, d: u64) -> u64 {
    let data = patches[0];
    out.push(Instruction::new(K::TTeleport, patches, start, d));
    let t = out.len() - 1;
    out.push(Instruction::new(K::SGate, vec![data], start + d, S_GATE_ROUNDS).conditional(t));
    start + d + S_GATE_ROUNDS
}

/// A logical qubit at (0,0) consuming `count` magic states prepared at (0,1).
fn repeated_t(d: u32, count: usize) -> Program {
    let dd = d as u64;
    let mut ins = Vec::with_capacity(2 * count);
    let mut t = 0;
    for _ in 0..count {
        t = push_t(&mut ins, vec![pid(0, 0), pid(0, 1)], t, dd);
    }
    program(d, 1, 2, ins)
}

/// A row of patches merged pairwise in sequence so that consecutive cells
/// alternate between spatial and temporal adjacency.
fn zigzag_chain(d: u32, count: usize) -> Program {
    let dd = d as u64;
    let merges = count / 2;
    let mut ins = Vec::with_capacity(merges + 1);
    for j in 0..merges as u32 {
        ins.push(Instruction::new(K::MergeZZ, vec![pid(0, j), pid(0, j + 1)], j as u64 * dd, dd));
    }
    if count % 2 == 1 {
        let j = merges as u32;
        ins.push(Instruction::new(K::Idle, vec![pid(0, j)], j as u64 * dd, dd));
    }
    program(d, 1, merges as u32 + 1, ins)
}

/// 15-to-1 distillation on a 4x8 footprint.
///
/// Row 1 holds the eight register patches, rows 0 and 3 supply magic states
/// and row 2 is the routing lane. Phases: encoding merges, two T layers
/// (8 + 7 gates) with their S corrections, decoding merges, measurement.
fn msd_15to1(d: u32) -> Program {
    let dd = d as u64;
    let mut ins = Vec::new();
    let reg = |j: u32| pid(1, j);
    let route = |j: u32| pid(2, j);

    // Registers start in |+>, prepared during the previous factory cycle.
    let layer1 = 0;
    for j in 0..8 {
        push_t(&mut ins, vec![reg(j), pid(0, j)], layer1, dd);
    }
    let layer2 = layer1 + dd + S_GATE_ROUNDS;
    for j in 0..7 {
        push_t(&mut ins, vec![reg(j), route(j), pid(3, j)], layer2, dd);
    }
    let decode = layer2 + dd + S_GATE_ROUNDS;
    for k in 0..4 {
        let (a, b) = (2 * k, 2 * k + 1);
        ins.push(Instruction::new(K::MergeZZ, vec![reg(a), route(a), route(b), reg(b)], decode, dd));
    }
    let measure = decode + dd;
    for j in 0..7 {
        ins.push(Instruction::new(K::Measure, vec![reg(j)], measure, 1));
    }
    ins.push(Instruction::new(K::YMeasure, vec![reg(7)], measure, (dd + 1) / 2));
    program(d, 4, 8, ins)
}

/// Toffoli gate on data row 1 of a 3x3 footprint with seven T gates.
fn toffoli(d: u32) -> Program {
    let dd = d as u64;
    let mut ins = Vec::new();
    let data = |j: u32| pid(1, j);

    let mut t = 0;
    for j in 0..3 {
        t = push_t(&mut ins, vec![data(j), pid(0, j)], 0, dd);
    }
    for j in [0, 2] {
        push_t(&mut ins, vec![data(j), pid(2, j)], t, dd);
    }
    ins.push(Instruction::new(K::Idle, vec![data(1)], t, dd));
    t += dd + S_GATE_ROUNDS;
    ins.push(Instruction::new(K::MergeZZ, vec![data(0), data(1)], t, dd));
    ins.push(Instruction::new(K::Idle, vec![data(2)], t, dd));
    t += dd;
    for j in [1, 2] {
        push_t(&mut ins, vec![data(j), pid(0, j)], t, dd);
    }
    program(d, 3, 3, ins)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts() {
        let p = builtin_program(Builtin::Msd15To1, BuiltinParams::new(7, 0)).unwrap();
        assert_eq!(p.count(K::TTeleport), 15);
        assert_eq!((p.grid.rows * p.grid.cols), 32);

        let p = builtin_program(Builtin::RepeatedT, BuiltinParams::new(11, 1000)).unwrap();
        assert_eq!(p.count(K::TTeleport), 1000);
        assert_eq!(p.count(K::SGate), 1000);
        assert!(p.instructions.iter().all(|i| i.kind != K::SGate || i.conditional_on.is_some()));

        let p = builtin_program(Builtin::Toffoli, BuiltinParams::new(5, 0)).unwrap();
        assert_eq!(p.count(K::TTeleport), 7);
    }

    #[test]
    fn rejects_bad_params() {
        assert!(builtin_program(Builtin::RepeatedT, BuiltinParams::new(4, 3)).is_err());
        assert!(builtin_program(Builtin::RepeatedT, BuiltinParams::new(5, 0)).is_err());
        assert!("nope".parse::<Builtin>().is_err());
        assert_eq!("zigzag_chain".parse::<Builtin>().unwrap(), Builtin::ZigzagChain);
    }

    #[test]
    fn deterministic() {
        for b in Builtin::ALL {
            let a = builtin_program(b, BuiltinParams::new(5, 7)).unwrap();
            let c = builtin_program(b, BuiltinParams::new(5, 7)).unwrap();
            assert_eq!(a, c);
        }
    }
}
