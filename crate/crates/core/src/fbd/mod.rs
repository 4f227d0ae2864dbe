//! Function block diagrams used as action bodies.
//!
//! A diagram is a set of blocks whose inputs reference other blocks' outputs
//! or inline constants. Cycles are allowed only through delay blocks; such a
//! diagram runs for a fixed number of iterations (its time slice). Globals
//! are read once at the start and written back after the final iteration.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use petgraph::algo::toposort;
use petgraph::graph::DiGraph;
use petgraph::unionfind::UnionFind;
use thiserror::Error;

use crate::expr::{CmpOp, IntTy, Memory, Ty, Value, VarEnv};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Operand {
    /// Output port of another block.
    Port(String),
    Const(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum BlockKind {
    Read(String),
    Write(String, Operand),
    Const(u64),
    Arith(ArithOp, Operand, Operand),
    Cmp(CmpOp, Operand, Operand),
    /// `mux(sel, a, b)` yields `a` when `sel` holds, else `b`.
    Mux(Operand, Operand, Operand),
    Delay(Operand),
}

impl BlockKind {
    pub fn inputs(&self) -> Vec<&Operand> {
        match self {
            BlockKind::Read(_) | BlockKind::Const(_) => vec![],
            BlockKind::Write(_, a) | BlockKind::Delay(a) => vec![a],
            BlockKind::Arith(_, a, b) | BlockKind::Cmp(_, a, b) => vec![a, b],
            BlockKind::Mux(s, a, b) => vec![s, a, b],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Block {
    pub id: String,
    pub kind: BlockKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fbd {
    pub name: String,
    pub blocks: Vec<Block>,
    /// Number of iterations; always positive.
    pub time_slice: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FbdError {
    #[error("duplicate block `{0}`")]
    DuplicateBlock(String),
    #[error("unknown block `{0}`")]
    UnknownBlock(String),
    #[error("block `{0}` has no output port")]
    NoOutput(String),
    #[error("unknown variable `{0}`")]
    UnknownVar(String),
    #[error("variable `{0}` written by more than one block")]
    MultipleWrites(String),
    #[error("cycle without delay element through `{0}`")]
    CycleWithoutDelay(String),
    #[error("diagram has a cycle; use iterative evaluation")]
    Cycle,
    #[error("time slice must be positive")]
    ZeroTimeSlice,
    #[error("type error: {0}")]
    Type(String),
    #[error("evaluation error: {0}")]
    Eval(String),
}

impl Fbd {
    pub fn written_vars(&self) -> Vec<String> {
        let set: BTreeSet<String> = self
            .blocks
            .iter()
            .filter_map(|b| match &b.kind {
                BlockKind::Write(v, _) => Some(v.clone()),
                _ => None,
            })
            .collect();
        set.into_iter().collect()
    }

    fn index(&self) -> Result<HashMap<&str, usize>, FbdError> {
        let mut idx = HashMap::new();
        for (i, b) in self.blocks.iter().enumerate() {
            if idx.insert(b.id.as_str(), i).is_some() {
                return Err(FbdError::DuplicateBlock(b.id.clone()));
            }
        }
        Ok(idx)
    }

    /// Port graph; with `cut_delays` edges leaving delay blocks are dropped.
    fn graph(&self, idx: &HashMap<&str, usize>, cut_delays: bool) -> Result<DiGraph<usize, ()>, FbdError> {
        let mut g = DiGraph::new();
        let nodes: Vec<_> = (0..self.blocks.len()).map(|i| g.add_node(i)).collect();
        for (i, b) in self.blocks.iter().enumerate() {
            for op in b.kind.inputs() {
                if let Operand::Port(p) = op {
                    let src = *idx.get(p.as_str()).ok_or_else(|| FbdError::UnknownBlock(p.clone()))?;
                    if matches!(self.blocks[src].kind, BlockKind::Write(..)) {
                        return Err(FbdError::NoOutput(p.clone()));
                    }
                    if cut_delays && matches!(self.blocks[src].kind, BlockKind::Delay(_)) {
                        continue;
                    }
                    g.add_edge(nodes[src], nodes[i], ());
                }
            }
        }
        Ok(g)
    }

    /// Structural and type checks; returns the compiled diagram.
    pub fn check(&self, env: &VarEnv) -> Result<CompiledFbd, FbdError> {
        compile(self, env)
    }

    /// Single topological evaluation of a diagram without cycles.
    pub fn eval_acyclic(&self, env: &VarEnv, mem: &Memory) -> Result<Memory, FbdError> {
        let compiled = compile(self, env)?;
        if !compiled.acyclic {
            return Err(FbdError::Cycle);
        }
        compiled.run(mem, 1, &compiled.order)
    }

    /// Evaluates with an explicit block order, which must be topological for
    /// the full port graph.
    pub fn eval_acyclic_with_order(&self, env: &VarEnv, mem: &Memory, order: &[usize]) -> Result<Memory, FbdError> {
        let compiled = compile(self, env)?;
        if !compiled.acyclic {
            return Err(FbdError::Cycle);
        }
        let idx = self.index()?;
        let g = self.graph(&idx, false)?;
        let mut pos = vec![usize::MAX; self.blocks.len()];
        for (k, i) in order.iter().enumerate() {
            if *i >= pos.len() || pos[*i] != usize::MAX {
                return Err(FbdError::Eval("order is not a permutation of the blocks".into()));
            }
            pos[*i] = k;
        }
        if pos.contains(&usize::MAX) {
            return Err(FbdError::Eval("order is not a permutation of the blocks".into()));
        }
        for e in g.edge_indices() {
            let (a, b) = g.edge_endpoints(e).unwrap();
            if pos[g[a]] > pos[g[b]] {
                return Err(FbdError::Eval("order is not topological".into()));
            }
        }
        compiled.run(mem, 1, order)
    }

    /// Runs exactly `time_slice` iterations.
    pub fn eval_iterative(&self, env: &VarEnv, mem: &Memory) -> Result<Memory, FbdError> {
        compile(self, env)?.apply(mem)
    }
}

/// A checked diagram packaged as a memory-to-memory function. This is the
/// action-block view of a diagram.
#[derive(Debug, Clone)]
pub struct CompiledFbd {
    fbd: Fbd,
    types: Vec<Option<Ty>>,
    operand_types: Vec<Vec<Ty>>,
    order: Vec<usize>,
    acyclic: bool,
    index: HashMap<String, usize>,
}

/// Compiles a diagram to an opaque action effect.
pub fn fbd_to_action(fbd: &Fbd, env: &VarEnv) -> Result<CompiledFbd, FbdError> {
    compile(fbd, env)
}

fn compile(fbd: &Fbd, env: &VarEnv) -> Result<CompiledFbd, FbdError> {
    if fbd.time_slice == 0 {
        return Err(FbdError::ZeroTimeSlice);
    }
    let idx = fbd.index()?;
    let mut writes = BTreeSet::new();
    for b in &fbd.blocks {
        match &b.kind {
            BlockKind::Read(v) if !env.contains_key(v) => return Err(FbdError::UnknownVar(v.clone())),
            BlockKind::Write(v, _) => {
                if !env.contains_key(v) {
                    return Err(FbdError::UnknownVar(v.clone()));
                }
                if !writes.insert(v.clone()) {
                    return Err(FbdError::MultipleWrites(v.clone()));
                }
            }
            _ => {}
        }
    }

    let cut = fbd.graph(&idx, true)?;
    let order = match toposort(&cut, None) {
        Ok(nodes) => nodes.into_iter().map(|n| cut[n]).collect::<Vec<_>>(),
        Err(c) => return Err(FbdError::CycleWithoutDelay(fbd.blocks[cut[c.node_id()]].id.clone())),
    };
    let full = fbd.graph(&idx, false)?;
    let acyclic = toposort(&full, None).is_ok();

    let types = infer_types(fbd, &idx, env)?;
    let port_ty = |op: &Operand, fallback: Ty| match op {
        Operand::Port(p) => types[idx[p.as_str()]].unwrap_or(fallback),
        Operand::Const(_) => fallback,
    };
    let mut operand_types = Vec::with_capacity(fbd.blocks.len());
    for (i, b) in fbd.blocks.iter().enumerate() {
        let own = types[i];
        let tys: Vec<Ty> = match &b.kind {
            BlockKind::Read(_) | BlockKind::Const(_) => vec![],
            BlockKind::Write(v, a) => vec![port_ty(a, env[v])],
            BlockKind::Delay(a) => vec![port_ty(a, own.unwrap())],
            BlockKind::Arith(_, a, c) => vec![port_ty(a, own.unwrap()), port_ty(c, own.unwrap())],
            BlockKind::Cmp(_, a, c) => {
                let other_a = match c {
                    Operand::Port(p) => types[idx[p.as_str()]],
                    Operand::Const(_) => None,
                };
                let other_c = match a {
                    Operand::Port(p) => types[idx[p.as_str()]],
                    Operand::Const(_) => None,
                };
                let dflt = Ty::Int(IntTy::U32);
                vec![port_ty(a, other_a.unwrap_or(dflt)), port_ty(c, other_c.unwrap_or(dflt))]
            }
            BlockKind::Mux(s, a, c) => {
                vec![port_ty(s, Ty::Bool), port_ty(a, own.unwrap()), port_ty(c, own.unwrap())]
            }
        };
        for (op, ty) in b.kind.inputs().into_iter().zip(&tys) {
            if let Operand::Const(k) = op {
                if *ty == Ty::Bool || *k > ty.max_payload() {
                    return Err(FbdError::Type(format!("constant {k} does not fit {ty} in block `{}`", b.id)));
                }
            }
        }
        operand_types.push(tys);
    }

    Ok(CompiledFbd {
        fbd: fbd.clone(),
        types,
        operand_types,
        order,
        acyclic,
        index: idx.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Kind {
    Unknown,
    AnyInt,
    Exact(Ty),
}

fn infer_types(fbd: &Fbd, idx: &HashMap<&str, usize>, env: &VarEnv) -> Result<Vec<Option<Ty>>, FbdError> {
    let n = fbd.blocks.len();
    let mut uf: UnionFind<usize> = UnionFind::new(n);
    let mut fixed: Vec<Kind> = vec![Kind::Unknown; n];
    let port = |op: &Operand| match op {
        Operand::Port(p) => Some(idx[p.as_str()]),
        Operand::Const(_) => None,
    };
    let mut demands: Vec<(usize, Kind)> = Vec::new();
    for (i, b) in fbd.blocks.iter().enumerate() {
        match &b.kind {
            BlockKind::Read(v) => demands.push((i, Kind::Exact(env[v]))),
            BlockKind::Write(v, a) => {
                if let Some(p) = port(a) {
                    demands.push((p, Kind::Exact(env[v])));
                }
            }
            BlockKind::Const(_) => demands.push((i, Kind::AnyInt)),
            BlockKind::Arith(_, a, c) => {
                demands.push((i, Kind::AnyInt));
                for p in [port(a), port(c)].into_iter().flatten() {
                    uf.union(i, p);
                }
            }
            BlockKind::Cmp(_, a, c) => {
                demands.push((i, Kind::Exact(Ty::Bool)));
                let ports: Vec<usize> = [port(a), port(c)].into_iter().flatten().collect();
                for p in &ports {
                    demands.push((*p, Kind::AnyInt));
                }
                if ports.len() == 2 {
                    uf.union(ports[0], ports[1]);
                }
            }
            BlockKind::Mux(s, a, c) => {
                if let Some(p) = port(s) {
                    demands.push((p, Kind::Exact(Ty::Bool)));
                }
                for p in [port(a), port(c)].into_iter().flatten() {
                    uf.union(i, p);
                }
            }
            BlockKind::Delay(a) => {
                if let Some(p) = port(a) {
                    uf.union(i, p);
                }
            }
        }
    }
    for (node, kind) in demands {
        let root = uf.find(node);
        fixed[root] = match (fixed[root], kind) {
            (Kind::Unknown, k) => k,
            (Kind::AnyInt, Kind::Exact(Ty::Bool)) | (Kind::Exact(Ty::Bool), Kind::AnyInt) => {
                return Err(FbdError::Type(format!("block `{}` used as both integer and bool", fbd.blocks[node].id)))
            }
            (Kind::AnyInt, Kind::Exact(t)) => Kind::Exact(t),
            (k, Kind::AnyInt) | (k, Kind::Unknown) => k,
            (Kind::Exact(a), Kind::Exact(b)) if a == b => Kind::Exact(a),
            (Kind::Exact(a), Kind::Exact(b)) => {
                return Err(FbdError::Type(format!("block `{}` needs both {a} and {b}", fbd.blocks[node].id)))
            }
        };
    }
    Ok((0..n)
        .map(|i| {
            if matches!(fbd.blocks[i].kind, BlockKind::Write(..)) {
                return None;
            }
            Some(match fixed[uf.find(i)] {
                Kind::Exact(t) => t,
                Kind::AnyInt | Kind::Unknown => Ty::Int(IntTy::U32),
            })
        })
        .collect())
}

impl CompiledFbd {
    pub fn fbd(&self) -> &Fbd {
        &self.fbd
    }

    pub fn is_acyclic(&self) -> bool {
        self.acyclic
    }

    /// The action effect: `time_slice` iterations, then write-back.
    pub fn apply(&self, mem: &Memory) -> Result<Memory, FbdError> {
        self.run(mem, self.fbd.time_slice, &self.order)
    }

    fn run(&self, mem: &Memory, iterations: u32, order: &[usize]) -> Result<Memory, FbdError> {
        let blocks = &self.fbd.blocks;
        let mut delay_state: Vec<Option<Value>> = blocks
            .iter()
            .enumerate()
            .map(|(i, b)| match b.kind {
                BlockKind::Delay(_) => Some(self.types[i].unwrap().default_value()),
                _ => None,
            })
            .collect();
        let mut written: Vec<(String, Value)> = Vec::new();
        for _ in 0..iterations {
            let mut values: Vec<Option<Value>> = delay_state.clone();
            written.clear();
            for &i in order {
                let b = &blocks[i];
                if matches!(b.kind, BlockKind::Delay(_)) {
                    continue;
                }
                let ins: Vec<Value> = b
                    .kind
                    .inputs()
                    .iter()
                    .zip(&self.operand_types[i])
                    .map(|(op, ty)| self.operand(op, *ty, &values))
                    .collect::<Result<_, _>>()?;
                let out = match &b.kind {
                    BlockKind::Read(v) => *mem.get(v).ok_or_else(|| FbdError::UnknownVar(v.clone()))?,
                    BlockKind::Write(v, _) => {
                        written.push((v.clone(), ins[0]));
                        continue;
                    }
                    BlockKind::Const(k) => Value::from_payload(self.types[i].unwrap(), *k)
                        .ok_or_else(|| FbdError::Type(format!("constant {k} out of range in block `{}`", b.id)))?,
                    BlockKind::Arith(op, _, _) => arith(*op, ins[0], ins[1])?,
                    BlockKind::Cmp(op, _, _) => Value::Bool(op.holds(ins[0].payload(), ins[1].payload())),
                    BlockKind::Mux(..) => match ins[0] {
                        Value::Bool(true) => ins[1],
                        Value::Bool(false) => ins[2],
                        _ => return Err(FbdError::Type(format!("mux selector of `{}` is not bool", b.id))),
                    },
                    BlockKind::Delay(_) => unreachable!(),
                };
                values[i] = Some(out);
            }
            for (i, b) in blocks.iter().enumerate() {
                if let BlockKind::Delay(a) = &b.kind {
                    delay_state[i] = Some(self.operand(a, self.types[i].unwrap(), &values)?);
                }
            }
        }
        let mut out = mem.clone();
        for (v, val) in written {
            out.insert(v, val);
        }
        Ok(out)
    }

    fn operand(&self, op: &Operand, ty: Ty, values: &[Option<Value>]) -> Result<Value, FbdError> {
        match op {
            Operand::Const(k) => {
                Value::from_payload(ty, *k).ok_or_else(|| FbdError::Type(format!("constant {k} does not fit {ty}")))
            }
            Operand::Port(p) => {
                let i = self.index[p];
                values[i].ok_or_else(|| FbdError::Eval(format!("block `{p}` read before evaluation")))
            }
        }
    }
}

fn arith(op: ArithOp, a: Value, b: Value) -> Result<Value, FbdError> {
    match (a, b) {
        (Value::Int(w, x), Value::Int(w2, y)) if w == w2 => {
            let r = match op {
                ArithOp::Add => x.wrapping_add(y),
                ArithOp::Sub => x.wrapping_sub(y),
                ArithOp::Mul => ((x as u128 * y as u128) & w.max_value() as u128) as u64,
            };
            Ok(Value::int(w, r))
        }
        _ => Err(FbdError::Type("arithmetic on mismatched operands".into())),
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Port(p) => write!(f, "{p}.out"),
            Operand::Const(k) => write!(f, "const {k}"),
        }
    }
}

pub(crate) fn arith_name(op: ArithOp) -> &'static str {
    match op {
        ArithOp::Add => "add",
        ArithOp::Sub => "sub",
        ArithOp::Mul => "mul",
    }
}

pub(crate) fn cmp_name(op: CmpOp) -> &'static str {
    match op {
        CmpOp::Lt => "lt",
        CmpOp::Le => "le",
        CmpOp::Eq => "eq",
        CmpOp::Ne => "ne",
        CmpOp::Ge => "ge",
        CmpOp::Gt => "gt",
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "block {} = ", self.id)?;
        match &self.kind {
            BlockKind::Read(v) => write!(f, "read {v}"),
            BlockKind::Write(v, a) => write!(f, "write {v} ({a})"),
            BlockKind::Const(k) => write!(f, "const {k}"),
            BlockKind::Arith(op, a, b) => write!(f, "{}({a}, {b})", arith_name(*op)),
            BlockKind::Cmp(op, a, b) => write!(f, "{}({a}, {b})", cmp_name(*op)),
            BlockKind::Mux(s, a, b) => write!(f, "mux({s}, {a}, {b})"),
            BlockKind::Delay(a) => write!(f, "delay({a})"),
        }
    }
}

impl fmt::Display for Fbd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "fbd {} {{", self.name)?;
        for b in &self.blocks {
            writeln!(f, "  {b}")?;
        }
        writeln!(f, "  timeslice {}", self.time_slice)?;
        write!(f, "}}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn port(p: &str) -> Operand {
        Operand::Port(p.into())
    }

    fn block(id: &str, kind: BlockKind) -> Block {
        Block { id: id.into(), kind }
    }

    fn env() -> VarEnv {
        [("x", Ty::Int(IntTy::U16)), ("y", Ty::Int(IntTy::U16)), ("z", Ty::Int(IntTy::U16))]
            .into_iter()
            .map(|(k, v)| (k.to_string(), v))
            .collect()
    }

    fn mem(vals: &[(&str, u64)]) -> Memory {
        vals.iter().map(|(k, v)| (k.to_string(), Value::Int(IntTy::U16, *v))).collect()
    }

    fn increment() -> Fbd {
        Fbd {
            name: "inc".into(),
            blocks: vec![
                block("b1", BlockKind::Read("x".into())),
                block("b2", BlockKind::Arith(ArithOp::Add, port("b1"), Operand::Const(1))),
                block("b3", BlockKind::Write("x".into(), port("b2"))),
            ],
            time_slice: 1,
        }
    }

    #[test]
    fn increment_acyclic() {
        let out = increment().eval_acyclic(&env(), &mem(&[("x", 5)])).unwrap();
        assert_eq!(out["x"], Value::Int(IntTy::U16, 6));
    }

    #[test]
    fn no_writes_is_identity() {
        let f = Fbd { name: "f".into(), blocks: vec![block("r", BlockKind::Read("x".into()))], time_slice: 1 };
        let m = mem(&[("x", 7)]);
        assert_eq!(f.eval_acyclic(&env(), &m).unwrap(), m);
    }

    #[test]
    fn sum_of_two_reads() {
        let f = Fbd {
            name: "sum".into(),
            blocks: vec![
                block("a", BlockKind::Read("x".into())),
                block("b", BlockKind::Read("y".into())),
                block("s", BlockKind::Arith(ArithOp::Add, port("a"), port("b"))),
                block("w", BlockKind::Write("z".into(), port("s"))),
            ],
            time_slice: 1,
        };
        let out = f.eval_acyclic(&env(), &mem(&[("x", 2), ("y", 3), ("z", 0)])).unwrap();
        assert_eq!(out["z"], Value::Int(IntTy::U16, 5));
        assert_eq!(out["x"], Value::Int(IntTy::U16, 2));
    }

    fn counter(slice: u32) -> Fbd {
        Fbd {
            name: "counter".into(),
            blocks: vec![
                block("d", BlockKind::Delay(port("n"))),
                block("n", BlockKind::Arith(ArithOp::Add, port("d"), Operand::Const(1))),
                block("w", BlockKind::Write("x".into(), port("n"))),
            ],
            time_slice: slice,
        }
    }

    #[test]
    fn counter_runs_time_slice_iterations() {
        let out = counter(3).eval_iterative(&env(), &mem(&[("x", 0)])).unwrap();
        assert_eq!(out["x"], Value::Int(IntTy::U16, 3));
        assert_eq!(counter(3).eval_acyclic(&env(), &mem(&[("x", 0)])), Err(FbdError::Cycle));
    }

    #[test]
    fn zero_time_slice_rejected() {
        assert_eq!(counter(0).check(&env()).unwrap_err(), FbdError::ZeroTimeSlice);
    }

    #[test]
    fn cycle_without_delay_rejected() {
        let f = Fbd {
            name: "bad".into(),
            blocks: vec![
                block("a", BlockKind::Arith(ArithOp::Add, port("b"), Operand::Const(1))),
                block("b", BlockKind::Arith(ArithOp::Add, port("a"), Operand::Const(1))),
            ],
            time_slice: 2,
        };
        assert!(matches!(f.check(&env()), Err(FbdError::CycleWithoutDelay(_))));
    }

    #[test]
    fn single_iteration_of_acyclic_matches() {
        let f = increment();
        for x in [0, 1, 100, 65535] {
            let m = mem(&[("x", x)]);
            assert_eq!(f.eval_iterative(&env(), &m).unwrap(), f.eval_acyclic(&env(), &m).unwrap());
        }
    }

    #[test]
    fn order_independence() {
        let f = Fbd {
            name: "sum".into(),
            blocks: vec![
                block("a", BlockKind::Read("x".into())),
                block("b", BlockKind::Read("y".into())),
                block("s", BlockKind::Arith(ArithOp::Sub, port("a"), port("b"))),
                block("w", BlockKind::Write("z".into(), port("s"))),
            ],
            time_slice: 1,
        };
        let m = mem(&[("x", 2), ("y", 3), ("z", 0)]);
        let a = f.eval_acyclic_with_order(&env(), &m, &[0, 1, 2, 3]).unwrap();
        let b = f.eval_acyclic_with_order(&env(), &m, &[1, 0, 2, 3]).unwrap();
        assert_eq!(a, b);
        assert!(f.eval_acyclic_with_order(&env(), &m, &[2, 0, 1, 3]).is_err());
    }

    #[test]
    fn mux_and_compare() {
        // z := (x < y) ? x : y
        let f = Fbd {
            name: "min".into(),
            blocks: vec![
                block("a", BlockKind::Read("x".into())),
                block("b", BlockKind::Read("y".into())),
                block("c", BlockKind::Cmp(CmpOp::Lt, port("a"), port("b"))),
                block("m", BlockKind::Mux(port("c"), port("a"), port("b"))),
                block("w", BlockKind::Write("z".into(), port("m"))),
            ],
            time_slice: 1,
        };
        let out = f.eval_acyclic(&env(), &mem(&[("x", 9), ("y", 4), ("z", 0)])).unwrap();
        assert_eq!(out["z"], Value::Int(IntTy::U16, 4));
    }

    #[test]
    fn type_conflicts_are_reported() {
        let mut e = env();
        e.insert("flag".into(), Ty::Bool);
        let f = Fbd {
            name: "bad".into(),
            blocks: vec![
                block("a", BlockKind::Read("flag".into())),
                block("s", BlockKind::Arith(ArithOp::Add, port("a"), Operand::Const(1))),
            ],
            time_slice: 1,
        };
        assert!(matches!(f.check(&e), Err(FbdError::Type(_))));
    }
}
