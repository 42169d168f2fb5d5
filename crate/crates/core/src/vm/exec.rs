use std::collections::{BTreeSet, HashMap};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::state::{Memory, StateStore};
use super::{
    CostCounters, ExecOutcome, IntMode, RejectReason, RevertReason, Status, Transaction, VmConfig,
};
use crate::contract::{for_in_positions, Address, BinOp, Builtin, CExpr, Program, Stmt, Storage};

/// Executes one transaction. On revert the state is left exactly as it was.
pub fn execute(
    state: &mut StateStore,
    program: &Program,
    tx: &Transaction,
    config: &VmConfig,
) -> ExecOutcome {
    let rejected = |r| ExecOutcome {
        status: Status::Rejected(r),
        cost: CostCounters::default(),
        state_delta: Vec::new(),
    };
    let Some(f) = program.function(&tx.function).filter(|f| f.entry) else {
        return rejected(RejectReason::UnknownEntry(tx.function.clone()));
    };
    if f.params.len() != tx.args.len() {
        return rejected(RejectReason::ArityMismatch {
            expected: f.params.len(),
            found: tx.args.len(),
        });
    }
    let mut m = Machine::new(program, config, state);
    m.sender = m.norm(tx.sender.clone());
    let args = tx.args.iter().map(|a| m.norm(a.clone())).collect();
    m.state.begin();
    let result = m.call(&tx.function, args);
    let cost = m.cost;
    match result {
        Ok(()) => ExecOutcome {
            status: Status::Accepted,
            cost,
            state_delta: state.commit(),
        },
        Err(reason) => {
            state.rollback();
            ExecOutcome {
                status: Status::Reverted(reason),
                cost,
                state_delta: Vec::new(),
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct TraceRun {
    pub outcomes: Vec<ExecOutcome>,
    pub total: CostCounters,
}

/// Executes a trace in order; reverted transactions do not stop the run.
pub fn run_trace(
    state: &mut StateStore,
    program: &Program,
    trace: &[Transaction],
    config: &VmConfig,
) -> TraceRun {
    let mut run = TraceRun::default();
    for tx in trace {
        let o = execute(state, program, tx, config);
        run.total.add(&o.cost);
        run.outcomes.push(o);
    }
    run
}

type Frame = HashMap<String, BigInt>;

struct Machine<'a> {
    program: &'a Program,
    config: &'a VmConfig,
    storage: HashMap<&'a str, Storage>,
    state: &'a mut StateStore,
    memory: Memory,
    cost: CostCounters,
    sender: BigInt,
    depth: usize,
    modulus: BigInt,
}

impl<'a> Machine<'a> {
    fn new(program: &'a Program, config: &'a VmConfig, state: &'a mut StateStore) -> Self {
        Machine {
            program,
            config,
            storage: program.decls.iter().map(|d| (d.name.as_str(), d.storage)).collect(),
            state,
            memory: Memory::new(program),
            cost: CostCounters::default(),
            sender: BigInt::zero(),
            depth: 0,
            modulus: BigInt::one() << 256,
        }
    }

    fn norm(&self, v: BigInt) -> BigInt {
        match self.config.int_mode {
            IntMode::BigInt => v,
            IntMode::Wrap256 => {
                let r = v % &self.modulus;
                if r < BigInt::zero() {
                    r + &self.modulus
                } else {
                    r
                }
            }
        }
    }

    fn checked(&self, v: BigInt) -> Result<BigInt, RevertReason> {
        match self.config.int_mode {
            IntMode::BigInt => Ok(v),
            IntMode::Wrap256 => {
                if v < BigInt::zero() || v >= self.modulus {
                    Err(RevertReason::Overflow)
                } else {
                    Ok(v)
                }
            }
        }
    }

    fn call(&mut self, name: &str, args: Vec<BigInt>) -> Result<(), RevertReason> {
        if self.depth >= self.config.depth_limit {
            return Err(RevertReason::DepthLimitExceeded);
        }
        let f = self.program.function(name).expect("checked callee");
        let mut frame: Frame = f.params.iter().cloned().zip(args).collect();
        self.depth += 1;
        let r = self.body(&f.body, &mut frame);
        self.depth -= 1;
        r
    }

    fn is_memory(&self, var: &str) -> bool {
        self.storage.get(var) == Some(&Storage::Memory)
    }

    fn body(&mut self, body: &[Stmt], frame: &mut Frame) -> Result<(), RevertReason> {
        for s in body {
            self.stmt(s, frame)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt, frame: &mut Frame) -> Result<(), RevertReason> {
        match s {
            Stmt::Assign(t, e) => {
                let v = self.eval(e, frame)?;
                frame.insert(t.clone(), v);
            }
            Stmt::Load(t, a) => {
                let key = self.key(a, frame)?;
                let v = if self.is_memory(&a.var) {
                    self.cost.mload += 1;
                    self.memory.slots.get(&a.var, &key)
                } else {
                    self.cost.sload += 1;
                    self.state.get(&a.var, &key)
                };
                frame.insert(t.clone(), v);
            }
            Stmt::Store(a, e) => {
                let key = self.key(a, frame)?;
                let v = self.eval(e, frame)?;
                if self.is_memory(&a.var) {
                    self.cost.mstore += 1;
                    self.memory.slots.set(&a.var, key, v);
                } else {
                    self.cost.sstore += 1;
                    self.state.set(&a.var, key, v);
                }
            }
            Stmt::If(c, b) => {
                if !self.eval(c, frame)?.is_zero() {
                    self.body(b, frame)?;
                }
            }
            Stmt::ForIn { temps, map, body } => {
                let positions =
                    for_in_positions(temps, map, body).expect("checked iterator positions");
                let keys: BTreeSet<Vec<BigInt>> = {
                    let (slots, scanned) = if self.is_memory(map) {
                        (&self.memory.slots, &mut self.cost.mload)
                    } else {
                        (self.state.slots(), &mut self.cost.sload)
                    };
                    *scanned += slots.defined_count(map) as u64;
                    slots
                        .entries(map)
                        .map(|(k, _)| positions.iter().map(|&p| k[p].clone()).collect())
                        .collect()
                };
                for key in keys {
                    for (t, v) in temps.iter().zip(key) {
                        frame.insert(t.clone(), v);
                    }
                    self.body(body, frame)?;
                }
            }
            Stmt::Assert(c) => {
                if self.eval(c, frame)?.is_zero() {
                    return Err(RevertReason::AssertFailed);
                }
            }
            Stmt::Call(name, args) => {
                let args = args
                    .iter()
                    .map(|a| self.eval(a, frame))
                    .collect::<Result<_, _>>()?;
                self.call(name, args)?;
            }
        }
        Ok(())
    }

    fn key(&mut self, a: &Address, frame: &Frame) -> Result<Vec<BigInt>, RevertReason> {
        a.indices.iter().map(|i| self.eval(i, frame)).collect()
    }

    fn eval(&mut self, e: &CExpr, frame: &Frame) -> Result<BigInt, RevertReason> {
        Ok(match e {
            CExpr::Int(v) => self.norm(v.clone()),
            CExpr::Temp(t) => frame.get(t).cloned().expect("checked temp is assigned"),
            CExpr::Builtin(Builtin::Sender) => self.sender.clone(),
            CExpr::Builtin(Builtin::CallDepth) => BigInt::from(self.depth),
            CExpr::Bin(op, l, r) => {
                let l = self.eval(l, frame)?;
                let r = self.eval(r, frame)?;
                self.cost.arith += 1;
                let bool = |b: bool| if b { BigInt::one() } else { BigInt::zero() };
                match op {
                    BinOp::Add => self.norm(l + r),
                    BinOp::Sub => self.norm(l - r),
                    BinOp::Mul => self.norm(l * r),
                    BinOp::Div => {
                        if r.is_zero() {
                            return Err(RevertReason::DivisionByZero);
                        }
                        self.norm(l / r)
                    }
                    BinOp::AddChecked => self.checked(l + r)?,
                    BinOp::SubChecked => self.checked(l - r)?,
                    BinOp::MulChecked => self.checked(l * r)?,
                    BinOp::Eq => bool(l == r),
                    BinOp::Ne => bool(l != r),
                    BinOp::Lt => bool(l < r),
                    BinOp::Le => bool(l <= r),
                    BinOp::Gt => bool(l > r),
                    BinOp::Ge => bool(l >= r),
                    BinOp::And => bool(!l.is_zero() && !r.is_zero()),
                }
            }
        })
    }
}
