//! Seeded random traces for the shipped fixtures.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use rand::{RngExt, SeedableRng};
use rand_pcg::Pcg64;
use thiserror::Error;

use crate::contract::Program;
use crate::vm::Transaction;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceKind {
    Erc20Transfer,
    Erc721Transfer,
    Erc1202Vote,
    AttackBatchOverflow,
    AttackDoubleVote,
    /// Uniform calls to the entry functions listed in `TraceSpec::entries`.
    Custom,
}

impl TraceKind {
    pub const ALL: [TraceKind; 6] = [
        TraceKind::Erc20Transfer,
        TraceKind::Erc721Transfer,
        TraceKind::Erc1202Vote,
        TraceKind::AttackBatchOverflow,
        TraceKind::AttackDoubleVote,
        TraceKind::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TraceKind::Erc20Transfer => "erc20_transfer",
            TraceKind::Erc721Transfer => "erc721_transfer",
            TraceKind::Erc1202Vote => "erc1202_vote",
            TraceKind::AttackBatchOverflow => "attack_batch_overflow",
            TraceKind::AttackDoubleVote => "attack_double_vote",
            TraceKind::Custom => "custom",
        }
    }
}

impl fmt::Display for TraceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TraceKind {
    type Err = TraceGenError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TraceKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| TraceGenError::InvalidParams(format!("unknown trace kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TraceGenError {
    #[error("invalid trace parameters: {0}")]
    InvalidParams(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceSpec {
    pub kind: TraceKind,
    /// Accounts are numbered `1..=accounts`.
    pub accounts: usize,
    /// Transactions after any setup prefix.
    pub txs: usize,
    pub seed: u64,
    /// Probability that a generated transaction is a deliberately faulty one
    /// (an invariant-breaking call or a call whose own asserts fail).
    pub fault_rate: f64,
    /// Entry functions and their arities, for `custom` traces.
    pub entries: Vec<(String, usize)>,
}

impl TraceSpec {
    pub fn new(kind: TraceKind, accounts: usize, txs: usize, seed: u64) -> Self {
        TraceSpec {
            kind,
            accounts,
            txs,
            seed,
            fault_rate: 0.0,
            entries: Vec::new(),
        }
    }

    pub fn with_fault_rate(mut self, rate: f64) -> Self {
        self.fault_rate = rate;
        self
    }

    /// A `custom` spec calling every entry function of `program`.
    pub fn custom(program: &Program, accounts: usize, txs: usize, seed: u64) -> Self {
        let mut s = TraceSpec::new(TraceKind::Custom, accounts, txs, seed);
        s.entries = program
            .functions
            .iter()
            .filter(|f| f.entry)
            .map(|f| (f.name.clone(), f.params.len()))
            .collect();
        s
    }
}

fn tx(sender: usize, function: &str, args: &[BigInt]) -> Transaction {
    Transaction::new(sender, function, args.to_vec())
}

fn n(v: impl Into<BigInt>) -> BigInt {
    v.into()
}

pub fn gen_trace(spec: &TraceSpec) -> Result<Vec<Transaction>, TraceGenError> {
    if !(0.0..=1.0).contains(&spec.fault_rate) {
        return Err(TraceGenError::InvalidParams("fault_rate must be in [0, 1]".into()));
    }
    let mut rng = Pcg64::seed_from_u64(spec.seed);
    let need = |min: usize| {
        if spec.accounts < min {
            Err(TraceGenError::InvalidParams(format!(
                "{} needs at least {min} accounts",
                spec.kind
            )))
        } else {
            Ok(())
        }
    };
    match spec.kind {
        TraceKind::Erc20Transfer => {
            need(2)?;
            Ok(erc20(spec, &mut rng))
        }
        TraceKind::Erc721Transfer => {
            need(2)?;
            Ok(erc721(spec, &mut rng))
        }
        TraceKind::Erc1202Vote => {
            need(5)?;
            Ok(vote(spec, &mut rng))
        }
        TraceKind::AttackBatchOverflow => Ok(vec![tx(
            1,
            "batchTransfer",
            &[n(2), n(3), BigInt::from(1) << 255],
        )]),
        TraceKind::AttackDoubleVote => Ok(vec![
            tx(1, "createIssue", &create_args(1, &[1, 2, 3, 4, 5], &[10, 20, 30, 40, 50])),
            tx(1, "vote", &[n(1), n(1)]),
            tx(1, "vote", &[n(1), n(2)]),
        ]),
        TraceKind::Custom => {
            need(1)?;
            if spec.entries.is_empty() {
                return Err(TraceGenError::InvalidParams("custom trace needs entry functions".into()));
            }
            Ok(custom(spec, &mut rng))
        }
    }
}

/// `accounts` mints, then `txs` transfer-family calls checked against a
/// shadow ledger so that most succeed.
fn erc20(spec: &TraceSpec, rng: &mut Pcg64) -> Vec<Transaction> {
    let na = spec.accounts;
    let mut bal = vec![0u64; na + 1];
    let mut allowed: BTreeMap<(usize, usize), u64> = BTreeMap::new();
    let mut out = Vec::with_capacity(na + spec.txs);
    for (a, b) in bal.iter_mut().enumerate().skip(1) {
        *b = rng.random_range(1_000..10_000);
        out.push(tx(a, "mint", &[n(a), n(*b)]));
    }
    let account = |rng: &mut Pcg64| rng.random_range(1..=na);
    for _ in 0..spec.txs {
        let from = account(rng);
        let to = account(rng);
        if rng.random_bool(spec.fault_rate) {
            match rng.random_range(0..3) {
                0 => out.push(tx(from, "airdrop", &[n(to), n(rng.random_range(1..100u64))])),
                1 => out.push(tx(from, "transfer", &[n(to), n(bal[from] + 1)])),
                _ => {
                    let a = allowed.get(&(to, from)).copied().unwrap_or(0);
                    out.push(tx(from, "transferFrom", &[n(to), n(from), n(a + 1)]));
                }
            }
            continue;
        }
        match rng.random_range(0..20) {
            0 => {
                let v = rng.random_range(0..=bal[from]);
                allowed.insert((from, to), v);
                out.push(tx(from, "approve", &[n(to), n(v)]));
            }
            1 if !allowed.is_empty() => {
                let i = rng.random_range(0..allowed.len());
                let (&(owner, spender), &a) = allowed.iter().nth(i).expect("in range");
                let v = rng.random_range(0..=a.min(bal[owner]));
                allowed.insert((owner, spender), a - v);
                bal[owner] -= v;
                bal[to] += v;
                out.push(tx(spender, "transferFrom", &[n(owner), n(to), n(v)]));
            }
            _ => {
                let v = rng.random_range(0..=bal[from]);
                bal[from] -= v;
                bal[to] += v;
                out.push(tx(from, "transfer", &[n(to), n(v)]));
            }
        }
    }
    out
}

fn erc721(spec: &TraceSpec, rng: &mut Pcg64) -> Vec<Transaction> {
    let na = spec.accounts;
    let mut owner: BTreeMap<u64, usize> = BTreeMap::new();
    let mut next_token = 1u64;
    let mut out = Vec::with_capacity(spec.txs);
    for _ in 0..spec.txs {
        let a = rng.random_range(1..=na);
        let b = rng.random_range(1..=na);
        if rng.random_bool(spec.fault_rate) {
            match (rng.random_range(0..2), owner.iter().next()) {
                (0, Some((&t, &o))) => {
                    owner.remove(&t);
                    out.push(tx(o, "burn", &[n(t)]));
                }
                _ => {
                    let t = rng.random_range(1..next_token + 1);
                    let o = owner.get(&t).copied().unwrap_or(0);
                    let s = if o == a { a % na + 1 } else { a };
                    out.push(tx(s, "transferFrom", &[n(o), n(b), n(t)]));
                }
            }
            continue;
        }
        if owner.is_empty() || rng.random_range(0..3) == 0 {
            owner.insert(next_token, a);
            out.push(tx(a, "mint", &[n(a), n(next_token)]));
            next_token += 1;
        } else {
            let i = rng.random_range(0..owner.len());
            let (&t, &o) = owner.iter().nth(i).expect("in range");
            owner.insert(t, b);
            out.push(tx(o, "transferFrom", &[n(o), n(b), n(t)]));
        }
    }
    out
}

fn create_args(issue: u64, voters: &[usize], weights: &[u64]) -> Vec<BigInt> {
    let mut args = vec![n(issue)];
    for (v, w) in voters.iter().zip(weights) {
        args.push(n(*v));
        args.push(n(*w));
    }
    args
}

/// Blocks of one `createIssue` followed by five votes, one per listed voter.
/// A faulty vote repeats an earlier voter's ballot with the other option.
fn vote(spec: &TraceSpec, rng: &mut Pcg64) -> Vec<Transaction> {
    let na = spec.accounts;
    let mut out = Vec::with_capacity(spec.txs);
    let mut issue = 0u64;
    while out.len() < spec.txs {
        issue += 1;
        let mut pool: Vec<usize> = (1..=na).collect();
        let mut voters = Vec::with_capacity(5);
        for _ in 0..5 {
            voters.push(pool.swap_remove(rng.random_range(0..pool.len())));
        }
        let weights: Vec<u64> = (0..5).map(|_| rng.random_range(1..=100)).collect();
        out.push(tx(voters[0], "createIssue", &create_args(issue, &voters, &weights)));
        let mut cast: Vec<(usize, u64)> = Vec::new();
        for v in &voters {
            if out.len() >= spec.txs {
                break;
            }
            if !cast.is_empty() && rng.random_bool(spec.fault_rate) {
                let (who, opt) = cast[rng.random_range(0..cast.len())];
                out.push(tx(who, "vote", &[n(issue), n(3 - opt)]));
                continue;
            }
            let opt = rng.random_range(1..=2u64);
            cast.push((*v, opt));
            out.push(tx(*v, "vote", &[n(issue), n(opt)]));
        }
    }
    out
}

fn custom(spec: &TraceSpec, rng: &mut Pcg64) -> Vec<Transaction> {
    (0..spec.txs)
        .map(|_| {
            let (f, arity) = &spec.entries[rng.random_range(0..spec.entries.len())];
            let args: Vec<BigInt> = (0..*arity)
                .map(|_| {
                    if rng.random_bool(spec.fault_rate) {
                        n(rng.random_range(0..u64::MAX))
                    } else {
                        n(rng.random_range(0..=spec.accounts as u64))
                    }
                })
                .collect();
            tx(rng.random_range(1..=spec.accounts), f, &args)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_trace() {
        for kind in [TraceKind::Erc20Transfer, TraceKind::Erc721Transfer, TraceKind::Erc1202Vote] {
            let s = TraceSpec::new(kind, 10, 200, 7).with_fault_rate(0.1);
            assert_eq!(gen_trace(&s).unwrap(), gen_trace(&s).unwrap());
            let other = TraceSpec { seed: 8, ..s.clone() };
            assert_ne!(gen_trace(&s).unwrap(), gen_trace(&other).unwrap());
        }
    }

    #[test]
    fn erc20_shape() {
        let t = gen_trace(&TraceSpec::new(TraceKind::Erc20Transfer, 10, 100, 1)).unwrap();
        assert_eq!(t.len(), 110);
        assert!(t[..10].iter().all(|x| x.function == "mint"));
        let transfers = t[10..].iter().filter(|x| x.function == "transfer").count();
        assert!(transfers >= 80, "{transfers}");
        let one = BigInt::from(1);
        let ten = BigInt::from(10);
        assert!(t.iter().all(|x| x.sender >= one && x.sender <= ten));
    }

    #[test]
    fn vote_blocks() {
        let t = gen_trace(&TraceSpec::new(TraceKind::Erc1202Vote, 8, 18, 3)).unwrap();
        assert_eq!(t.len(), 18);
        for (i, x) in t.iter().enumerate() {
            let want = if i % 6 == 0 { "createIssue" } else { "vote" };
            assert_eq!(x.function, want);
        }
    }

    #[test]
    fn attacks_are_fixed() {
        let t = gen_trace(&TraceSpec::new(TraceKind::AttackDoubleVote, 0, 0, 0)).unwrap();
        let f: Vec<&str> = t.iter().map(|x| x.function.as_str()).collect();
        assert_eq!(f, ["createIssue", "vote", "vote"]);
        assert_eq!(t[1].sender, t[2].sender);
        let t = gen_trace(&TraceSpec::new(TraceKind::AttackBatchOverflow, 0, 0, 0)).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].args[2], BigInt::from(1) << 255);
    }

    #[test]
    fn invalid_params() {
        assert!(gen_trace(&TraceSpec::new(TraceKind::Erc20Transfer, 1, 5, 0)).is_err());
        assert!(gen_trace(&TraceSpec::new(TraceKind::Erc1202Vote, 4, 5, 0)).is_err());
        assert!(gen_trace(&TraceSpec::new(TraceKind::Custom, 3, 5, 0)).is_err());
        assert!("bogus".parse::<TraceKind>().is_err());
    }
}
