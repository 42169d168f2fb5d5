use num_bigint::BigInt;
use num_traits::One;
use proptest::prelude::*;

use deltaguard::contract::{parse_contract, Program};
use deltaguard::harness::{differential_test, gen_trace, TraceKind, TraceSpec};
use deltaguard::spec_lang::{check_spec, parse_spec, print_spec, ArithOp, CmpOp, ICond, IExpr, InvariantSpec, MapSum, Rule};
use deltaguard::vm::{execute, StateStore, Status, Transaction, VmConfig};

fn leaf() -> impl Strategy<Value = IExpr> {
    prop_oneof![
        (0u32..1000).prop_map(|v| IExpr::Int(v.into())),
        Just(IExpr::Var("s".into())),
        prop_oneof![Just("x"), Just("y")].prop_map(|x| IExpr::Free(x.into())),
        Just(IExpr::Index("m".into(), vec!["x".into(), "y".into()])),
    ]
}

fn expr() -> impl Strategy<Value = IExpr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        let op = prop_oneof![
            Just(ArithOp::Add),
            Just(ArithOp::Sub),
            Just(ArithOp::Mul),
            Just(ArithOp::Div)
        ];
        (op, inner.clone(), inner).prop_map(|(op, l, r)| IExpr::bin(op, l, r))
    })
}

fn conjunct() -> impl Strategy<Value = ICond> {
    let cmp = prop_oneof![
        Just(CmpOp::Ne),
        Just(CmpOp::Lt),
        Just(CmpOp::Le),
        Just(CmpOp::Gt),
        Just(CmpOp::Ge)
    ];
    prop_oneof![
        (cmp, expr(), expr()).prop_map(|(op, l, r)| ICond::Cmp(op, l, r)),
        expr().prop_map(|e| ICond::EqFree(e, "y".into())),
    ]
}

fn spec() -> impl Strategy<Value = InvariantSpec> {
    (expr(), proptest::collection::vec(conjunct(), 0..3)).prop_map(|(body, cs)| {
        let cond = cs.into_iter().reduce(ICond::and);
        InvariantSpec {
            rules: vec![Rule::MapSum(MapSum {
                target: "v".into(),
                index_vars: vec!["x".into()],
                body,
                over_vars: vec!["y".into()],
                cond,
            })],
        }
    })
}

fn arith_contract() -> Program {
    parse_contract(
        "contract A {
           state r: int;
           entry fn add(a, b) { store r, a + b; }
           entry fn mul(a, b) { store r, a * b; }
           entry fn sub(a, b) { store r, a - b; }
           entry fn cadd(a, b) { store r, a +! b; }
           entry fn csub(a, b) { store r, a -! b; }
           entry fn cmul(a, b) { store r, a *! b; }
         }",
    )
    .unwrap()
}

fn word() -> impl Strategy<Value = BigInt> {
    proptest::collection::vec(any::<u8>(), 0..=32).prop_map(|b| BigInt::from_bytes_be(num_bigint::Sign::Plus, &b))
}

fn eval(p: &Program, f: &str, a: &BigInt, b: &BigInt) -> Option<BigInt> {
    let mut st = StateStore::new(p);
    let tx = Transaction::new(1, f, vec![a.clone(), b.clone()]);
    let o = execute(&mut st, p, &tx, &VmConfig::wrap256());
    o.status.is_accepted().then(|| st.get("r", &[]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn spec_print_parse_round_trip(s in spec()) {
        let text = print_spec(&s);
        let back = parse_spec(&text).unwrap();
        prop_assert_eq!(back, s, "{}", text);
    }

    #[test]
    fn wrap_arith_is_mod_2_256(a in word(), b in word()) {
        let p = arith_contract();
        let m = BigInt::one() << 256;
        let md = |v: BigInt| ((v % &m) + &m) % &m;
        prop_assert_eq!(eval(&p, "add", &a, &b).unwrap(), md(&a + &b));
        prop_assert_eq!(eval(&p, "mul", &a, &b).unwrap(), md(&a * &b));
        prop_assert_eq!(eval(&p, "sub", &a, &b).unwrap(), md(&a - &b));
        prop_assert_eq!(eval(&p, "add", &a, &b), eval(&p, "add", &b, &a));
        prop_assert_eq!(eval(&p, "mul", &a, &b), eval(&p, "mul", &b, &a));
    }

    #[test]
    fn checked_ops_revert_exactly_on_overflow(a in word(), b in word()) {
        let p = arith_contract();
        let m = BigInt::one() << 256;
        let zero = BigInt::from(0);
        for (f, exact) in [("cadd", &a + &b), ("csub", &a - &b), ("cmul", &a * &b)] {
            let fits = exact >= zero && exact < m;
            let got = eval(&p, f, &a, &b);
            prop_assert_eq!(got.is_some(), fits, "{}", f);
            if fits {
                prop_assert_eq!(got.unwrap(), exact);
            }
        }
    }

    #[test]
    fn reverts_leave_state_untouched(seed in any::<u64>()) {
        let p = parse_contract(&std::fs::read_to_string(
            concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/erc20.mini")).unwrap()).unwrap();
        let spec = TraceSpec::custom(&p, 4, 40, seed).with_fault_rate(0.2);
        let mut st = StateStore::new(&p);
        for tx in gen_trace(&spec).unwrap() {
            let before = st.snapshot().to_string();
            let o = execute(&mut st, &p, &tx, &VmConfig::default());
            if matches!(o.status, Status::Reverted(_) | Status::Rejected(_)) {
                prop_assert_eq!(st.snapshot().to_string(), before);
            }
        }
    }

    #[test]
    fn erc20_modes_agree_with_oracle(seed in any::<u64>()) {
        let p = parse_contract(&std::fs::read_to_string(
            concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/erc20.mini")).unwrap()).unwrap();
        let s = parse_spec("t = Map Sum balances[y] Over y; ForAll Assert t == totalSupply;").unwrap();
        let s = check_spec(&s, &p).unwrap();
        let t = gen_trace(&TraceSpec::new(TraceKind::Erc20Transfer, 4, 30, seed).with_fault_rate(0.2)).unwrap();
        let r = differential_test(&p, &s, &t, &VmConfig::default()).unwrap();
        prop_assert!(r.passed(), "{:?}", r.mismatches);
    }
}
