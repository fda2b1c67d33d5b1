mod common;

use num_bigint::BigInt;
use proptest::prelude::*;

use intbox::absint::{analyze_program, AnalysisConfig};
use intbox::contractor::{classify_condition, hc4_revise, BoxN, Constraint};
use intbox::interval::{eval_cmp, interval_binop};
use intbox::lang::{parse_condition, parse_expr, Expr};
use intbox::{ArithOp, CmpOp, Interval, Truth3};

use common::{relation_holds, satisfies, Point};

fn finite(max_width: i64) -> impl Strategy<Value = (i64, i64)> {
    (-30i64..=30, 0..=max_width).prop_map(|(lo, w)| (lo, lo + w))
}

fn interval() -> impl Strategy<Value = Interval> {
    prop_oneof![
        Just(Interval::bottom()),
        Just(Interval::top()),
        (-20i64..=20).prop_map(|hi| Interval::at_most(hi.into())),
        (-20i64..=20).prop_map(|lo| Interval::at_least(lo.into())),
        finite(20).prop_map(|(lo, hi)| Interval::range(lo, hi)),
    ]
}

fn arith_op() -> impl Strategy<Value = ArithOp> {
    prop_oneof![Just(ArithOp::Add), Just(ArithOp::Sub), Just(ArithOp::Mul), Just(ArithOp::Div)]
}

fn cmp_op() -> impl Strategy<Value = CmpOp> {
    prop_oneof![
        Just(CmpOp::Lt),
        Just(CmpOp::Le),
        Just(CmpOp::Gt),
        Just(CmpOp::Ge),
        Just(CmpOp::Eq),
        Just(CmpOp::Ne)
    ]
}

fn concrete(op: ArithOp, x: i64, y: i64) -> Option<i64> {
    match op {
        ArithOp::Add => Some(x + y),
        ArithOp::Sub => Some(x - y),
        ArithOp::Mul => Some(x * y),
        ArithOp::Div => x.checked_div(y),
    }
}

proptest! {
    #[test]
    fn binop_contains_every_concrete_result(op in arith_op(), a in finite(16), b in finite(16)) {
        let r = interval_binop(op, &Interval::range(a.0, a.1), &Interval::range(b.0, b.1));
        for x in a.0..=a.1 {
            for y in b.0..=b.1 {
                if let Some(v) = concrete(op, x, y) {
                    prop_assert!(r.contains(&BigInt::from(v)), "{op:?} {x} {y} = {v} not in {r}");
                }
            }
        }
    }

    #[test]
    fn join_and_meet_form_a_lattice(a in interval(), b in interval(), c in interval()) {
        prop_assert_eq!(a.join(&b), b.join(&a));
        prop_assert_eq!(a.meet(&b), b.meet(&a));
        prop_assert_eq!(a.join(&b).join(&c), a.join(&b.join(&c)));
        prop_assert_eq!(a.meet(&b).meet(&c), a.meet(&b.meet(&c)));
        prop_assert_eq!(a.join(&a.meet(&b)), a.clone());
        prop_assert_eq!(a.meet(&a.join(&b)), a.clone());
        prop_assert!(a.meet(&b).leq(&a) && a.leq(&a.join(&b)));
    }

    #[test]
    fn widen_and_narrow_are_sound(a in interval(), b in interval()) {
        prop_assert!(a.join(&b).leq(&a.widen(&b)));
        let small = a.meet(&b);
        prop_assert!(a.meet(&small).leq(&a.narrow(&small)));
    }

    #[test]
    fn eval_cmp_agrees_with_enumeration(op in cmp_op(), a in finite(8), b in finite(8)) {
        let mut seen = (false, false);
        for x in a.0..=a.1 {
            for y in b.0..=b.1 {
                if relation_holds(op, &x.into(), &y.into()) { seen.0 = true } else { seen.1 = true }
            }
        }
        let want = match seen {
            (true, false) => Truth3::True,
            (false, true) => Truth3::False,
            _ => Truth3::Maybe,
        };
        prop_assert_eq!(eval_cmp(op, &Interval::range(a.0, a.1), &Interval::range(b.0, b.1)), want);
    }

    #[test]
    fn contraction_is_monotone(
        seed in any::<u64>(),
        x in finite(12), y in finite(12),
        dx in (0i64..4, 0i64..4), dy in (0i64..4, 0i64..4),
    ) {
        let exprs = ["x + y", "x - 2 * y", "x * y", "x / (y + 1)", "-x + y * y"];
        let c = Constraint::new(
            [CmpOp::Le, CmpOp::Eq, CmpOp::Gt, CmpOp::Ne][(seed % 4) as usize],
            parse_expr(exprs[(seed / 4 % 5) as usize]).unwrap(),
            Expr::int((seed / 20 % 11) as i64 - 5),
        );
        let inner = BoxN::new([("x", Interval::range(x.0, x.1)), ("y", Interval::range(y.0, y.1))]);
        let outer = BoxN::new([
            ("x", Interval::range(x.0 - dx.0, x.1 + dx.1)),
            ("y", Interval::range(y.0 - dy.0, y.1 + dy.1)),
        ]);
        prop_assert!(hc4_revise(&c, &inner).leq(&hc4_revise(&c, &outer)), "{c}: {inner} vs {outer}");
    }

    #[test]
    fn classification_matches_enumeration(seed in any::<u64>(), x in finite(8), y in finite(8)) {
        let conds = [
            "x > 3 && x < 10",
            "x + y <= 4",
            "x == y || x < 0",
            "!(x * y > 6)",
            "x != y && y >= -2",
        ];
        let text = conds[(seed % conds.len() as u64) as usize];
        let cond = parse_condition(text).unwrap();
        let b = BoxN::new([("x", Interval::range(x.0, x.1)), ("y", Interval::range(y.0, y.1))]);
        let cl = classify_condition(&cond, &b);
        let holds = |p: &Point| eval_cond(&cond, p);
        let points = b.points();
        match cl.verdict {
            Truth3::True => prop_assert!(points.iter().all(holds), "{text} on {b}"),
            Truth3::False => prop_assert!(!points.iter().any(holds), "{text} on {b}"),
            Truth3::Maybe => {}
        }
        for p in &points {
            if holds(p) {
                prop_assert!(cl.box_in.contains_point(p), "{text}: box_in {} misses {p:?}", cl.box_in);
            } else {
                prop_assert!(cl.box_out.contains_point(p), "{text}: box_out {} misses {p:?}", cl.box_out);
            }
        }
    }
}

/// Concrete truth of a condition built from comparisons, `!`, `&&`, `||`.
fn eval_cond(e: &Expr, p: &Point) -> bool {
    use intbox::lang::{BinOp, UnOp};
    match e {
        Expr::Bool(b) => *b,
        Expr::Unary(UnOp::Not, a) => !eval_cond(a, p),
        Expr::Binary(BinOp::And, l, r) => eval_cond(l, p) && eval_cond(r, p),
        Expr::Binary(BinOp::Or, l, r) => eval_cond(l, p) || eval_cond(r, p),
        Expr::Binary(BinOp::Cmp(op), l, r) => satisfies(&Constraint::new(*op, (**l).clone(), (**r).clone()), p),
        other => panic!("not a condition: {other}"),
    }
}

#[test]
fn analysis_of_the_whole_corpus_is_sound() {
    for (name, p) in common::corpus() {
        common::soundness_all_configs(&p).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn corpus_survives_optimization_and_instrumentation() {
    for (name, p) in common::corpus() {
        for c in common::configs() {
            common::optimization_preserves_behavior(&p, &c).unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        common::instrumentation_is_invariant(&p).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn optimizing_twice_changes_nothing() {
    let config = AnalysisConfig::default();
    for (name, p) in common::corpus() {
        let (once, _) = intbox::optimize::optimize_program(&p, &config);
        let (twice, report) = intbox::optimize::optimize_program(&once, &config);
        assert_eq!(once, twice, "{name}");
        assert_eq!(report.changes(), 0, "{name}");
    }
}

#[test]
fn contractors_never_lose_precision_on_fuzzed_programs() {
    for i in 0..200 {
        let p = common::fuzz_program(i);
        let on = analyze_program(&p, &AnalysisConfig::default());
        let off = analyze_program(&p, &AnalysisConfig { use_contractors: false, ..AnalysisConfig::default() });
        for (f, fa) in &on.functions {
            for (n, s) in &fa.result.before {
                let t = &off.functions[f].result.before[n];
                assert!(s.leq(t), "program {i} {f} {n}: {s} vs {t}\n{p}");
            }
        }
    }
}
