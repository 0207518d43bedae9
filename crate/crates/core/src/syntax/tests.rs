use proptest::prelude::*;

use super::*;
use crate::rational::Rational;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn x_gets(n: u64) -> Program {
    Program::assign("x", ArithExpr::int(n))
}

#[test]
fn parses_single_assignment() {
    assert_eq!(parse("x := 1").unwrap(), x_gets(1));
}

#[test]
fn parses_choice() {
    let expected = Program::choice(x_gets(1), r(1, 2), x_gets(0)).unwrap();
    assert_eq!(parse("{x := 1} [1/2] {x := 0}").unwrap(), expected);
    assert_eq!(parse("{x := 1} [0.5] {x := 0}").unwrap(), expected);
}

#[test]
fn rejects_probability_outside_unit_interval() {
    match parse("{x := 1} [3/2] {x := 0}") {
        Err(ParseError::ProbabilityRange { value, line: 1, column: 11 }) => assert_eq!(value, r(3, 2)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn syntax_errors_carry_line_and_column() {
    let err = parse("x := 1;\ny := ").unwrap_err();
    assert_eq!(err.position(), (2, 6));
    let err = parse("while (x = 0) { x := x").unwrap_err();
    assert!(matches!(err, ParseError::Syntax { line: 1, .. }), "{err}");
    assert!(parse("x = 1").is_err());
    assert!(parse("").is_err());
    assert!(parse("{x := 1} [y] {x := 0}").is_err());
}

#[test]
fn prints_spec_forms() {
    assert_eq!(pretty_print(&x_gets(1)), "x := 1");
    let fair = Program::choice(x_gets(1), r(1, 2), x_gets(0)).unwrap();
    assert_eq!(pretty_print(&fair), "{x := 1} [1/2] {x := 0}");
    let countdown = Program::while_loop(
        BoolExpr::ne(ArithExpr::var("x"), ArithExpr::int(0)),
        Program::assign("x", ArithExpr::var("x").sub(ArithExpr::int(1))),
    );
    assert_eq!(pretty_print(&countdown), "while (x != 0) { x := x - 1 }");
}

#[test]
fn left_nested_sequences_are_grouped() {
    let p = Program::seq(Program::seq(x_gets(1), x_gets(2)), x_gets(3));
    assert_eq!(pretty_print(&p), "{x := 1; x := 2}; x := 3");
    assert_eq!(parse(&pretty_print(&p)).unwrap(), p);
}

#[test]
fn arithmetic_precedence_and_associativity() {
    let e = parse_arith("a - (b - c)").unwrap();
    assert_eq!(print_arith(&e), "a - (b - c)");
    let e = parse_arith("a - b - c").unwrap();
    assert_eq!(print_arith(&e), "a - b - c");
    let e = parse_arith("(a + b) * c mod 2").unwrap();
    assert_eq!(print_arith(&e), "(a + b) * c mod 2");
    let e = parse_arith("x / 1/2").unwrap();
    assert_eq!(e, ArithExpr::var("x").div(ArithExpr::Lit(r(1, 2))));
}

#[test]
fn boolean_grouping() {
    let b = parse_bool("(x + 1) < 2 && !(y = 0 || z != 1)").unwrap();
    let expected = BoolExpr::lt(ArithExpr::var("x").add(ArithExpr::int(1)), ArithExpr::int(2)).and(
        BoolExpr::eq(ArithExpr::var("y"), ArithExpr::int(0))
            .or(BoolExpr::ne(ArithExpr::var("z"), ArithExpr::int(1)))
            .not(),
    );
    assert_eq!(b, expected);
    assert_eq!(parse_bool(&print_bool(&b)).unwrap(), b);
    // `>` and `>=` are accepted and normalised by swapping operands.
    assert_eq!(parse_bool("x > 1").unwrap(), parse_bool("1 < x").unwrap());
    assert_eq!(parse_bool("((x)) <= 1").unwrap(), parse_bool("x <= 1").unwrap());
}

#[test]
fn skip_and_if_desugar_to_core_forms() {
    assert_eq!(parse("skip").unwrap(), Program::assign(SKIP_VAR, ArithExpr::int(0)));
    let p = parse("if (x = 0) {y := 1} else {y := 2}").unwrap();
    let expected = parse(
        "__t0 := 0; while (x = 0 && __t0 = 0) { y := 1; __t0 := 1 }; \
         while (!(x = 0) && __t0 = 0) { y := 2; __t0 := 1 }",
    )
    .unwrap();
    assert_eq!(p, expected);
    assert!(p.is_ordinary());
}

#[test]
fn if_sites_get_distinct_fresh_flags() {
    let p = parse("__t0 := 5; if (x = 0) {y := 1}; if (y = 1) {z := 1} else {skip}").unwrap();
    let vars: Vec<String> = p.vars().iter().map(|v| v.to_string()).collect();
    assert!(vars.contains(&"__t1".to_string()) && vars.contains(&"__t2".to_string()), "{vars:?}");
    assert_eq!(parse(&pretty_print(&p)).unwrap(), p);
}

#[test]
fn vars_of_examples() {
    let names = |src: &str| -> Vec<String> { parse(src).unwrap().vars().iter().map(|v| v.to_string()).collect() };
    assert_eq!(names("x := y + 1"), ["x", "y"]);
    assert_eq!(names("x := x"), ["x"]);
    assert_eq!(
        names("i := 0; {c := 0} [1/2] {c := 1}; while (c != 0) { i := i + 1; {c := 0} [1/2] {c := 1} }"),
        ["i", "c"]
    );
}

#[test]
fn is_ordinary_examples() {
    assert!(is_ordinary(&parse("x := 1").unwrap()));
    assert!(!is_ordinary(&parse("{x := 1} [1/2] {x := 0}").unwrap()));
    assert!(!is_ordinary(&parse("while (x != 0) { x := x - 1; {x := 1} [1/2] {x := 0} }").unwrap()));
}

/// The programs displayed in the hardness constructions, with their
/// placeholder sub-programs filled in.
#[test]
fn displayed_programs_parse() {
    let two_generators = "
        i := 0; {continue := 0} [0.5] {continue := 1};
        while (continue ≠ 0){
            i := i + 1;
            {continue := 0} [0.5] {continue := 1}
        };
        s := 0; {continue := 0} [0.5] {continue := 1};
        while (continue ≠ 0){
            s := s + 1;
            {continue := 0} [0.5] {continue := 1}
        };
        v := 0; v := 1
    ";
    let p = parse(two_generators).unwrap();
    assert_eq!(p.choice_count(), 4);
    let one_generator = "
        i := 0; {continue := 0} [0.5] {continue := 1};
        while (continue ≠ 0){
            i := i + 1;
            {continue := 0} [0.5] {continue := 1}
        };
        x := i
    ";
    assert_eq!(parse(one_generator).unwrap().choice_count(), 2);
    assert_eq!(pretty_print(&parse("v := 0; x := 1; v := 1").unwrap()), "v := 0; x := 1; v := 1");
}

#[test]
fn wrapped_layout_reparses() {
    let src = "i := 0; {c := 0} [1/2] {c := 1}; while (c != 0) { i := i + 1; {c := 0} [1/2] {c := 1} }";
    let p = parse(src).unwrap();
    let wrapped = pretty_print_wrapped(&p, 30);
    assert!(wrapped.lines().count() > 3, "{wrapped}");
    assert_eq!(parse(&wrapped).unwrap(), p);
    assert_eq!(pretty_print_wrapped(&x_gets(1), DEFAULT_WIDTH), "x := 1");
}

fn var_strategy() -> impl Strategy<Value = Var> {
    prop_oneof![Just(Var::new("x")), Just(Var::new("y")), Just(Var::new("count_2")), Just(Var::new("__t0")),]
}

fn rational_strategy() -> impl Strategy<Value = Rational> {
    (0u32..50, 1u32..9).prop_map(|(n, d)| Rational::new(n.into(), d.into()))
}

fn arith_strategy() -> impl Strategy<Value = ArithExpr> {
    let leaf = prop_oneof![rational_strategy().prop_map(ArithExpr::Lit), var_strategy().prop_map(ArithExpr::Var)];
    leaf.prop_recursive(4, 24, 2, |inner| {
        (
            prop_oneof![
                Just(ArithOp::Add),
                Just(ArithOp::Sub),
                Just(ArithOp::Mul),
                Just(ArithOp::Div),
                Just(ArithOp::IntDiv),
                Just(ArithOp::Mod)
            ],
            inner.clone(),
            inner,
        )
            .prop_map(|(op, l, r)| ArithExpr::bin(op, l, r))
    })
}

fn bool_strategy() -> impl Strategy<Value = BoolExpr> {
    let leaf = (
        prop_oneof![Just(CmpOp::Lt), Just(CmpOp::Le), Just(CmpOp::Eq), Just(CmpOp::Ne)],
        arith_strategy(),
        arith_strategy(),
    )
        .prop_map(|(op, l, r)| BoolExpr::cmp(op, l, r));
    leaf.prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(l, r)| l.and(r)),
            (inner.clone(), inner.clone()).prop_map(|(l, r)| l.or(r)),
            inner.prop_map(BoolExpr::not),
        ]
    })
}

fn program_strategy() -> impl Strategy<Value = Program> {
    let leaf = (var_strategy(), arith_strategy()).prop_map(|(v, e)| Program::Assign(v, e));
    leaf.prop_recursive(5, 40, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Program::seq(a, b)),
            (inner.clone(), 0u32..=8, inner.clone()).prop_map(|(a, n, b)| Program::choice(
                a,
                Rational::new(n.into(), 8.into()),
                b
            )
            .unwrap()),
            (bool_strategy(), inner).prop_map(|(g, body)| Program::while_loop(g, body)),
        ]
    })
}

proptest! {
    #[test]
    fn round_trip(p in program_strategy()) {
        let text = pretty_print(&p);
        prop_assert_eq!(parse(&text).unwrap(), p.clone());
        prop_assert_eq!(parse(&pretty_print_wrapped(&p, 40)).unwrap(), p);
    }

    #[test]
    fn arith_round_trip(e in arith_strategy()) {
        prop_assert_eq!(parse_arith(&print_arith(&e)).unwrap(), e);
    }
}
