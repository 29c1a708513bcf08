use num_rational::Ratio;

use spa_core::bundled;
use spa_core::generic::solve_text;
use spa_core::scsp::{combine, project, solution, tuples};
use spa_core::{Constraint, FuzzyF64, FuzzyRational, Scsp, Semiring};

/// Brute force: min over the three constraints, for every tuple.
fn brute_force() -> Vec<((char, char), f64)> {
    let c1 = |x: char| if x == 'a' { 0.9_f64 } else { 0.1 };
    let c2 = |x: char, y: char| match (x, y) {
        ('a', 'a') => 0.8,
        ('a', 'b') => 0.2,
        _ => 0.0,
    };
    let c3 = |y: char| if y == 'a' { 0.9 } else { 0.5 };
    let mut out = Vec::new();
    for x in ['a', 'b'] {
        for y in ['a', 'b'] {
            let v: f64 = c1(x).min(c2(x, y)).min(c3(y));
            out.push(((x, y), v));
        }
    }
    out
}

fn problem<S: Semiring>(v: impl Fn(f64) -> S::Value) -> Scsp<String, S::Value> {
    let d = |s: &str| s.to_string();
    let mut p = Scsp::new(vec!["x", "y"], vec!["x", "y"]).unwrap();
    let mut c1 = Constraint::new(vec!["x"], v(0.0)).unwrap();
    c1.set(vec![d("a")], v(0.9)).unwrap();
    c1.set(vec![d("b")], v(0.1)).unwrap();
    let mut c2 = Constraint::new(vec!["x", "y"], v(0.0)).unwrap();
    c2.set(vec![d("a"), d("a")], v(0.8)).unwrap();
    c2.set(vec![d("a"), d("b")], v(0.2)).unwrap();
    let mut c3 = Constraint::new(vec!["y"], v(0.0)).unwrap();
    c3.set(vec![d("a")], v(0.9)).unwrap();
    c3.set(vec![d("b")], v(0.5)).unwrap();
    for c in [c1, c2, c3] {
        p.add(c).unwrap();
    }
    p
}

fn domain() -> Vec<String> {
    vec!["a".into(), "b".into()]
}

#[test]
fn solution_matches_brute_force() {
    let s = FuzzyF64::new();
    let p = problem::<FuzzyF64>(|x| x);
    let sol = solution(&s, &domain(), &p).unwrap();
    for ((x, y), want) in brute_force() {
        let got = *sol.get(&[x.to_string(), y.to_string()]);
        assert_eq!(got, want, "({x}, {y})");
    }
    assert_eq!(*sol.get(&["a".into(), "a".into()]), 0.8);
}

#[test]
fn exact_scalars_agree() {
    let s = FuzzyRational::new();
    let exact = |x: f64| Ratio::new((x * 10.0).round() as i64, 10);
    let p = problem::<FuzzyRational>(exact);
    let sol = solution(&s, &domain(), &p).unwrap();
    for ((x, y), want) in brute_force() {
        assert_eq!(*sol.get(&[x.to_string(), y.to_string()]), exact(want));
    }
}

#[test]
fn projection_takes_the_best_completion() {
    let s = FuzzyF64::new();
    let p = problem::<FuzzyF64>(|x| x);
    let all = p
        .constraints()
        .iter()
        .skip(1)
        .fold(p.constraints()[0].clone(), |acc, c| combine(&s, &domain(), &acc, c).unwrap());
    let on_x = project(&s, &domain(), &all, &["x"]).unwrap();
    for x in ['a', 'b'] {
        let best = brute_force()
            .into_iter()
            .filter(|((bx, _), _)| *bx == x)
            .map(|(_, v)| v)
            .fold(0.0, f64::max);
        assert_eq!(*on_x.get(&[x.to_string()]), best);
    }
    assert_eq!(tuples(&domain(), 2).count(), 4);
}

#[test]
fn bundled_file_solves() {
    let out = solve_text(bundled::FUZZY_EXAMPLE).unwrap().render();
    assert_eq!(out, "solution x y\n  a a -> 0.8\n  a b -> 0.2\n  b a -> 0\n  b b -> 0\n");
}
