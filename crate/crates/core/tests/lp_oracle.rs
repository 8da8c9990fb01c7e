//! Randomized cross-check of the simplex against brute-force vertex
//! enumeration on small fully-bounded LPs. Every optimum of a bounded LP
//! sits at a basic point, i.e. an intersection of n active constraints drawn
//! from the rows and the variable bounds, so enumerating all such
//! intersections is a complete (if exponential) oracle.

use netlift::model::{ObjSense, OptModel, Sense, SolveStatus, VarKind};
use netlift::simplex::{solve_lp, SimplexOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FEAS_TOL: f64 = 1e-6;

struct RandomLp {
    n: usize,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    rows: Vec<(Vec<f64>, Sense, f64)>,
    maximize: bool,
}

fn random_lp(rng: &mut ChaCha8Rng) -> RandomLp {
    let n = rng.gen_range(2..=5);
    let m = rng.gen_range(1..=4);
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for _ in 0..n {
        let l = -5.0 * rng.gen::<f64>();
        lower.push(l);
        upper.push(l + 0.5 + 7.5 * rng.gen::<f64>());
    }
    let cost: Vec<f64> = (0..n).map(|_| 6.0 * rng.gen::<f64>() - 3.0).collect();
    let mid: Vec<f64> = (0..n).map(|j| 0.5 * (lower[j] + upper[j])).collect();
    let mut rows = Vec::new();
    for _ in 0..m {
        let coeffs: Vec<f64> = (0..n)
            .map(|_| {
                if rng.gen::<f64>() < 0.3 {
                    0.0
                } else {
                    4.0 * rng.gen::<f64>() - 2.0
                }
            })
            .collect();
        let sense = match rng.gen_range(0..4) {
            0 => Sense::Eq,
            1 | 2 => Sense::Le,
            _ => Sense::Ge,
        };
        let at_mid: f64 = coeffs.iter().zip(&mid).map(|(a, x)| a * x).sum();
        let rhs = at_mid + 4.0 * rng.gen::<f64>() - 2.0;
        rows.push((coeffs, sense, rhs));
    }
    RandomLp {
        n,
        lower,
        upper,
        cost,
        rows,
        maximize: rng.gen::<bool>(),
    }
}

/// Dense Gaussian elimination with partial pivoting; None if singular.
fn solve_square(a: &mut [Vec<f64>], b: &mut [f64]) -> Option<Vec<f64>> {
    let n = b.len();
    for k in 0..n {
        let piv = (k..n)
            .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
            .unwrap();
        if a[piv][k].abs() < 1e-10 {
            return None;
        }
        a.swap(k, piv);
        b.swap(k, piv);
        for i in (k + 1)..n {
            let f = a[i][k] / a[k][k];
            if f != 0.0 {
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut s = b[k];
        for j in (k + 1)..n {
            s -= a[k][j] * x[j];
        }
        x[k] = s / a[k][k];
    }
    Some(x)
}

fn feasible(lp: &RandomLp, x: &[f64]) -> bool {
    for j in 0..lp.n {
        if x[j] < lp.lower[j] - FEAS_TOL || x[j] > lp.upper[j] + FEAS_TOL {
            return false;
        }
    }
    for (coeffs, sense, rhs) in &lp.rows {
        let lhs: f64 = coeffs.iter().zip(x).map(|(a, v)| a * v).sum();
        let ok = match sense {
            Sense::Le => lhs <= rhs + FEAS_TOL,
            Sense::Ge => lhs >= rhs - FEAS_TOL,
            Sense::Eq => (lhs - rhs).abs() <= FEAS_TOL,
        };
        if !ok {
            return false;
        }
    }
    true
}

/// Enumerate intersections of n active constraints; return the best feasible
/// objective in minimize form (after sense adjustment), or None if no
/// feasible vertex exists.
fn enumerate_optimum(lp: &RandomLp) -> Option<f64> {
    // Constraint pool: each entry is (normal, rhs).
    let mut pool: Vec<(Vec<f64>, f64)> = Vec::new();
    for (coeffs, _, rhs) in &lp.rows {
        pool.push((coeffs.clone(), *rhs));
    }
    for j in 0..lp.n {
        let mut e = vec![0.0; lp.n];
        e[j] = 1.0;
        pool.push((e.clone(), lp.lower[j]));
        pool.push((e, lp.upper[j]));
    }
    let sign = if lp.maximize { -1.0 } else { 1.0 };
    let mut best: Option<f64> = None;
    let k = pool.len();
    let mut idx: Vec<usize> = (0..lp.n).collect();
    loop {
        let mut a: Vec<Vec<f64>> = idx.iter().map(|&i| pool[i].0.clone()).collect();
        let mut b: Vec<f64> = idx.iter().map(|&i| pool[i].1).collect();
        if let Some(x) = solve_square(&mut a, &mut b) {
            if feasible(lp, &x) {
                let obj: f64 =
                    sign * lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>();
                best = Some(best.map_or(obj, |b: f64| b.min(obj)));
            }
        }
        // next combination
        let mut i = lp.n;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] != i + k - lp.n {
                idx[i] += 1;
                for j in (i + 1)..lp.n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

fn build_model(lp: &RandomLp) -> OptModel {
    let sense = if lp.maximize {
        ObjSense::Maximize
    } else {
        ObjSense::Minimize
    };
    let mut m = OptModel::new(sense);
    let vars: Vec<_> = (0..lp.n)
        .map(|j| {
            m.add_variable(&format!("x{j}"), lp.lower[j], lp.upper[j], VarKind::Continuous)
                .unwrap()
        })
        .collect();
    for (j, &v) in vars.iter().enumerate() {
        m.add_objective_term(v, lp.cost[j]).unwrap();
    }
    for (i, (coeffs, sense, rhs)) in lp.rows.iter().enumerate() {
        let terms: Vec<_> = vars
            .iter()
            .zip(coeffs)
            .filter(|(_, &c)| c != 0.0)
            .map(|(&v, &c)| (v, c))
            .collect();
        m.add_constraint(&format!("r{i}"), &terms, *sense, *rhs).unwrap();
    }
    m
}

#[test]
fn simplex_matches_vertex_enumeration_on_random_lps() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
    let opts = SimplexOptions::default();
    let mut solved = 0;
    let mut infeasible = 0;
    for case in 0..100 {
        let lp = random_lp(&mut rng);
        let model = build_model(&lp);
        let res = solve_lp(&model, &opts).unwrap();
        let oracle = enumerate_optimum(&lp);
        match (res.status, oracle) {
            (SolveStatus::Optimal, Some(best_min_form)) => {
                let sign = if lp.maximize { -1.0 } else { 1.0 };
                let got = sign * res.objective;
                assert!(
                    (got - best_min_form).abs() <= 1e-6 * (1.0 + best_min_form.abs()),
                    "case {case}: simplex {} vs enumeration {} (min form)",
                    got,
                    best_min_form
                );
                // The reported primal must itself be feasible.
                let x: Vec<f64> = (0..lp.n)
                    .map(|j| res.value(&format!("x{j}")).unwrap())
                    .collect();
                assert!(feasible(&lp, &x), "case {case}: infeasible primal returned");
                solved += 1;
            }
            (SolveStatus::Infeasible, None) => infeasible += 1,
            (status, oracle) => panic!(
                "case {case}: simplex says {status:?}, enumeration says {}",
                if oracle.is_some() { "feasible" } else { "infeasible" }
            ),
        }
    }
    // The generator is tuned so both outcomes actually occur.
    assert!(solved >= 30, "only {solved} solvable cases; generator drifted");
    assert!(infeasible >= 5, "only {infeasible} infeasible cases; generator drifted");
}
