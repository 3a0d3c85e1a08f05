use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use qperc::walk::{
    evolve, evolve_trace, ghz_fidelity, ghz_product_state, shift_operator, Operator, WalkProgram, WalkState,
    WalkStep, GHZ_PARTIES, GHZ_SCHEDULE, GHZ_SPECTATOR, NORM_TOL,
};

type Matrix = Vec<Vec<Complex64>>;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (n, m) = (a.len(), b.len());
    let mut out = vec![vec![zero(); n * m]; n * m];
    for i in 0..n {
        for j in 0..n {
            for k in 0..m {
                for l in 0..m {
                    out[i * m + k][j * m + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let d = a.len();
    (0..d)
        .map(|i| (0..d).map(|j| (0..d).map(|k| a[i][k] * b[k][j]).sum()).collect())
        .collect()
}

fn apply(a: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

fn eye(n: usize) -> Matrix {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { Complex64::new(1.0, 0.0) } else { zero() }).collect())
        .collect()
}

fn dense(op: &Operator) -> Matrix {
    (0..op.dim()).map(|i| (0..op.dim()).map(|j| op.get(i, j)).collect()).collect()
}

/// `op` on register `label` of `registers` registers, register 1 leftmost.
fn local(op: &Operator, label: usize, n: usize, registers: usize) -> Matrix {
    let mut m = vec![vec![Complex64::new(1.0, 0.0)]];
    for r in 1..=registers {
        m = kron(&m, &if r == label { dense(op) } else { eye(n) });
    }
    m
}

/// Shift built from digit tuples: walker `x` becomes `x + c` where `c` is the coin digit.
fn shift(coin: usize, n: usize, registers: usize) -> Matrix {
    let dim = n.pow(registers as u32);
    let digits = |mut idx: usize| {
        let mut d = vec![0; registers];
        for r in (0..registers).rev() {
            d[r] = idx % n;
            idx /= n;
        }
        d
    };
    let index = |d: &[usize]| d.iter().fold(0, |acc, &x| acc * n + x);
    let mut m = vec![vec![zero(); dim]; dim];
    for col in 0..dim {
        let mut d = digits(col);
        d[0] = (d[0] + d[coin - 1]) % n;
        m[index(&d)][col] = Complex64::new(1.0, 0.0);
    }
    m
}

/// `diag(phases) . F_n`, unitary for any phases.
fn phased_fourier(n: usize, phases: &[f64]) -> Operator {
    let s = 1.0 / (n as f64).sqrt();
    let data = (0..n * n)
        .map(|k| {
            let (i, j) = (k / n, k % n);
            Complex64::from_polar(s, phases[i] + 2.0 * PI * (i * j) as f64 / n as f64)
        })
        .collect();
    Operator::from_rows(n, data).unwrap()
}

fn normalized(raw: Vec<(f64, f64)>) -> Vec<Complex64> {
    let v: Vec<Complex64> = raw.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

fn arb_case() -> impl Strategy<Value = (usize, usize, Vec<Complex64>, Vec<(usize, Vec<f64>)>)> {
    prop_oneof![Just((2usize, 4usize)), Just((3, 3)), Just((2, 3))].prop_flat_map(|(n, registers)| {
        let dim = n.pow(registers as u32);
        let amps = proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), dim)
            .prop_filter("non-zero", |v| v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3))
            .prop_map(normalized);
        let step = (2..=registers, proptest::collection::vec(0.0f64..2.0 * PI, n));
        (Just(n), Just(registers), amps, proptest::collection::vec(step, 1..5))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolve_matches_dense_products((n, registers, amps, steps) in arb_case()) {
        let steps: Vec<WalkStep> = steps
            .into_iter()
            .map(|(coin, phases)| WalkStep { coin, operator: phased_fourier(n, &phases) })
            .collect();
        let mut total = eye(n.pow(registers as u32));
        for s in &steps {
            let u = matmul(&shift(s.coin, n, registers), &local(&s.operator, s.coin, n, registers));
            total = matmul(&u, &total);
        }
        let expected = apply(&total, &amps);
        let state = WalkState::new(n, registers, amps).unwrap();
        let program = WalkProgram::new(n, steps).unwrap();
        let trace = evolve_trace(&state, &program).unwrap();
        for s in &trace {
            prop_assert!((s.norm() - 1.0).abs() <= NORM_TOL);
        }
        let got = trace.last().unwrap().amplitudes();
        for (g, e) in got.iter().zip(&expected) {
            prop_assert!((g - e).norm() < 1e-12);
        }
    }

    #[test]
    fn identity_schedule_makes_ghz(ar in -1.0f64..1.0, ai in -1.0f64..1.0, br in -1.0f64..1.0, bi in -1.0f64..1.0) {
        let v = normalized(vec![(ar, ai), (br, bi)]);
        prop_assume!(v.iter().all(|z| z.norm().is_finite()));
        let (a, b) = (v[0], v[1]);
        let out = evolve(
            &WalkState::bell_pairs(a, b).unwrap(),
            &WalkProgram::identity_coins(2, &GHZ_SCHEDULE).unwrap(),
        )
        .unwrap();
        prop_assert!(ghz_fidelity(&out, &GHZ_PARTIES, a, b).unwrap() >= 1.0 - 1e-10);
        let target = ghz_product_state(&GHZ_PARTIES, GHZ_SPECTATOR, a, b).unwrap();
        for (x, y) in out.amplitudes().iter().zip(target.amplitudes()) {
            prop_assert!((x - y).norm() < 1e-12);
        }
    }
}

#[test]
fn shift_is_a_permutation_of_order_n() {
    for n in 2..6 {
        let s = shift_operator(n).unwrap();
        assert!(s.is_permutation());
        assert!(s.unitarity_defect() < 1e-15);
        let mut p = Operator::identity(n * n);
        for _ in 0..n {
            p = s.mul(&p);
        }
        assert_eq!(p, Operator::identity(n * n));
        assert_eq!(dense(&s), shift(2, n, 2));
    }
}

#[test]
fn product_state_has_low_fidelity_without_walk() {
    let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let initial = WalkState::bell_pairs(h, h).unwrap();
    let f = ghz_fidelity(&initial, &GHZ_PARTIES, h, h).unwrap();
    assert!(f < 0.9, "{f}");
}
