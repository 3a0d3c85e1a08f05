//! Dense state-vector simulation of the multi-coin discrete-time quantum walk
//! on a complete graph.
//!
//! The register layout is `|position> (x) |coin_1> (x) ... (x) |coin_m>`, every
//! register of dimension `n` (the size of the complete graph), with register 1
//! (the walker) most significant. Registers are labelled from 1, so for the
//! two-Bell-pair setup the walker is qubit 1 and the coins are qubits 2, 3, 4.
//!
//! One step with coin register `c` applies the coin operator to `c` and then
//! the complete-graph shift `|x>|i> -> |(x + i) mod n>|i>` between the walker
//! and `c`. For `n = 2` that shift is a CNOT controlled by the coin.
//!
//! With identity coins, the schedule [`GHZ_SCHEDULE`] (coin 2, then coin 3)
//! turns `(a|00> + b|11>)_12 (a|00> + b|11>)_34` into
//! `(a|000> + b|111>)_134 (a|0> + b|1>)_2`: the first step disentangles the
//! walker from qubit 2, the second copies qubit 3 onto it.

use num_complex::Complex64;
use thiserror::Error;

pub const NORM_TOL: f64 = 1e-12;

/// Coin schedule that fuses two Bell pairs into a GHZ triple.
pub const GHZ_SCHEDULE: [usize; 2] = [2, 3];
/// Registers holding the GHZ triple after [`GHZ_SCHEDULE`].
pub const GHZ_PARTIES: [usize; 3] = [1, 3, 4];
/// Register left in the single-qubit state `a|0> + b|1>`.
pub const GHZ_SPECTATOR: usize = 2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WalkError {
    #[error("complete graph needs n >= 2, got {0}")]
    TooSmall(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("coin register {0} does not exist")]
    InvalidCoin(usize),
    #[error("operator is not unitary (deviation {0:e})")]
    NotUnitary(f64),
    #[error("state norm {0} differs from 1")]
    NotNormalized(f64),
    #[error("invalid party list {0:?}")]
    InvalidParties(Vec<usize>),
    #[error("|a|^2 + |b|^2 = {0}, expected 1")]
    BadAmplitudes(f64),
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<Complex64>,
}

impl Operator {
    pub fn from_rows(dim: usize, data: Vec<Complex64>) -> Result<Self, WalkError> {
        if data.len() != dim * dim {
            return Err(WalkError::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} operator",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Complex64::new(1.0, 0.0);
        }
        Self { dim, data }
    }

    /// Hadamard coin on a qubit.
    pub fn hadamard() -> Self {
        let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        Self {
            dim: 2,
            data: vec![h, h, h, -h],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.dim + col]
    }

    pub fn mul(&self, rhs: &Operator) -> Operator {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for k in 0..d {
                let a = self.data[i * d + k];
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    data[i * d + j] += a * rhs.data[k * d + j];
                }
            }
        }
        Operator { dim: d, data }
    }

    pub fn adjoint(&self) -> Operator {
        let d = self.dim;
        let mut data = vec![Complex64::new(0.0, 0.0); d * d];
        for i in 0..d {
            for j in 0..d {
                data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        Operator { dim: d, data }
    }

    /// Largest entry of `|U^dagger U - I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let p = self.adjoint().mul(self);
        let id = Operator::identity(self.dim);
        p.data
            .iter()
            .zip(&id.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn is_permutation(&self) -> bool {
        let d = self.dim;
        let one = |z: Complex64| z == Complex64::new(1.0, 0.0);
        let zero = |z: Complex64| z == Complex64::new(0.0, 0.0);
        let row_ok = (0..d).all(|i| {
            let row = &self.data[i * d..(i + 1) * d];
            row.iter().filter(|&&z| one(z)).count() == 1 && row.iter().all(|&z| one(z) || zero(z))
        });
        let col_ok = (0..d).all(|j| (0..d).filter(|&i| one(self.data[i * d + j])).count() == 1);
        row_ok && col_ok
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.data[i * self.dim + j] * v[j]).sum())
            .collect()
    }
}

/// Complete-graph shift `sum_{x,i} |(x+i) mod n><x| (x) |i><i|` on the
/// position (major) and coin (minor) registers.
pub fn shift_operator(n: usize) -> Result<Operator, WalkError> {
    if n < 2 {
        return Err(WalkError::TooSmall(n));
    }
    let d = n * n;
    let mut data = vec![Complex64::new(0.0, 0.0); d * d];
    for x in 0..n {
        for i in 0..n {
            let row = ((x + i) % n) * n + i;
            let col = x * n + i;
            data[row * d + col] = Complex64::new(1.0, 0.0);
        }
    }
    Ok(Operator { dim: d, data })
}

/// Amplitudes over `registers` registers of dimension `n` each.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkState {
    n: usize,
    registers: usize,
    amplitudes: Vec<Complex64>,
}

impl WalkState {
    pub fn new(n: usize, registers: usize, amplitudes: Vec<Complex64>) -> Result<Self, WalkError> {
        if n < 2 {
            return Err(WalkError::TooSmall(n));
        }
        if registers < 2 {
            return Err(WalkError::DimensionMismatch("need a walker and at least one coin".into()));
        }
        let len = n.pow(registers as u32);
        if amplitudes.len() != len {
            return Err(WalkError::DimensionMismatch(format!(
                "{} amplitudes, expected {len}",
                amplitudes.len()
            )));
        }
        let s = Self {
            n,
            registers,
            amplitudes,
        };
        let norm = s.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(WalkError::NotNormalized(norm));
        }
        Ok(s)
    }

    /// `(a|00> + b|11>)_12 (x) (a|00> + b|11>)_34` on four qubits, normalized.
    pub fn bell_pairs(a: Complex64, b: Complex64) -> Result<Self, WalkError> {
        let norm = (a.norm_sqr() + b.norm_sqr()).sqrt();
        if norm == 0.0 {
            return Err(WalkError::BadAmplitudes(0.0));
        }
        let (a, b) = (a / norm, b / norm);
        let pair = [a, Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0), b];
        let amps = (0..16).map(|idx| pair[idx >> 2] * pair[idx & 3]).collect();
        Self::new(2, 4, amps)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn registers(&self) -> usize {
        self.registers
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Stride of register `label` (1-based, register 1 most significant).
    fn stride(&self, label: usize) -> usize {
        self.n.pow((self.registers - label) as u32)
    }

    fn digit(&self, idx: usize, label: usize) -> usize {
        (idx / self.stride(label)) % self.n
    }

    fn apply_local(&mut self, label: usize, op: &Operator) {
        let n = self.n;
        let stride = self.stride(label);
        let mut out = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let d = (idx / stride) % n;
            let base = idx - d * stride;
            for r in 0..n {
                out[base + r * stride] += op.get(r, d) * amp;
            }
        }
        self.amplitudes = out;
    }

    fn apply_shift(&mut self, coin: usize) {
        let n = self.n;
        let wstride = self.stride(1);
        let mut out = vec![Complex64::new(0.0, 0.0); self.amplitudes.len()];
        for (idx, &amp) in self.amplitudes.iter().enumerate() {
            let x = self.digit(idx, 1);
            let i = self.digit(idx, coin);
            let moved = idx - x * wstride + ((x + i) % n) * wstride;
            out[moved] = amp;
        }
        self.amplitudes = out;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkStep {
    /// Coin register label, 2..=registers.
    pub coin: usize,
    pub operator: Operator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkProgram {
    n: usize,
    steps: Vec<WalkStep>,
}

impl WalkProgram {
    pub fn new(n: usize, steps: Vec<WalkStep>) -> Result<Self, WalkError> {
        if n < 2 {
            return Err(WalkError::TooSmall(n));
        }
        for s in &steps {
            if s.operator.dim() != n {
                return Err(WalkError::DimensionMismatch(format!(
                    "coin operator of dimension {} on a {n}-complete walk",
                    s.operator.dim()
                )));
            }
            let defect = s.operator.unitarity_defect();
            if defect > NORM_TOL {
                return Err(WalkError::NotUnitary(defect));
            }
            if s.coin < 2 {
                return Err(WalkError::InvalidCoin(s.coin));
            }
        }
        Ok(Self { n, steps })
    }

    /// Identity coins on the given registers, in order.
    pub fn identity_coins(n: usize, coins: &[usize]) -> Result<Self, WalkError> {
        let steps = coins
            .iter()
            .map(|&coin| WalkStep {
                coin,
                operator: Operator::identity(n),
            })
            .collect();
        Self::new(n, steps)
    }

    pub fn steps(&self) -> &[WalkStep] {
        &self.steps
    }
}

/// State after every step: element 0 is the initial state.
pub fn evolve_trace(initial: &WalkState, program: &WalkProgram) -> Result<Vec<WalkState>, WalkError> {
    if initial.n != program.n {
        return Err(WalkError::DimensionMismatch(format!(
            "state registers of dimension {}, program on {}-complete graph",
            initial.n, program.n
        )));
    }
    let mut trace = Vec::with_capacity(program.steps.len() + 1);
    let mut state = initial.clone();
    trace.push(state.clone());
    for step in &program.steps {
        if step.coin > state.registers {
            return Err(WalkError::InvalidCoin(step.coin));
        }
        state.apply_local(step.coin, &step.operator);
        state.apply_shift(step.coin);
        let norm = state.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(WalkError::NotNormalized(norm));
        }
        trace.push(state.clone());
    }
    Ok(trace)
}

/// Applies `U_k ... U_1` to `initial`.
pub fn evolve(initial: &WalkState, program: &WalkProgram) -> Result<WalkState, WalkError> {
    Ok(evolve_trace(initial, program)?.pop().expect("trace holds the initial state"))
}

/// Overlap `|<target|psi>|^2` of the party registers with `a|0..0> + b|1..1>`,
/// after projecting every other register onto `a|0> + b|1>` and
/// renormalizing. Qubit registers only. Returns 0 when the projection
/// annihilates the state.
pub fn ghz_fidelity(state: &WalkState, parties: &[usize], a: Complex64, b: Complex64) -> Result<f64, WalkError> {
    let weight = a.norm_sqr() + b.norm_sqr();
    if (weight - 1.0).abs() > NORM_TOL {
        return Err(WalkError::BadAmplitudes(weight));
    }
    if state.n != 2 {
        return Err(WalkError::DimensionMismatch("GHZ fidelity is defined on qubit registers".into()));
    }
    let mut sorted = parties.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != parties.len()
        || parties.is_empty()
        || parties.iter().any(|&p| p == 0 || p > state.registers)
    {
        return Err(WalkError::InvalidParties(parties.to_vec()));
    }
    let spectators: Vec<usize> = (1..=state.registers).filter(|r| !parties.contains(r)).collect();
    let single = [a, b];

    let mut reduced = vec![Complex64::new(0.0, 0.0); 1 << parties.len()];
    for (idx, &amp) in state.amplitudes.iter().enumerate() {
        let weight: Complex64 = spectators
            .iter()
            .map(|&s| single[state.digit(idx, s)].conj())
            .product();
        let key = parties
            .iter()
            .fold(0usize, |acc, &p| (acc << 1) | state.digit(idx, p));
        reduced[key] += weight * amp;
    }
    let norm = reduced.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if norm < 1e-300 {
        return Ok(0.0);
    }
    let overlap = a.conj() * reduced[0] + b.conj() * reduced[reduced.len() - 1];
    Ok((overlap.norm_sqr() / (norm * norm)).clamp(0.0, 1.0))
}

/// A coin schedule that produces a GHZ triple.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GhzSchedule {
    pub coins: Vec<usize>,
    pub parties: [usize; 3],
    pub spectator: usize,
}

/// Searches identity-coin schedules over distinct coins {2, 3, 4} (two steps,
/// then three) for one that yields fidelity >= `1 - tol` on some triple
/// containing the walker, with the remaining qubit as spectator.
pub fn find_ghz_schedule(a: Complex64, b: Complex64, tol: f64) -> Result<Option<GhzSchedule>, WalkError> {
    let initial = WalkState::bell_pairs(a, b)?;
    let coins = [2usize, 3, 4];
    let mut schedules: Vec<Vec<usize>> = Vec::new();
    for &c1 in &coins {
        for &c2 in coins.iter().filter(|&&c| c != c1) {
            schedules.push(vec![c1, c2]);
        }
    }
    for &c1 in &coins {
        for &c2 in coins.iter().filter(|&&c| c != c1) {
            for &c3 in coins.iter().filter(|&&c| c != c1 && c != c2) {
                schedules.push(vec![c1, c2, c3]);
            }
        }
    }
    for sched in schedules {
        let out = evolve(&initial, &WalkProgram::identity_coins(2, &sched)?)?;
        for spectator in 2..=4 {
            let parties: Vec<usize> = (1..=4).filter(|&r| r != spectator).collect();
            if ghz_fidelity(&out, &parties, a, b)? >= 1.0 - tol && product_spectator(&out, spectator, a, b)? {
                return Ok(Some(GhzSchedule {
                    coins: sched,
                    parties: [parties[0], parties[1], parties[2]],
                    spectator,
                }));
            }
        }
    }
    Ok(None)
}

/// Full-state check: `state == (a|000> + b|111>)_parties (x) (a|0> + b|1>)_spectator`.
fn product_spectator(state: &WalkState, spectator: usize, a: Complex64, b: Complex64) -> Result<bool, WalkError> {
    let parties: Vec<usize> = (1..=state.registers).filter(|&r| r != spectator).collect();
    let expected = ghz_product_state(&parties, spectator, a, b)?;
    let overlap: Complex64 = expected
        .amplitudes
        .iter()
        .zip(&state.amplitudes)
        .map(|(e, s)| e.conj() * s)
        .sum();
    Ok(overlap.norm_sqr() >= 1.0 - 1e-10)
}

/// `(a|000> + b|111>)` on `parties` times `(a|0> + b|1>)` on `spectator`, four qubits.
pub fn ghz_product_state(parties: &[usize], spectator: usize, a: Complex64, b: Complex64) -> Result<WalkState, WalkError> {
    if parties.len() != 3 || parties.contains(&spectator) || !(1..=4).contains(&spectator) {
        return Err(WalkError::InvalidParties(parties.to_vec()));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 16];
    for (ghz_bit, ghz_amp) in [(0usize, a), (1, b)] {
        for (spec_bit, spec_amp) in [(0usize, a), (1, b)] {
            let mut idx = 0;
            for r in 1..=4 {
                let bit = if r == spectator { spec_bit } else { ghz_bit };
                idx |= bit << (4 - r);
            }
            amps[idx] += ghz_amp * spec_amp;
        }
    }
    WalkState::new(2, 4, amps)
}
