//! Bipartite correlation Bell inequalities and their bounds.
//!
//! An inequality is stored as coefficient tables over correlators
//! `<A_x B_y>` plus optional single-party marginals. Two builders are
//! provided: CHSH and a family of tilted inequalities tailored to partially
//! entangled pairs `cos(theta)|00> + sin(theta)|11>`, normalized so the
//! quantum bound is 1.
//!
//! Bounds come in two flavors that this module keeps deliberately separate:
//! a *configured* local bound (what a certificate is computed against) and
//! the *deterministic optimum* obtained by brute force over all local
//! strategies. For CHSH they coincide at 2; for the tilted family the
//! shipped default configuration and the brute-force value of the
//! implemented form differ, and reports must surface both rather than
//! silently picking one.

use crate::error::{Error, Result};
use crate::qcore::{cr, expectation, CMatrix, Observable, Register, State};
use nalgebra::{Matrix3, Vector3};

/// sigma_x as a dense complex matrix.
pub fn sigma_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(1.0), cr(0.0)])
}
/// sigma_y as a dense complex matrix.
pub fn sigma_y() -> CMatrix {
    use crate::qcore::C64;
    CMatrix::from_row_slice(
        2,
        2,
        &[cr(0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), cr(0.0)],
    )
}
/// sigma_z as a dense complex matrix.
pub fn sigma_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)])
}

/// Single-qubit observable from a dense matrix.
pub fn qubit_observable(m: CMatrix) -> Result<Observable> {
    Observable::new(Register::new(vec![2])?, m)
}

/// Observable `n . sigma` for a real unit vector.
pub fn direction_observable(n: Vector3<f64>) -> Result<Observable> {
    let m = sigma_x() * cr(n.x) + sigma_y() * cr(n.y) + sigma_z() * cr(n.z);
    qubit_observable(m)
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub enum Family {
    Chsh,
    /// Tilted inequality for `cos(theta)|00> + sin(theta)|11>`; theta in radians.
    Tilted { theta: f64 },
    Custom,
}

#[derive(Debug, Clone)]
pub struct BellInequality {
    family: Family,
    id: String,
    settings_a: usize,
    settings_b: usize,
    /// Correlator coefficients `c[x][y]`.
    correlators: Vec<Vec<f64>>,
    marginals_a: Vec<f64>,
    marginals_b: Vec<f64>,
    beta_local: f64,
    beta_quantum: f64,
}

/// Configured vs brute-force local bound, for reporting.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LocalBoundReport {
    pub configured: f64,
    pub brute_force: f64,
    /// True when the two differ by more than 1e-6.
    pub distinct: bool,
    /// Set when the configured bound exceeds what deterministic strategies
    /// can reach, i.e. the configuration is stricter than the inequality.
    pub configured_above_brute_force: bool,
}

impl BellInequality {
    /// CHSH: `<A0B0> + <A0B1> + <A1B0> - <A1B1>`, local bound 2, quantum
    /// bound 2*sqrt(2).
    pub fn chsh() -> Self {
        BellInequality {
            family: Family::Chsh,
            id: "chsh".into(),
            settings_a: 2,
            settings_b: 2,
            correlators: vec![vec![1.0, 1.0], vec![1.0, -1.0]],
            marginals_a: vec![0.0, 0.0],
            marginals_b: vec![0.0, 0.0],
            beta_local: 2.0,
            beta_quantum: 2.0 * 2.0_f64.sqrt(),
        }
    }

    /// Tilted inequality
    /// `(1/4) [ <A0(B0-B1)>/sin(b) + (sin(2theta)/cos(b)) <A1(B0+B1)>
    ///          + cos(2theta) (<A0> + <B0-B1>/(2 sin(b))) ]`
    /// with `b = b_theta(theta)`. Quantum bound 1 (attained by the tilted
    /// pair, see [`default_observables`]). The configured local bound is the
    /// closed-form deterministic optimum of this expression except at
    /// theta = 15 degrees, where the conventional 0.952 is preloaded; see
    /// [`BellInequality::local_bound_report`] for the distinction.
    pub fn tilted(theta: f64) -> Result<Self> {
        let configured = if (theta - 15.0_f64.to_radians()).abs() < 1e-9 {
            0.952
        } else {
            tilted_deterministic_bound(theta)
        };
        Self::tilted_with_local_bound(theta, configured)
    }

    /// Tilted inequality with an explicitly configured local bound.
    pub fn tilted_with_local_bound(theta: f64, beta_local: f64) -> Result<Self> {
        if !(theta > 0.0 && theta <= std::f64::consts::FRAC_PI_4) {
            return Err(Error::InvalidInequality(format!(
                "tilted angle must lie in (0, pi/4], got {theta}"
            )));
        }
        let b = b_theta(theta);
        let (sb, cb) = (b.sin(), b.cos());
        let s2t = (2.0 * theta).sin();
        let c2t = (2.0 * theta).cos();
        Ok(BellInequality {
            family: Family::Tilted { theta },
            id: format!("tilted(theta={:.6}rad)", theta),
            settings_a: 2,
            settings_b: 2,
            correlators: vec![
                vec![1.0 / (4.0 * sb), -1.0 / (4.0 * sb)],
                vec![s2t / (4.0 * cb), s2t / (4.0 * cb)],
            ],
            marginals_a: vec![c2t / 4.0, 0.0],
            marginals_b: vec![c2t / (8.0 * sb), -c2t / (8.0 * sb)],
            beta_local,
            beta_quantum: 1.0,
        })
    }

    /// Fully custom inequality.
    pub fn custom(
        id: String,
        correlators: Vec<Vec<f64>>,
        marginals_a: Vec<f64>,
        marginals_b: Vec<f64>,
        beta_local: f64,
        beta_quantum: f64,
    ) -> Result<Self> {
        let sa = correlators.len();
        if sa == 0 || correlators[0].is_empty() {
            return Err(Error::InvalidInequality("empty coefficient table".into()));
        }
        let sb = correlators[0].len();
        if correlators.iter().any(|row| row.len() != sb) {
            return Err(Error::InvalidInequality("ragged coefficient table".into()));
        }
        if marginals_a.len() != sa || marginals_b.len() != sb {
            return Err(Error::InvalidInequality("marginal length mismatch".into()));
        }
        if beta_quantum <= beta_local {
            return Err(Error::InvalidInequality(
                "quantum bound must exceed the local bound".into(),
            ));
        }
        Ok(BellInequality {
            family: Family::Custom,
            id,
            settings_a: sa,
            settings_b: sb,
            correlators,
            marginals_a,
            marginals_b,
            beta_local,
            beta_quantum,
        })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }
    pub fn id(&self) -> &str {
        &self.id
    }
    pub fn settings(&self) -> (usize, usize) {
        (self.settings_a, self.settings_b)
    }
    pub fn correlator_coefficient(&self, x: usize, y: usize) -> f64 {
        self.correlators[x][y]
    }
    pub fn marginal_a(&self, x: usize) -> f64 {
        self.marginals_a[x]
    }
    pub fn marginal_b(&self, y: usize) -> f64 {
        self.marginals_b[y]
    }
    pub fn local_bound(&self) -> f64 {
        self.beta_local
    }
    pub fn quantum_bound(&self) -> f64 {
        self.beta_quantum
    }

    /// Score on a bipartite state: sum of weighted correlators and marginals.
    pub fn score(&self, state: &State, obs: &ObservablePair) -> Result<f64> {
        let reg = state.register();
        if reg.n_parties() != 2 {
            return Err(Error::RegisterMismatch(format!(
                "bell score needs a bipartite state, got {} parties",
                reg.n_parties()
            )));
        }
        if obs.a.len() != self.settings_a || obs.b.len() != self.settings_b {
            return Err(Error::InvalidObservable(format!(
                "observable counts ({}, {}) do not match inequality settings ({}, {})",
                obs.a.len(),
                obs.b.len(),
                self.settings_a,
                self.settings_b
            )));
        }
        let ia = Observable::identity(reg.subset(&[0])?);
        let ib = Observable::identity(reg.subset(&[1])?);
        let mut total = 0.0;
        for (x, ax) in obs.a.iter().enumerate() {
            for (y, by) in obs.b.iter().enumerate() {
                let cxy = self.correlators[x][y];
                if cxy != 0.0 {
                    total += cxy * expectation(state, &ax.tensor(by))?;
                }
            }
        }
        for (x, ax) in obs.a.iter().enumerate() {
            if self.marginals_a[x] != 0.0 {
                total += self.marginals_a[x] * expectation(state, &ax.tensor(&ib))?;
            }
        }
        for (y, by) in obs.b.iter().enumerate() {
            if self.marginals_b[y] != 0.0 {
                total += self.marginals_b[y] * expectation(state, &ia.tensor(by))?;
            }
        }
        Ok(total)
    }

    /// Score a table of measured correlators/marginals instead of a state.
    pub fn score_correlators(
        &self,
        correlators: &[Vec<f64>],
        marg_a: &[f64],
        marg_b: &[f64],
    ) -> f64 {
        let mut total = 0.0;
        for x in 0..self.settings_a {
            for y in 0..self.settings_b {
                total += self.correlators[x][y] * correlators[x][y];
            }
            total += self.marginals_a[x] * marg_a[x];
        }
        for y in 0..self.settings_b {
            total += self.marginals_b[y] * marg_b[y];
        }
        total
    }

    /// Exact maximum over deterministic local strategies (all `2^(sa+sb)`
    /// sign assignments). This is the true local-hidden-variable bound of
    /// the stored coefficient table.
    pub fn local_bound_bruteforce(&self) -> f64 {
        let (sa, sb) = (self.settings_a, self.settings_b);
        let mut best = f64::NEG_INFINITY;
        for mask in 0u32..(1 << (sa + sb)) {
            let a: Vec<f64> =
                (0..sa).map(|x| if mask >> x & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let b: Vec<f64> =
                (0..sb).map(|y| if mask >> (sa + y) & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let mut v = 0.0;
            for x in 0..sa {
                for y in 0..sb {
                    v += self.correlators[x][y] * a[x] * b[y];
                }
                v += self.marginals_a[x] * a[x];
            }
            for y in 0..sb {
                v += self.marginals_b[y] * b[y];
            }
            best = best.max(v);
        }
        best
    }

    /// Optimal deterministic sign assignment `(a, b)` attaining
    /// [`Self::local_bound_bruteforce`].
    pub fn best_deterministic_assignment(&self) -> (Vec<f64>, Vec<f64>) {
        let (sa, sb) = (self.settings_a, self.settings_b);
        let mut best = f64::NEG_INFINITY;
        let mut arg = (vec![1.0; sa], vec![1.0; sb]);
        for mask in 0u32..(1 << (sa + sb)) {
            let a: Vec<f64> =
                (0..sa).map(|x| if mask >> x & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let b: Vec<f64> =
                (0..sb).map(|y| if mask >> (sa + y) & 1 == 1 { 1.0 } else { -1.0 }).collect();
            let mut v = 0.0;
            for x in 0..sa {
                for y in 0..sb {
                    v += self.correlators[x][y] * a[x] * b[y];
                }
                v += self.marginals_a[x] * a[x];
            }
            for y in 0..sb {
                v += self.marginals_b[y] * b[y];
            }
            if v > best {
                best = v;
                arg = (a, b);
            }
        }
        arg
    }

    /// Configured vs brute-force local bound side by side.
    pub fn local_bound_report(&self) -> LocalBoundReport {
        let brute = self.local_bound_bruteforce();
        LocalBoundReport {
            configured: self.beta_local,
            brute_force: brute,
            distinct: (brute - self.beta_local).abs() > 1e-6,
            configured_above_brute_force: self.beta_local > brute + 1e-9,
        }
    }
}

/// The tilted-inequality measurement angle
/// `b_theta = arctan sqrt( (1 + cos^2(2 theta)/2) / sin^2(2 theta) )`.
pub fn b_theta(theta: f64) -> f64 {
    let c2t = (2.0 * theta).cos();
    let s2t = (2.0 * theta).sin();
    ((1.0 + 0.5 * c2t * c2t) / (s2t * s2t)).sqrt().atan()
}

/// Closed-form deterministic optimum of the tilted expression (equals the
/// brute-force bound for every theta; kept as an independent formula).
pub fn tilted_deterministic_bound(theta: f64) -> f64 {
    let c2t = (2.0 * theta).cos();
    let c4t = (4.0 * theta).cos();
    0.25 * (c2t + (2.0 + c2t) * ((7.0 - c4t) / (5.0 + c4t)).sqrt())
}

// ---------------------------------------------------------------------------
// Observable assignments

/// One observable per setting and side. Each must be Hermitian with
/// eigenvalues in `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct ObservablePair {
    pub a: Vec<Observable>,
    pub b: Vec<Observable>,
}

impl ObservablePair {
    pub fn new(a: Vec<Observable>, b: Vec<Observable>) -> Result<Self> {
        for obs in a.iter().chain(b.iter()) {
            let bad = obs.eigenvalues().into_iter().any(|x| x.abs() > 1.0 + 1e-10);
            if bad {
                return Err(Error::InvalidObservable(
                    "observable eigenvalues must lie in [-1, 1]".into(),
                ));
            }
        }
        Ok(ObservablePair { a, b })
    }

    /// Both sides fixed to +1 (the trivial deterministic strategy).
    pub fn deterministic_identity(sa: usize, sb: usize, dim_a: usize, dim_b: usize) -> Result<Self> {
        let ra = Register::new(vec![dim_a])?;
        let rb = Register::new(vec![dim_b])?;
        Ok(ObservablePair {
            a: (0..sa).map(|_| Observable::identity(ra.clone())).collect(),
            b: (0..sb).map(|_| Observable::identity(rb.clone())).collect(),
        })
    }

    /// Deterministic strategy with the given local signs (`+-1` per setting).
    pub fn deterministic_signs(a: &[f64], b: &[f64], dim_a: usize, dim_b: usize) -> Result<Self> {
        let ra = Register::new(vec![dim_a])?;
        let rb = Register::new(vec![dim_b])?;
        let mk = |reg: &Register, s: f64| {
            let d = reg.total_dim();
            Observable::new(reg.clone(), CMatrix::identity(d, d) * cr(s))
        };
        Ok(ObservablePair {
            a: a.iter().map(|&s| mk(&ra, s)).collect::<Result<_>>()?,
            b: b.iter().map(|&s| mk(&rb, s)).collect::<Result<_>>()?,
        })
    }
}

/// Outcome-parity relabel carried by a branch: `Even` keeps the reference
/// observables, `Odd` conjugates one side by sigma_z.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum BranchParity {
    Even,
    Odd,
}

/// Reference qubit observables for the built-in families.
///
/// CHSH, even parity (`S_+`, for `(|00>+|11>)/sqrt2`):
/// `A = (sigma_z, sigma_x)`, `B = ((sigma_z+sigma_x)/sqrt2, (sigma_z-sigma_x)/sqrt2)`.
/// Odd parity conjugates the A side by sigma_z (flips A1), matching
/// `(|00>-|11>)/sqrt2`.
///
/// Tilted, even parity (for `cos t|00> + sin t|11>`): `A = (sigma_z, sigma_x)`,
/// `B = (cos(b) sigma_x + sin(b) sigma_z, cos(b) sigma_x - sin(b) sigma_z)`.
/// Odd parity conjugates the B side by sigma_z (flips the sigma_x component),
/// matching `cos t|00> - sin t|11>`.
pub fn default_observables(ineq: &BellInequality, parity: BranchParity) -> Result<ObservablePair> {
    let s = 1.0 / 2.0_f64.sqrt();
    match ineq.family {
        Family::Chsh => {
            let a1_sign = if parity == BranchParity::Even { 1.0 } else { -1.0 };
            ObservablePair::new(
                vec![qubit_observable(sigma_z())?, qubit_observable(sigma_x() * cr(a1_sign))?],
                vec![
                    qubit_observable((sigma_z() + sigma_x()) * cr(s))?,
                    qubit_observable((sigma_z() - sigma_x()) * cr(s))?,
                ],
            )
        }
        Family::Tilted { theta } => {
            let b = b_theta(theta);
            let x_sign = if parity == BranchParity::Even { 1.0 } else { -1.0 };
            let bx = sigma_x() * cr(x_sign * b.cos());
            let bz = sigma_z() * cr(b.sin());
            ObservablePair::new(
                vec![qubit_observable(sigma_z())?, qubit_observable(sigma_x())?],
                vec![qubit_observable(&bx + &bz)?, qubit_observable(&bx - &bz)?],
            )
        }
        Family::Custom => Err(Error::InvalidInequality(
            "no default observables for a custom inequality".into(),
        )),
    }
}

// ---------------------------------------------------------------------------
// Horodecki criterion for CHSH on two qubits

/// Result of the two-qubit CHSH criterion. `criterion` is
/// `2 sqrt(t1 + t2)` for the two largest eigenvalues of `T^T T`;
/// `achievable` floors it at 2, which any deterministic strategy reaches.
#[derive(Debug, Clone, Copy)]
pub struct ChshOptimum {
    pub criterion: f64,
    pub achievable: f64,
}

/// Correlation matrix `T_ij = <sigma_i (x) sigma_j>` of a two-qubit state.
pub fn correlation_matrix(state: &State) -> Result<Matrix3<f64>> {
    let reg = state.register();
    if reg.dims() != [2, 2] {
        return Err(Error::RegisterMismatch("correlation matrix needs two qubits".into()));
    }
    let paulis = [sigma_x(), sigma_y(), sigma_z()];
    let mut t = Matrix3::zeros();
    for (i, si) in paulis.iter().enumerate() {
        for (j, sj) in paulis.iter().enumerate() {
            let obs = Observable::new(reg.clone(), si.kronecker(sj))?;
            t[(i, j)] = expectation(state, &obs)?;
        }
    }
    Ok(t)
}

/// Maximal CHSH value of a two-qubit state over dichotomic observables.
pub fn optimal_chsh(state: &State) -> Result<ChshOptimum> {
    let t = correlation_matrix(state)?;
    let m = t.transpose() * t;
    let mut ev: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().cloned().collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let criterion = 2.0 * (ev[0] + ev[1]).max(0.0).sqrt();
    Ok(ChshOptimum { criterion, achievable: criterion.max(2.0) })
}

/// Explicit observables attaining the CHSH criterion value of a state
/// (singular-vector construction). Degenerate correlation matrices fall back
/// to the trivial deterministic strategy.
pub fn chsh_observables_for(state: &State) -> Result<ObservablePair> {
    let t = correlation_matrix(state)?;
    let svd = t.svd(true, true);
    let s1 = svd.singular_values[0];
    let s2 = svd.singular_values[1];
    if s1 < 1e-12 {
        return ObservablePair::deterministic_identity(2, 2, 2, 2);
    }
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let a0: Vector3<f64> = u.column(0).into();
    let a1: Vector3<f64> = u.column(1).into();
    let v1: Vector3<f64> = vt.row(0).transpose();
    let v2: Vector3<f64> = vt.row(1).transpose();
    let phi = s2.atan2(s1);
    let b0 = (v1 * phi.cos() + v2 * phi.sin()).normalize();
    let b1 = (v1 * phi.cos() - v2 * phi.sin()).normalize();
    ObservablePair::new(
        vec![direction_observable(a0)?, direction_observable(a1)?],
        vec![direction_observable(b0)?, direction_observable(b1)?],
    )
}

// ---------------------------------------------------------------------------
