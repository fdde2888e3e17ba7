//! Dense state algebra for small multi-party registers.
//!
//! Parties are indexed from 0 and party 0 is the most significant digit of
//! the flattened mixed-radix index: for dims `[d0, d1, ..]` the basis state
//! `|a0 a1 ..>` sits at `a0*d1*d2*.. + a1*d2*.. + ..`. Tensor products keep
//! the left factor most significant, so `a.tensor(&b)` matches `|a>|b>`.
//!
//! Construction validates everything once (normalization, Hermiticity,
//! positivity) so downstream code can assume well-formed states. Projection
//! and mixing preserve positive semidefiniteness structurally (Gram-form
//! accumulation) rather than relying on post-hoc clipping.

use crate::error::{Error, Result};
use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Cap on the total dimension of a pure-state register.
pub const MAX_PURE_DIM: usize = 4096;
/// Cap on the total dimension of a density-matrix register.
pub const MAX_MIXED_DIM: usize = 1024;
/// Construction-time tolerance (normalization, Hermiticity, orthonormality).
pub const TOL_CONSTRUCT: f64 = 1e-12;
/// Eigenvalue floor for positivity checks.
pub const TOL_PSD: f64 = -1e-10;
/// Outcomes below this probability are kept but flagged as zero-probability.
pub const ZERO_PROB: f64 = 1e-9;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}
pub(crate) fn cr(re: f64) -> C64 {
    C64::new(re, 0.0)
}

// ---------------------------------------------------------------------------
// Register

/// Ordered list of local dimensions, one per party.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Register {
    dims: Vec<usize>,
}

impl Register {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidRegister("no parties".into()));
        }
        if let Some(d) = dims.iter().find(|&&d| d < 2) {
            return Err(Error::InvalidRegister(format!("local dimension {d} < 2")));
        }
        Ok(Register { dims })
    }

    pub fn qubits(n: usize) -> Result<Self> {
        Register::new(vec![2; n])
    }

    pub fn n_parties(&self) -> usize {
        self.dims.len()
    }

    pub fn dim(&self, party: usize) -> usize {
        self.dims[party]
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    /// Stride of each party in the flattened index (party 0 most significant).
    pub fn strides(&self) -> Vec<usize> {
        let mut s = vec![1usize; self.dims.len()];
        for i in (0..self.dims.len().saturating_sub(1)).rev() {
            s[i] = s[i + 1] * self.dims[i + 1];
        }
        s
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        debug_assert_eq!(digits.len(), self.dims.len());
        let strides = self.strides();
        digits.iter().zip(&strides).map(|(d, s)| d * s).sum()
    }

    pub fn digits_of(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0usize; self.dims.len()];
        for i in (0..self.dims.len()).rev() {
            out[i] = index % self.dims[i];
            index /= self.dims[i];
        }
        out
    }

    pub fn tensor(&self, other: &Register) -> Register {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Register { dims }
    }

    /// Sub-register of the given parties, in the order listed.
    pub fn subset(&self, parties: &[usize]) -> Result<Register> {
        let mut dims = Vec::with_capacity(parties.len());
        for &p in parties {
            if p >= self.dims.len() {
                return Err(Error::PartyOutOfRange { party: p, n: self.dims.len() });
            }
            dims.push(self.dims[p]);
        }
        Register::new(dims)
    }

    fn check_party(&self, party: usize) -> Result<()> {
        if party >= self.dims.len() {
            return Err(Error::PartyOutOfRange { party, n: self.dims.len() });
        }
        Ok(())
    }
}

/// Iterate all digit tuples of a mixed-radix shape in lexicographic order.
pub(crate) fn mixed_radix_iter(dims: &[usize]) -> impl Iterator<Item = Vec<usize>> + '_ {
    let total: usize = dims.iter().product();
    (0..total).map(move |mut idx| {
        let mut out = vec![0usize; dims.len()];
        for i in (0..dims.len()).rev() {
            out[i] = idx % dims[i];
            idx /= dims[i];
        }
        out
    })
}

// ---------------------------------------------------------------------------
// Pure states

#[derive(Debug, Clone)]
pub struct PureState {
    register: Register,
    amplitudes: CVector,
}

impl PureState {
    pub fn new(register: Register, amplitudes: CVector) -> Result<Self> {
        let dim = register.total_dim();
        if dim > MAX_PURE_DIM {
            return Err(Error::DimensionCap { dim, cap: MAX_PURE_DIM, kind: "pure" });
        }
        if amplitudes.len() != dim {
            return Err(Error::InvalidState(format!(
                "amplitude vector has length {}, register dimension is {dim}",
                amplitudes.len()
            )));
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > TOL_CONSTRUCT {
            return Err(Error::InvalidState(format!("norm {norm} != 1")));
        }
        Ok(PureState { register, amplitudes })
    }

    /// `|digits>` computational basis state.
    pub fn basis_state(register: Register, digits: &[usize]) -> Result<Self> {
        if digits.len() != register.n_parties() {
            return Err(Error::InvalidState("digit count != party count".into()));
        }
        for (p, (&d, &dim)) in digits.iter().zip(register.dims()).enumerate() {
            if d >= dim {
                return Err(Error::InvalidState(format!("digit {d} out of range at party {p}")));
            }
        }
        let dim = register.total_dim();
        if dim > MAX_PURE_DIM {
            return Err(Error::DimensionCap { dim, cap: MAX_PURE_DIM, kind: "pure" });
        }
        let mut amp = CVector::zeros(dim);
        amp[register.index_of(digits)] = cr(1.0);
        Ok(PureState { register, amplitudes: amp })
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn tensor(&self, other: &PureState) -> Result<PureState> {
        let register = self.register.tensor(&other.register);
        let dim = register.total_dim();
        if dim > MAX_PURE_DIM {
            return Err(Error::DimensionCap { dim, cap: MAX_PURE_DIM, kind: "pure" });
        }
        let amplitudes = self.amplitudes.kronecker(&other.amplitudes);
        Ok(PureState { register, amplitudes: CVector::from_column_slice(amplitudes.as_slice()) })
    }

    pub fn overlap(&self, other: &PureState) -> Result<C64> {
        if self.register != other.register {
            return Err(Error::RegisterMismatch("overlap of different registers".into()));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn to_density(&self) -> Result<MixedState> {
        let dim = self.register.total_dim();
        if dim > MAX_MIXED_DIM {
            return Err(Error::DimensionCap { dim, cap: MAX_MIXED_DIM, kind: "mixed" });
        }
        let m = &self.amplitudes * self.amplitudes.adjoint();
        MixedState::new(self.register.clone(), m)
    }

    /// Reduced density matrix on `keep` (original order), tracing the rest.
    /// Built directly from the amplitudes, so the full projector is never
    /// formed and registers near the pure cap stay tractable.
    pub fn reduced(&self, keep: &[usize]) -> Result<MixedState> {
        let (keep_reg, keep_embed, rest_offsets) = trace_plan(&self.register, keep)?;
        let kd = keep_reg.total_dim();
        if kd > MAX_MIXED_DIM {
            return Err(Error::DimensionCap { dim: kd, cap: MAX_MIXED_DIM, kind: "mixed" });
        }
        let mut m = CMatrix::zeros(kd, kd);
        for a in 0..kd {
            for b in 0..kd {
                let mut acc = c(0.0, 0.0);
                for &off in &rest_offsets {
                    acc += self.amplitudes[keep_embed[a] + off]
                        * self.amplitudes[keep_embed[b] + off].conj();
                }
                m[(a, b)] = acc;
            }
        }
        MixedState::new(keep_reg, hermitize(m))
    }

    /// Reorder parties: new position `i` holds old party `perm[i]`.
    pub fn permute(&self, perm: &[usize]) -> Result<PureState> {
        let (new_reg, map) = permute_plan(&self.register, perm)?;
        let mut amp = CVector::zeros(self.amplitudes.len());
        for (new_idx, &old_idx) in map.iter().enumerate() {
            amp[new_idx] = self.amplitudes[old_idx];
        }
        Ok(PureState { register: new_reg, amplitudes: amp })
    }
}

// ---------------------------------------------------------------------------
// Mixed states

#[derive(Debug, Clone)]
pub struct MixedState {
    register: Register,
    matrix: CMatrix,
}

impl MixedState {
    pub fn new(register: Register, matrix: CMatrix) -> Result<Self> {
        let dim = register.total_dim();
        if dim > MAX_MIXED_DIM {
            return Err(Error::DimensionCap { dim, cap: MAX_MIXED_DIM, kind: "mixed" });
        }
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidState(format!(
                "matrix is {}x{}, register dimension is {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let herm_dev = hermiticity_deviation(&matrix);
        if herm_dev > TOL_CONSTRUCT {
            return Err(Error::InvalidState(format!("not Hermitian (deviation {herm_dev:.3e})")));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > TOL_CONSTRUCT || tr.im.abs() > TOL_CONSTRUCT {
            return Err(Error::InvalidState(format!("trace {} != 1", tr.re)));
        }
        let min_eig = hermitian_eigenvalues(&matrix).into_iter().fold(f64::INFINITY, f64::min);
        if min_eig < TOL_PSD {
            return Err(Error::InvalidState(format!("negative eigenvalue {min_eig:.3e}")));
        }
        Ok(MixedState { register, matrix })
    }

    pub fn maximally_mixed(register: Register) -> Result<Self> {
        let dim = register.total_dim();
        if dim > MAX_MIXED_DIM {
            return Err(Error::DimensionCap { dim, cap: MAX_MIXED_DIM, kind: "mixed" });
        }
        let m = CMatrix::identity(dim, dim) * cr(1.0 / dim as f64);
        Ok(MixedState { register, matrix: m })
    }

    /// Convex mixture. Weights must be nonnegative and sum to 1 within 1e-12.
    pub fn mixture(parts: &[(f64, MixedState)]) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::InvalidState("empty mixture".into()));
        }
        let wsum: f64 = parts.iter().map(|(w, _)| *w).sum();
        if (wsum - 1.0).abs() > TOL_CONSTRUCT || parts.iter().any(|(w, _)| *w < 0.0) {
            return Err(Error::InvalidState(format!("mixture weights sum to {wsum}")));
        }
        let reg = parts[0].1.register.clone();
        let dim = reg.total_dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (w, s) in parts {
            if s.register != reg {
                return Err(Error::RegisterMismatch("mixture of different registers".into()));
            }
            m += &s.matrix * cr(*w);
        }
        MixedState::new(reg, m)
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn tensor(&self, other: &MixedState) -> Result<MixedState> {
        let register = self.register.tensor(&other.register);
        let dim = register.total_dim();
        if dim > MAX_MIXED_DIM {
            return Err(Error::DimensionCap { dim, cap: MAX_MIXED_DIM, kind: "mixed" });
        }
        MixedState::new(register, self.matrix.kronecker(&other.matrix))
    }

    /// Partial trace keeping `keep` (original order).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<MixedState> {
        let (keep_reg, keep_embed, rest_offsets) = trace_plan(&self.register, keep)?;
        let kd = keep_reg.total_dim();
        let mut m = CMatrix::zeros(kd, kd);
        for a in 0..kd {
            for b in 0..kd {
                let mut acc = c(0.0, 0.0);
                for &off in &rest_offsets {
                    acc += self.matrix[(keep_embed[a] + off, keep_embed[b] + off)];
                }
                m[(a, b)] = acc;
            }
        }
        MixedState::new(keep_reg, hermitize(m))
    }

    pub fn permute(&self, perm: &[usize]) -> Result<MixedState> {
        let (new_reg, map) = permute_plan(&self.register, perm)?;
        let dim = self.matrix.nrows();
        let mut m = CMatrix::zeros(dim, dim);
        for a in 0..dim {
            for b in 0..dim {
                m[(a, b)] = self.matrix[(map[a], map[b])];
            }
        }
        Ok(MixedState { register: new_reg, matrix: m })
    }

    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }

    /// `<psi| rho |psi>`.
    pub fn fidelity_pure(&self, psi: &PureState) -> Result<f64> {
        if self.register != psi.register {
            return Err(Error::RegisterMismatch("fidelity of different registers".into()));
        }
        let v = &self.matrix * psi.amplitudes();
        Ok(psi.amplitudes().dotc(&v).re)
    }
}

// ---------------------------------------------------------------------------
// State: pure or mixed carrier

#[derive(Debug, Clone)]
pub enum State {
    Pure(PureState),
    Mixed(MixedState),
}

impl From<PureState> for State {
    fn from(s: PureState) -> Self {
        State::Pure(s)
    }
}
impl From<MixedState> for State {
    fn from(s: MixedState) -> Self {
        State::Mixed(s)
    }
}

impl State {
    pub fn register(&self) -> &Register {
        match self {
            State::Pure(s) => s.register(),
            State::Mixed(s) => s.register(),
        }
    }

    pub fn to_mixed(&self) -> Result<MixedState> {
        match self {
            State::Pure(s) => s.to_density(),
            State::Mixed(s) => Ok(s.clone()),
        }
    }

    /// Tensor product; a pure and a mixed factor promote to mixed.
    pub fn tensor(&self, other: &State) -> Result<State> {
        match (self, other) {
            (State::Pure(a), State::Pure(b)) => Ok(State::Pure(a.tensor(b)?)),
            _ => Ok(State::Mixed(self.to_mixed()?.tensor(&other.to_mixed()?)?)),
        }
    }

    /// Reduced state on `keep`; always a density matrix.
    pub fn reduced(&self, keep: &[usize]) -> Result<MixedState> {
        match self {
            State::Pure(s) => s.reduced(keep),
            State::Mixed(s) => s.partial_trace(keep),
        }
    }

    pub fn permute(&self, perm: &[usize]) -> Result<State> {
        match self {
            State::Pure(s) => Ok(State::Pure(s.permute(perm)?)),
            State::Mixed(s) => Ok(State::Mixed(s.permute(perm)?)),
        }
    }

    pub fn purity(&self) -> f64 {
        match self {
            State::Pure(_) => 1.0,
            State::Mixed(s) => s.purity(),
        }
    }
}

// ---------------------------------------------------------------------------
// Observables

#[derive(Debug, Clone)]
pub struct Observable {
    register: Register,
    matrix: CMatrix,
}

impl Observable {
    pub fn new(register: Register, matrix: CMatrix) -> Result<Self> {
        let dim = register.total_dim();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(Error::InvalidObservable(format!(
                "matrix is {}x{}, register dimension is {dim}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let dev = hermiticity_deviation(&matrix);
        if dev > TOL_CONSTRUCT {
            return Err(Error::InvalidObservable(format!("not Hermitian (deviation {dev:.3e})")));
        }
        Ok(Observable { register, matrix })
    }

    pub fn identity(register: Register) -> Self {
        let dim = register.total_dim();
        Observable { register, matrix: CMatrix::identity(dim, dim) }
    }

    pub fn register(&self) -> &Register {
        &self.register
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn tensor(&self, other: &Observable) -> Observable {
        Observable {
            register: self.register.tensor(&other.register),
            matrix: self.matrix.kronecker(&other.matrix),
        }
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eigenvalues(&self.matrix)
    }
}

/// `<O>` on a state. The imaginary residue must stay below 1e-8; smaller
/// residues are discarded as roundoff.
pub fn expectation(state: &State, obs: &Observable) -> Result<f64> {
    if state.register() != obs.register() {
        return Err(Error::RegisterMismatch("expectation of mismatched registers".into()));
    }
    let val = match state {
        State::Pure(s) => {
            let v = obs.matrix() * s.amplitudes();
            s.amplitudes().dotc(&v)
        }
        State::Mixed(s) => (s.matrix() * obs.matrix()).trace(),
    };
    if val.im.abs() > 1e-8 {
        return Err(Error::Numerical(format!("expectation has imaginary residue {:.3e}", val.im)));
    }
    Ok(val.re)
}

// ---------------------------------------------------------------------------
// Measurement

/// Orthonormal basis of one party's local space.
#[derive(Debug, Clone)]
pub struct LocalBasis {
    vectors: Vec<CVector>,
}

impl LocalBasis {
    pub fn new(vectors: Vec<CVector>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::InvalidState("empty basis".into()));
        }
        let d = vectors[0].len();
        if vectors.len() != d || vectors.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidState("basis does not span the local space".into()));
        }
        let mut dev: f64 = 0.0;
        for (i, vi) in vectors.iter().enumerate() {
            for (j, vj) in vectors.iter().enumerate() {
                let g = vi.dotc(vj);
                let target = if i == j { 1.0 } else { 0.0 };
                dev = dev.max((g - cr(target)).norm());
            }
        }
        if dev > TOL_CONSTRUCT {
            return Err(Error::NonOrthonormalBasis { deviation: dev });
        }
        Ok(LocalBasis { vectors })
    }

    pub fn computational(d: usize) -> Self {
        let vectors = (0..d)
            .map(|k| {
                let mut v = CVector::zeros(d);
                v[k] = cr(1.0);
                v
            })
            .collect();
        LocalBasis { vectors }
    }

    /// Qubit X eigenbasis `{|+>, |->}`.
    pub fn pauli_x() -> Self {
        let s = 1.0 / 2.0_f64.sqrt();
        LocalBasis {
            vectors: vec![
                CVector::from_vec(vec![cr(s), cr(s)]),
                CVector::from_vec(vec![cr(s), cr(-s)]),
            ],
        }
    }

    /// Qubit Y eigenbasis `{|+i>, |-i>}`.
    pub fn pauli_y() -> Self {
        let s = 1.0 / 2.0_f64.sqrt();
        LocalBasis {
            vectors: vec![
                CVector::from_vec(vec![cr(s), c(0.0, s)]),
                CVector::from_vec(vec![cr(s), c(0.0, -s)]),
            ],
        }
    }

    /// Qubit Z eigenbasis `{|0>, |1>}`.
    pub fn pauli_z() -> Self {
        LocalBasis::computational(2)
    }

    /// Product basis `{self_i (x) other_j}`, index `i*|other| + j`.
    pub fn tensor(&self, other: &LocalBasis) -> Self {
        let mut vectors = Vec::with_capacity(self.len() * other.len());
        for a in &self.vectors {
            for b in &other.vectors {
                let k = a.kronecker(b);
                vectors.push(CVector::from_column_slice(k.as_slice()));
            }
        }
        LocalBasis { vectors }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vector(&self, k: usize) -> &CVector {
        &self.vectors[k]
    }
}

/// One outcome of a (joint) projective measurement. The post-state lives on
/// the remaining register (measured parties removed, original order kept).
/// Outcomes with probability below [`ZERO_PROB`] are retained with
/// `zero_prob = true` and a placeholder post-state.
#[derive(Debug, Clone)]
pub struct OutcomeBranch {
    pub outcome: Vec<usize>,
    pub probability: f64,
    pub post: State,
    pub zero_prob: bool,
}

/// Measure one party in an orthonormal basis.
pub fn measure_party(state: &State, party: usize, basis: &LocalBasis) -> Result<Vec<OutcomeBranch>> {
    measure_parties(state, &[party], std::slice::from_ref(basis))
}

/// Jointly measure several parties, one basis per party. Branch outcomes are
/// listed in the order of `parties`; probabilities sum to 1 within 1e-10.
pub fn measure_parties(
    state: &State,
    parties: &[usize],
    bases: &[LocalBasis],
) -> Result<Vec<OutcomeBranch>> {
    let reg = state.register();
    if parties.is_empty() {
        return Ok(vec![OutcomeBranch {
            outcome: vec![],
            probability: 1.0,
            post: state.clone(),
            zero_prob: false,
        }]);
    }
    if parties.len() != bases.len() {
        return Err(Error::InvalidState("one basis per measured party required".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for (&p, basis) in parties.iter().zip(bases) {
        reg.check_party(p)?;
        if !seen.insert(p) {
            return Err(Error::InvalidState(format!("party {p} measured twice")));
        }
        if basis.len() != reg.dim(p) {
            return Err(Error::RegisterMismatch(format!(
                "basis of size {} for party {p} of dimension {}",
                basis.len(),
                reg.dim(p)
            )));
        }
    }
    if parties.len() == reg.n_parties() {
        return Err(Error::InvalidState("cannot measure every party: no register remains".into()));
    }

    let rest: Vec<usize> = (0..reg.n_parties()).filter(|p| !parties.contains(p)).collect();
    let rest_reg = reg.subset(&rest)?;
    let measured_dims: Vec<usize> = parties.iter().map(|&p| reg.dim(p)).collect();

    // Contraction map: full index -> (measured digits, rest index).
    let strides = reg.strides();
    let total = reg.total_dim();
    let rest_strides = rest_reg.strides();
    let mut rest_of = vec![0usize; total];
    let mut digits_of = vec![vec![0usize; parties.len()]; total];
    for idx in 0..total {
        let digits = reg.digits_of(idx);
        for (k, &p) in parties.iter().enumerate() {
            digits_of[idx][k] = digits[p];
        }
        rest_of[idx] = rest.iter().zip(&rest_strides).map(|(&p, s)| digits[p] * s).sum();
        let _ = strides;
    }

    let mut branches = Vec::new();
    match state {
        State::Pure(psi) => {
            for outcome in mixed_radix_iter(&measured_dims) {
                let mut amp = CVector::zeros(rest_reg.total_dim());
                for idx in 0..total {
                    let mut w = psi.amplitudes()[idx];
                    for (k, basis) in bases.iter().enumerate() {
                        w *= basis.vector(outcome[k])[digits_of[idx][k]].conj();
                    }
                    amp[rest_of[idx]] += w;
                }
                let p = amp.norm_squared();
                branches.push(make_branch(outcome, p, || {
                    let amp_n = &amp / cr(p.sqrt());
                    Ok(State::Pure(PureState::new(rest_reg.clone(), amp_n)?))
                })?);
            }
        }
        State::Mixed(rho) => {
            // Project the eigen-decomposition so every conditional state is a
            // Gram sum and stays positive semidefinite under renormalization.
            let eig = rho.matrix().clone().symmetric_eigen();
            let comps: Vec<(f64, CVector)> = eig
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, &q)| q > 1e-14)
                .map(|(k, &q)| (q, eig.eigenvectors.column(k).into_owned()))
                .collect();
            for outcome in mixed_radix_iter(&measured_dims) {
                let rd = rest_reg.total_dim();
                let mut p = 0.0;
                let mut projected: Vec<(f64, CVector)> = Vec::with_capacity(comps.len());
                for (q, phi) in &comps {
                    let mut amp = CVector::zeros(rd);
                    for idx in 0..total {
                        let mut w = phi[idx];
                        for (k, basis) in bases.iter().enumerate() {
                            w *= basis.vector(outcome[k])[digits_of[idx][k]].conj();
                        }
                        amp[rest_of[idx]] += w;
                    }
                    p += q * amp.norm_squared();
                    projected.push((*q, amp));
                }
                branches.push(make_branch(outcome, p, || {
                    let mut m = CMatrix::zeros(rd, rd);
                    for (q, amp) in &projected {
                        m += (amp * amp.adjoint()) * cr(q / p);
                    }
                    Ok(State::Mixed(MixedState::new(rest_reg.clone(), hermitize(m))?))
                })?);
            }
        }
    }

    let psum: f64 = branches.iter().map(|b| b.probability).sum();
    if (psum - 1.0).abs() > 1e-10 {
        return Err(Error::Numerical(format!("branch probabilities sum to {psum}")));
    }
    Ok(branches)
}

fn make_branch(
    outcome: Vec<usize>,
    p: f64,
    build: impl FnOnce() -> Result<State>,
) -> Result<OutcomeBranch> {
    if p < ZERO_PROB {
        // Placeholder post-state; flagged and excluded from averages.
        Ok(OutcomeBranch { outcome, probability: p.max(0.0), post: State::Pure(PureState {
            register: Register::new(vec![2]).unwrap(),
            amplitudes: CVector::from_vec(vec![cr(1.0), cr(0.0)]),
        }), zero_prob: true })
    } else {
        Ok(OutcomeBranch { outcome, probability: p, post: build()?, zero_prob: false })
    }
}

// ---------------------------------------------------------------------------
// Hermitian matrix utilities

pub(crate) fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let mut dev: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub(crate) fn hermitize(mut m: CMatrix) -> CMatrix {
    let adj = m.adjoint();
    m += adj;
    m * cr(0.5)
}

pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    m.clone().symmetric_eigen().eigenvalues.iter().cloned().collect()
}

/// Largest absolute eigenvalue of a Hermitian matrix.
pub fn spectral_norm_hermitian(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m).into_iter().fold(0.0, |a, x| a.max(x.abs()))
}

/// Square root of a positive semidefinite Hermitian matrix. Eigenvalues in
/// `[-1e-10, 0)` are clipped to 0; more negative ones are an error.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    psd_power(m, |x| x.sqrt())
}

/// Moore-Penrose pseudo-inverse of the PSD square root: eigenvalues below
/// `support_tol` are treated as outside the support and inverted to 0.
pub fn psd_pinv_sqrt(m: &CMatrix, support_tol: f64) -> Result<CMatrix> {
    psd_power(m, |x| if x > support_tol { 1.0 / x.sqrt() } else { 0.0 })
}

/// Projector onto the support (eigenvalues above `support_tol`).
pub fn support_projector(m: &CMatrix, support_tol: f64) -> Result<CMatrix> {
    psd_power(m, |x| if x > support_tol { 1.0 } else { 0.0 })
}

fn psd_power(m: &CMatrix, f: impl Fn(f64) -> f64) -> Result<CMatrix> {
    if hermiticity_deviation(m) > TOL_CONSTRUCT {
        return Err(Error::Numerical("psd function of a non-Hermitian matrix".into()));
    }
    let eig = m.clone().symmetric_eigen();
    let mut vals = Vec::with_capacity(eig.eigenvalues.len());
    for &x in eig.eigenvalues.iter() {
        if x < TOL_PSD {
            return Err(Error::Numerical(format!("matrix is not PSD (eigenvalue {x:.3e})")));
        }
        vals.push(cr(f(x.max(0.0))));
    }
    let d = CMatrix::from_diagonal(&CVector::from_vec(vals));
    Ok(hermitize(&eig.eigenvectors * d * eig.eigenvectors.adjoint()))
}

// ---------------------------------------------------------------------------
// Index plumbing shared by partial trace and permutation

/// For a partial trace: register of kept parties, embedding of each kept
/// index into the full index space, and offsets of every traced configuration.
fn trace_plan(reg: &Register, keep: &[usize]) -> Result<(Register, Vec<usize>, Vec<usize>)> {
    if keep.is_empty() {
        return Err(Error::InvalidState("partial trace must keep at least one party".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for &p in keep {
        reg.check_party(p)?;
        if !seen.insert(p) {
            return Err(Error::InvalidState(format!("party {p} kept twice")));
        }
    }
    let mut sorted = keep.to_vec();
    sorted.sort_unstable();
    if sorted != keep {
        return Err(Error::InvalidState("keep list must be in ascending party order".into()));
    }
    let keep_reg = reg.subset(keep)?;
    let rest: Vec<usize> = (0..reg.n_parties()).filter(|p| !keep.contains(p)).collect();
    let strides = reg.strides();

    let mut keep_embed = Vec::with_capacity(keep_reg.total_dim());
    let keep_dims: Vec<usize> = keep.iter().map(|&p| reg.dim(p)).collect();
    for digits in mixed_radix_iter(&keep_dims) {
        keep_embed.push(digits.iter().zip(keep).map(|(&d, &p)| d * strides[p]).sum());
    }
    let rest_dims: Vec<usize> = rest.iter().map(|&p| reg.dim(p)).collect();
    let mut rest_offsets = Vec::new();
    if rest.is_empty() {
        rest_offsets.push(0);
    } else {
        for digits in mixed_radix_iter(&rest_dims) {
            rest_offsets.push(digits.iter().zip(&rest).map(|(&d, &p)| d * strides[p]).sum());
        }
    }
    Ok((keep_reg, keep_embed, rest_offsets))
}

/// For a permutation: permuted register and, per new index, the old index.
fn permute_plan(reg: &Register, perm: &[usize]) -> Result<(Register, Vec<usize>)> {
    let n = reg.n_parties();
    if perm.len() != n {
        return Err(Error::InvalidState("permutation length != party count".into()));
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return Err(Error::InvalidState("not a permutation".into()));
        }
        seen[p] = true;
    }
    let new_reg = reg.subset(perm)?;
    let strides = reg.strides();
    let mut map = Vec::with_capacity(reg.total_dim());
    let new_dims: Vec<usize> = perm.iter().map(|&p| reg.dim(p)).collect();
    for digits in mixed_radix_iter(&new_dims) {
        map.push(digits.iter().zip(perm).map(|(&d, &p)| d * strides[p]).sum());
    }
    Ok((new_reg, map))
}

// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ghz4() -> PureState {
        let reg = Register::qubits(4).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        let mut amp = CVector::zeros(16);
        amp[0] = cr(s);
        amp[15] = cr(s);
        PureState::new(reg, amp).unwrap()
    }

    #[test]
    fn register_indexing_round_trips() {
        let reg = Register::new(vec![2, 3, 2]).unwrap();
        assert_eq!(reg.total_dim(), 12);
        assert_eq!(reg.strides(), vec![6, 2, 1]);
        for idx in 0..12 {
            assert_eq!(reg.index_of(&reg.digits_of(idx)), idx);
        }
        assert_eq!(reg.index_of(&[1, 2, 0]), 10);
    }

    #[test]
    fn register_rejects_trivial_dims() {
        assert!(Register::new(vec![]).is_err());
        assert!(Register::new(vec![2, 1]).is_err());
    }

    #[test]
    fn dimension_caps_enforced() {
        assert!(Register::qubits(13).map(|r| PureState::basis_state(r, &[0; 13])).unwrap().is_err());
        let r11 = Register::qubits(11).unwrap();
        assert!(MixedState::maximally_mixed(r11).is_err());
        // 12 qubits pure is exactly at the cap
        let r12 = Register::qubits(12).unwrap();
        assert!(PureState::basis_state(r12, &[0; 12]).is_ok());
    }

    #[test]
    fn ghz_partial_trace_is_classical_mixture() {
        // keep parties {0,1}: (|00><00| + |11><11|)/2
        let rho = ghz4().reduced(&[0, 1]).unwrap();
        let mut expect = CMatrix::zeros(4, 4);
        expect[(0, 0)] = cr(0.5);
        expect[(3, 3)] = cr(0.5);
        assert!((rho.matrix() - expect).norm() < 1e-12);
        assert!((rho.purity() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn partial_trace_keep_all_is_identity() {
        let rho = ghz4().to_density().unwrap();
        let same = rho.partial_trace(&[0, 1, 2, 3]).unwrap();
        assert!((rho.matrix() - same.matrix()).norm() < 1e-12);
        assert!(rho.partial_trace(&[]).is_err());
        assert!(rho.partial_trace(&[4]).is_err());
    }

    #[test]
    fn measure_x_on_ghz_tail_gives_phi_branches() {
        // X on the last party of GHZ_3: branches (|00>+-|11>)/sqrt2, p=1/2.
        let reg = Register::qubits(3).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        let mut amp = CVector::zeros(8);
        amp[0] = cr(s);
        amp[7] = cr(s);
        let ghz3 = State::Pure(PureState::new(reg, amp).unwrap());
        let branches = measure_party(&ghz3, 2, &LocalBasis::pauli_x()).unwrap();
        assert_eq!(branches.len(), 2);
        for (k, b) in branches.iter().enumerate() {
            assert!((b.probability - 0.5).abs() < 1e-12);
            let sign = if k == 0 { 1.0 } else { -1.0 };
            match &b.post {
                State::Pure(p) => {
                    let a = p.amplitudes();
                    assert!((a[0] - cr(s)).norm() < 1e-12);
                    assert!((a[3] - cr(sign * s)).norm() < 1e-12);
                }
                _ => panic!("expected pure branch"),
            }
        }
    }

    #[test]
    fn zero_probability_branch_is_flagged() {
        // measuring X on a |+> party never yields "-"
        let reg = Register::qubits(2).unwrap();
        let s = 0.5;
        let amp = CVector::from_vec(vec![cr(s), cr(s), cr(s), cr(s)]); // |++>
        let st = State::Pure(PureState::new(reg, amp).unwrap());
        let branches = measure_party(&st, 1, &LocalBasis::pauli_x()).unwrap();
        assert!(!branches[0].zero_prob && (branches[0].probability - 1.0).abs() < 1e-12);
        assert!(branches[1].zero_prob && branches[1].probability < ZERO_PROB);
    }

    #[test]
    fn measurement_input_validation() {
        let st = State::Pure(ghz4());
        let x = LocalBasis::pauli_x();
        assert!(measure_parties(&st, &[1, 1], &[x.clone(), x.clone()]).is_err());
        assert!(measure_party(&st, 9, &x).is_err());
        assert!(measure_parties(&st, &[0, 1, 2, 3], &[x.clone(), x.clone(), x.clone(), x.clone()])
            .is_err());
        // non-orthonormal basis rejected at construction
        let bad = LocalBasis::new(vec![
            CVector::from_vec(vec![cr(1.0), cr(0.0)]),
            CVector::from_vec(vec![cr(1.0), cr(0.0)]),
        ]);
        assert!(bad.is_err());
    }

    #[test]
    fn mixed_measurement_matches_pure_projection() {
        let st = State::Pure(ghz4());
        let rho = State::Mixed(ghz4().to_density().unwrap());
        let bx = LocalBasis::pauli_x();
        let a = measure_parties(&st, &[2, 3], &[bx.clone(), bx.clone()]).unwrap();
        let b = measure_parties(&rho, &[2, 3], &[bx.clone(), bx]).unwrap();
        for (ba, bb) in a.iter().zip(&b) {
            assert!((ba.probability - bb.probability).abs() < 1e-12);
            let ma = ba.post.to_mixed().unwrap();
            let mb = bb.post.to_mixed().unwrap();
            assert!((ma.matrix() - mb.matrix()).norm() < 1e-10);
        }
    }

    #[test]
    fn expectation_of_sigma_z_product() {
        let reg = Register::qubits(2).unwrap();
        let s = 1.0 / 2.0_f64.sqrt();
        let mut amp = CVector::zeros(4);
        amp[0] = cr(s);
        amp[3] = cr(s);
        let phi = State::Pure(PureState::new(reg.clone(), amp).unwrap());
        let z = CMatrix::from_row_slice(2, 2, &[cr(1.0), cr(0.0), cr(0.0), cr(-1.0)]);
        let zz = Observable::new(reg, z.kronecker(&z)).unwrap();
        assert!((expectation(&phi, &zz).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn observable_must_be_hermitian() {
        let reg = Register::new(vec![2]).unwrap();
        let m = CMatrix::from_row_slice(2, 2, &[cr(0.0), cr(1.0), cr(0.0), cr(0.0)]);
        assert!(Observable::new(reg, m).is_err());
    }

    #[test]
    fn mixed_state_validation() {
        let reg = Register::new(vec![2]).unwrap();
        // trace != 1
        let m = CMatrix::identity(2, 2);
        assert!(MixedState::new(reg.clone(), m).is_err());
        // negative eigenvalue
        let m = CMatrix::from_row_slice(2, 2, &[cr(1.5), cr(0.0), cr(0.0), cr(-0.5)]);
        assert!(MixedState::new(reg.clone(), m).is_err());
        // valid
        let m = CMatrix::from_row_slice(2, 2, &[cr(0.5), cr(0.0), cr(0.0), cr(0.5)]);
        assert!(MixedState::new(reg, m).is_ok());
    }

    #[test]
    fn psd_sqrt_and_pinv() {
        let m = CMatrix::from_row_slice(2, 2, &[cr(4.0), cr(0.0), cr(0.0), cr(0.0)]);
        let r = psd_sqrt(&m).unwrap();
        assert!((&r * &r - &m).norm() < 1e-12);
        let pi = psd_pinv_sqrt(&m, 1e-12).unwrap();
        assert!((pi[(0, 0)].re - 0.5).abs() < 1e-12);
        assert_eq!(pi[(1, 1)], cr(0.0));
        let p = support_projector(&m, 1e-12).unwrap();
        assert_eq!(p[(0, 0)], cr(1.0));
        assert_eq!(p[(1, 1)], cr(0.0));
    }

    // ---- randomized invariants ----

    pub(crate) fn random_pure(reg: &Register, rng: &mut impl rand::Rng) -> PureState {
        let dim = reg.total_dim();
        let mut amp = CVector::zeros(dim);
        loop {
            for k in 0..dim {
                amp[k] = c(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5);
            }
            let n = amp.norm();
            if n > 1e-3 {
                amp /= cr(n);
                break;
            }
        }
        PureState::new(reg.clone(), amp).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn probability_conservation(seed in 0u64..1000) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let reg = Register::qubits(3).unwrap();
            let st = State::Pure(random_pure(&reg, &mut rng));
            for basis in [LocalBasis::pauli_x(), LocalBasis::pauli_y(), LocalBasis::pauli_z()] {
                let branches = measure_party(&st, 1, &basis).unwrap();
                let total: f64 = branches.iter().map(|b| b.probability).sum();
                prop_assert!((total - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn partial_trace_of_product_recovers_factor(seed in 0u64..1000) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let r1 = Register::qubits(1).unwrap();
            let r2 = Register::new(vec![3]).unwrap();
            let a = random_pure(&r1, &mut rng);
            let b = random_pure(&r2, &mut rng);
            let ab = a.tensor(&b).unwrap();
            let ra = ab.reduced(&[0]).unwrap();
            let expect = a.to_density().unwrap();
            prop_assert!((ra.matrix() - expect.matrix()).norm() < 1e-12);
        }

        #[test]
        fn permutation_round_trip(seed in 0u64..1000) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let reg = Register::new(vec![2, 3, 2]).unwrap();
            let st = random_pure(&reg, &mut rng);
            let perm = [2usize, 0, 1];
            let inv = [1usize, 2, 0];
            let back = st.permute(&perm).unwrap().permute(&inv).unwrap();
            prop_assert!((back.amplitudes() - st.amplitudes()).norm() < 1e-14);
        }

        #[test]
        fn mixture_trace_and_positivity(seed in 0u64..1000, w in 0.0f64..1.0) {
            use rand::SeedableRng;
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let reg = Register::qubits(2).unwrap();
            let a = random_pure(&reg, &mut rng).to_density().unwrap();
            let b = random_pure(&reg, &mut rng).to_density().unwrap();
            let m = MixedState::mixture(&[(w, a), (1.0 - w, b)]).unwrap();
            prop_assert!(m.eigenvalues().into_iter().all(|x| x > TOL_PSD));
        }
    }
}
