//! Detection loss, the weak fair-sampling condition, and local filters.
//!
//! A lossy measurement has, for every setting, click elements plus a
//! no-click element. The *weak fair-sampling* condition requires the
//! no-click element to be setting-independent: losses may depend on the
//! state arriving at the detector but not on the measurement choice. Under
//! that condition, postselecting on clicks is exactly equivalent to first
//! passing the state through the local filter `K = (I - E_noclick)^(1/2)`
//! and then measuring the rescaled click elements — so conclusions drawn
//! from postselected data hold for the filtered state. Local filtering
//! maps biseparable states to biseparable states, which is why a filtered
//! run can never turn a non-certifiable state into a certified one.

use crate::error::{Error, Result};
use crate::qcore::{
    expectation, hermitian_eigenvalues, psd_pinv_sqrt, psd_sqrt, spectral_norm_hermitian,
    support_projector, CMatrix, MixedState, Observable, State, C64,
};
use rand::Rng;
use rand_distr::StandardNormal;

/// Numerical rank cutoff: directions whose click probability is below this
/// are treated as never clicking and excluded by the filter.
pub const SUPPORT_TOL: f64 = 1e-9;

fn cr(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn check_psd(m: &CMatrix, what: &str) -> Result<()> {
    let dev = crate::qcore::hermiticity_deviation(m);
    if dev > 1e-10 {
        return Err(Error::InvalidObservable(format!(
            "{what} is not Hermitian (deviation {dev:.3e})"
        )));
    }
    let min = hermitian_eigenvalues(m).into_iter().fold(f64::INFINITY, f64::min);
    if min < -1e-10 {
        return Err(Error::InvalidObservable(format!(
            "{what} is not positive semidefinite (min eigenvalue {min:.3e})"
        )));
    }
    Ok(())
}

/// A single-party lossy measurement: per setting, click elements
/// `clicks[x][a]` and a no-click element `noclick[x]`, all PSD and summing
/// to the identity.
#[derive(Debug, Clone)]
pub struct LossyPovm {
    dim: usize,
    clicks: Vec<Vec<CMatrix>>,
    noclick: Vec<CMatrix>,
}

impl LossyPovm {
    pub fn new(clicks: Vec<Vec<CMatrix>>, noclick: Vec<CMatrix>) -> Result<Self> {
        if clicks.is_empty() || clicks.len() != noclick.len() {
            return Err(Error::InvalidObservable(
                "need one click set and one no-click element per setting".into(),
            ));
        }
        let dim = noclick[0].nrows();
        for (x, (cl, nc)) in clicks.iter().zip(&noclick).enumerate() {
            if cl.is_empty() {
                return Err(Error::InvalidObservable(format!(
                    "setting {x} has no click outcomes"
                )));
            }
            let mut sum = CMatrix::zeros(dim, dim);
            for (a, e) in cl.iter().enumerate() {
                if e.nrows() != dim || e.ncols() != dim {
                    return Err(Error::InvalidObservable("mixed element dimensions".into()));
                }
                check_psd(e, &format!("click element ({x}, {a})"))?;
                sum += e;
            }
            if nc.nrows() != dim || nc.ncols() != dim {
                return Err(Error::InvalidObservable("mixed element dimensions".into()));
            }
            check_psd(nc, &format!("no-click element of setting {x}"))?;
            sum += nc;
            let dev = spectral_norm_hermitian(&(sum - CMatrix::identity(dim, dim)));
            if dev > 1e-10 {
                return Err(Error::InvalidObservable(format!(
                    "setting {x} does not resolve the identity (deviation {dev:.3e})"
                )));
            }
        }
        Ok(LossyPovm { dim, clicks, noclick })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn settings(&self) -> usize {
        self.clicks.len()
    }
    pub fn outcomes(&self, setting: usize) -> usize {
        self.clicks[setting].len()
    }
    pub fn click(&self, setting: usize, outcome: usize) -> &CMatrix {
        &self.clicks[setting][outcome]
    }
    pub fn noclick(&self, setting: usize) -> &CMatrix {
        &self.noclick[setting]
    }

    /// Dichotomic observables measured through a detector of efficiency
    /// `eta`, independent of setting and outcome: `clicks = eta * P_a`,
    /// `noclick = (1 - eta) I`. Satisfies weak fair sampling by
    /// construction.
    pub fn from_observables_with_loss(observables: &[Observable], eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidObservable(format!(
                "efficiency must lie in [0, 1], got {eta}"
            )));
        }
        let projs = Self::projector_sets(observables)?;
        let dim = projs[0][0].nrows();
        Ok(LossyPovm {
            dim,
            clicks: projs
                .iter()
                .map(|ps| ps.iter().map(|p| p * cr(eta)).collect())
                .collect(),
            noclick: vec![CMatrix::identity(dim, dim) * cr(1.0 - eta); projs.len()],
        })
    }

    /// Outcome-dependent efficiencies: the `+` outcome clicks with
    /// `eta_plus`, the `-` outcome with `eta_minus`. For unequal
    /// efficiencies the no-click element inherits the setting dependence of
    /// the projectors and weak fair sampling fails — the classic avenue for
    /// detection-loophole cheating.
    pub fn outcome_dependent_loss(
        observables: &[Observable],
        eta_plus: f64,
        eta_minus: f64,
    ) -> Result<Self> {
        for eta in [eta_plus, eta_minus] {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::InvalidObservable(format!(
                    "efficiency must lie in [0, 1], got {eta}"
                )));
            }
        }
        let projs = Self::projector_sets(observables)?;
        let dim = projs[0][0].nrows();
        let clicks: Vec<Vec<CMatrix>> = projs
            .iter()
            .map(|ps| vec![&ps[0] * cr(eta_plus), &ps[1] * cr(eta_minus)])
            .collect();
        let noclick: Vec<CMatrix> = projs
            .iter()
            .map(|ps| &ps[0] * cr(1.0 - eta_plus) + &ps[1] * cr(1.0 - eta_minus))
            .collect();
        Ok(LossyPovm { dim, clicks, noclick })
    }

    fn projector_sets(observables: &[Observable]) -> Result<Vec<[CMatrix; 2]>> {
        if observables.is_empty() {
            return Err(Error::InvalidObservable("need at least one setting".into()));
        }
        let dim = observables[0].matrix().nrows();
        let mut out = Vec::with_capacity(observables.len());
        for obs in observables {
            if obs.matrix().nrows() != dim {
                return Err(Error::InvalidObservable("mixed observable dimensions".into()));
            }
            if obs.eigenvalues().into_iter().any(|x| x.abs() > 1.0 + 1e-10) {
                return Err(Error::InvalidObservable(
                    "observable eigenvalues must lie in [-1, 1]".into(),
                ));
            }
            let id = CMatrix::identity(dim, dim);
            let plus = (&id + obs.matrix()) * cr(0.5);
            let minus = (&id - obs.matrix()) * cr(0.5);
            out.push([plus, minus]);
        }
        Ok(out)
    }

    /// Random measurement obeying weak fair sampling: a shared random
    /// no-click element (spectral norm at most `max_loss`) and, per setting,
    /// a random two-outcome split of the remaining weight.
    pub fn random_weak_fs<R: Rng + ?Sized>(
        dim: usize,
        settings: usize,
        max_loss: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let random_psd = |rng: &mut R| {
            let mut g = CMatrix::zeros(dim, dim);
            for i in 0..dim {
                for j in 0..dim {
                    g[(i, j)] = C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
                }
            }
            &g * g.adjoint()
        };
        let mut e0 = random_psd(rng);
        let norm = spectral_norm_hermitian(&e0);
        let scale = max_loss * rng.gen::<f64>();
        e0 *= cr(if norm > 1e-12 { scale / norm } else { 0.0 });
        let m = CMatrix::identity(dim, dim) - &e0;
        let sqrt_m = psd_sqrt(&m)?;
        let mut clicks = Vec::with_capacity(settings);
        for _ in 0..settings {
            // Q with spectrum in [0, 1]: (I + H/||H||)/2 for random Hermitian H
            let h = {
                let g = random_psd(rng);
                let g2 = random_psd(rng);
                g - g2
            };
            let hn = spectral_norm_hermitian(&h);
            let q = if hn > 1e-12 {
                (CMatrix::identity(dim, dim) + h * cr(1.0 / hn)) * cr(0.5)
            } else {
                CMatrix::identity(dim, dim) * cr(0.5)
            };
            let plus = &sqrt_m * &q * &sqrt_m;
            let minus = &sqrt_m * (CMatrix::identity(dim, dim) - &q) * &sqrt_m;
            clicks.push(vec![plus, minus]);
        }
        LossyPovm::new(clicks, vec![e0; settings])
    }
}

// ---------------------------------------------------------------------------

/// Verify weak fair sampling: all no-click elements must agree in spectral
/// norm within 1e-9. Returns the (hermitized) common no-click element.
pub fn check_weak_fair_sampling(povm: &LossyPovm) -> Result<CMatrix> {
    let mut worst = 0.0f64;
    for x in 1..povm.settings() {
        let dev = spectral_norm_hermitian(&(povm.noclick(x) - povm.noclick(0)));
        worst = worst.max(dev);
    }
    if worst > 1e-9 {
        return Err(Error::FairSamplingViolated { deviation: worst });
    }
    let mut avg = CMatrix::zeros(povm.dim(), povm.dim());
    for x in 0..povm.settings() {
        avg += povm.noclick(x);
    }
    Ok(avg * cr(1.0 / povm.settings() as f64))
}

/// The filter form of a weakly fair-sampled lossy measurement:
/// `K = (I - E_noclick)^(1/2)`, the rescaled ideal click elements
/// `K^+ E K^+`, and the projectors onto the clicking and never-clicking
/// subspaces.
#[derive(Debug, Clone)]
pub struct FilterDecomposition {
    pub filter: CMatrix,
    pub filter_pinv: CMatrix,
    /// Projector onto the subspace that can click.
    pub support: CMatrix,
    /// Projector onto directions that never click (excluded by filtering).
    pub excluded: CMatrix,
    /// `ideal_clicks[x][a]`, a complete POVM on the support.
    pub ideal_clicks: Vec<Vec<CMatrix>>,
}

/// Decompose a lossy measurement into filter + ideal measurement. Fails if
/// weak fair sampling does not hold.
pub fn filter_decomposition(povm: &LossyPovm) -> Result<FilterDecomposition> {
    let e0 = check_weak_fair_sampling(povm)?;
    let dim = povm.dim();
    let m = CMatrix::identity(dim, dim) - &e0;
    let filter = psd_sqrt(&m)?;
    let filter_pinv = psd_pinv_sqrt(&m, SUPPORT_TOL)?;
    let support = support_projector(&m, SUPPORT_TOL)?;
    let excluded = CMatrix::identity(dim, dim) - &support;
    let mut ideal_clicks = Vec::with_capacity(povm.settings());
    for x in 0..povm.settings() {
        let mut row = Vec::with_capacity(povm.outcomes(x));
        let mut sum = CMatrix::zeros(dim, dim);
        for a in 0..povm.outcomes(x) {
            let e = &filter_pinv * povm.click(x, a) * &filter_pinv;
            sum += &e;
            row.push(e);
        }
        // completeness on the click support
        let dev = spectral_norm_hermitian(&(sum - &support));
        if dev > 1e-8 {
            return Err(Error::Numerical(format!(
                "rescaled click elements of setting {x} do not resolve the support \
                 (deviation {dev:.3e})"
            )));
        }
        ideal_clicks.push(row);
    }
    Ok(FilterDecomposition { filter, filter_pinv, support, excluded, ideal_clicks })
}

/// Apply one local filter per party: `rho -> (x)K rho (x)K^dagger / p`.
/// Returns the filtered state and the success probability `p`; fails when
/// `p` falls below 1e-12.
pub fn filtered_state(state: &State, filters: &[CMatrix]) -> Result<(MixedState, f64)> {
    let reg = state.register();
    if filters.len() != reg.n_parties() {
        return Err(Error::RegisterMismatch(format!(
            "{} filters for {} parties",
            filters.len(),
            reg.n_parties()
        )));
    }
    for (p, k) in filters.iter().enumerate() {
        if k.nrows() != reg.dim(p) || k.ncols() != reg.dim(p) {
            return Err(Error::RegisterMismatch(format!(
                "filter for party {p} has the wrong dimension"
            )));
        }
    }
    let big = filters
        .iter()
        .skip(1)
        .fold(filters[0].clone(), |acc, k| acc.kronecker(k));
    let rho = state.to_mixed()?;
    let out = &big * rho.matrix() * big.adjoint();
    let p = out.trace().re;
    if p < 1e-12 {
        return Err(Error::FilterSuccessTooSmall { p });
    }
    Ok((
        MixedState::new(reg.clone(), crate::qcore::hermitize(out * cr(1.0 / p)))?,
        p,
    ))
}

/// Largest absolute difference between postselected lossy statistics and
/// ideal statistics on the filtered state, over all settings and click
/// outcomes of a bipartite arrangement. Under weak fair sampling this is
/// zero up to numerics.
pub fn postselection_equivalence(
    pair: &State,
    povm_a: &LossyPovm,
    povm_b: &LossyPovm,
) -> Result<f64> {
    let reg = pair.register();
    if reg.n_parties() != 2 || reg.dim(0) != povm_a.dim() || reg.dim(1) != povm_b.dim() {
        return Err(Error::RegisterMismatch(
            "postselection equivalence needs a bipartite state matching the two measurements"
                .into(),
        ));
    }
    let fa = filter_decomposition(povm_a)?;
    let fb = filter_decomposition(povm_b)?;
    let (rho_f, p_success) = filtered_state(pair, &[fa.filter.clone(), fb.filter.clone()])?;
    let rho_f = State::Mixed(rho_f);
    let mut worst = 0.0f64;
    for x in 0..povm_a.settings() {
        for y in 0..povm_b.settings() {
            for a in 0..povm_a.outcomes(x) {
                for b in 0..povm_b.outcomes(y) {
                    let joint = Observable::new(
                        reg.clone(),
                        povm_a.click(x, a).kronecker(povm_b.click(y, b)),
                    )?;
                    let lossy = expectation(pair, &joint)? / p_success;
                    let ideal_obs = Observable::new(
                        reg.clone(),
                        fa.ideal_clicks[x][a].kronecker(&fb.ideal_clicks[y][b]),
                    )?;
                    let ideal = expectation(&rho_f, &ideal_obs)?;
                    worst = worst.max((lossy - ideal).abs());
                }
            }
        }
    }
    Ok(worst)
}

// ---------------------------------------------------------------------------
