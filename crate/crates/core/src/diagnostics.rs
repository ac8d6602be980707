//! Certificates: commutator norms, decoupling measures, the error-bound
//! polynomials and the Choi-based channel-distance bound.
//!
//! No diamond norm is computed exactly; every "diamond" figure is the upper
//! bound `(d/2) ‖J₁ − J₂‖₁`.

use serde::{Deserialize, Serialize};

use crate::choi::ChoiMatrix;
use crate::dense::{jw_majorana, DenseOperator, RMatrix};
use crate::error::{Error, Result};
use crate::instances::Path;
use crate::pauli::{Pauli, PauliString};

/// Exact-mode tolerances.
pub const EXACT_MAJORANA_TOL: f64 = 1e-7;
pub const EXACT_PAULI_TOL: f64 = 1e-6;
pub const EXACT_CHANNEL_TOL: f64 = 1e-6;
pub const NEAR_ONE_TOL: f64 = 1e-9;

fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// `T(n) = Σ_{k=2}^{min(w, 2n)} C(2n, k)` — the number of strings with `2 ≤ α_x ≤ w`.
pub fn count_t(n: usize, w: usize) -> u128 {
    let two_n = 2 * n as u32;
    (2..=(w as u32).min(two_n)).fold(0u128, |acc, k| acc.saturating_add(binomial(two_n, k)))
}

/// `T₁(n) = √5 · T(n) + 2n + 1`.
pub fn t1(n: usize, w: usize) -> f64 {
    5f64.sqrt() * count_t(n, w) as f64 + 2.0 * n as f64 + 1.0
}

/// `‖[W, γ_i]‖` for `i = M+1, …, 2n`.
pub fn majorana_commutator_norms(w: &DenseOperator, big_m: usize) -> Result<Vec<f64>> {
    let n = w.n_qubits();
    if big_m > 2 * n {
        return Err(Error::InvalidArgument(format!("M = {big_m} exceeds 2n = {}", 2 * n)));
    }
    (big_m + 1..=2 * n).map(|i| Ok(w.commutator(&jw_majorana(i, n)?).spectral_norm())).collect()
}

/// `max_{i > m} ½ Σ_{P ∈ {X,Y,Z}} ‖[W, P_i]‖`; zero when `m = n`.
pub fn pauli_decoupling(w: &DenseOperator, m: usize) -> Result<f64> {
    let n = w.n_qubits();
    if m > n {
        return Err(Error::InvalidArgument(format!("m = {m} exceeds n = {n}")));
    }
    let mut worst: f64 = 0.0;
    for q in m + 1..=n {
        let mut sum = 0.0;
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            let pd = DenseOperator::from_pauli(&PauliString::single(n, q, p)?);
            sum += w.commutator(&pd).spectral_norm();
        }
        worst = worst.max(0.5 * sum);
    }
    Ok(worst)
}

/// `(d/2) ‖J₁ − J₂‖₁`, an upper bound on the diamond distance.
pub fn diamond_bound(j1: &ChoiMatrix, j2: &ChoiMatrix) -> Result<f64> {
    Ok(j1.d0() as f64 / 2.0 * j1.trace_distance(j2)?)
}

/// The constants of the error analysis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    pub path: Path,
    pub weight_bound: usize,
    pub t_of_n: f64,
    pub t1_of_n: f64,
    /// `T₁ √‖E^(1)‖`.
    pub epsilon0_bound: f64,
    /// `(2n+3) ε₀` on the qubit path, `3n ε₀` on the fermionic path.
    pub epsilon_p_bound: f64,
    /// `3d₀⁴ + d₀²`.
    pub c0: f64,
    /// `d₀¹¹ (3d₀² + 1) / 2`.
    pub c3: f64,
    /// `d₀⁸ ε₂`.
    pub epsilon1: f64,
    pub epsilon2: f64,
    /// `n(2n+3) T₁ + C₃` (qubit) or `3n² T₁ + C₃` (fermionic).
    pub t2_of_n: f64,
    pub measured_epsilon0: Option<f64>,
    pub diamond_bound: Option<f64>,
}

/// Pauli-decoupling multiplier: `2n + 3` (qubit) or `3n` (fermionic).
pub fn pauli_factor(n: usize, path: Path) -> f64 {
    match path {
        Path::Qubit => 2.0 * n as f64 + 3.0,
        Path::Fermionic => 3.0 * n as f64,
    }
}

pub fn error_budget(
    n: usize,
    kappa: usize,
    t: usize,
    m: usize,
    norm_e1: f64,
    epsilon2: f64,
    path: Path,
) -> ErrorBudget {
    let w = (kappa + 1).saturating_pow(t as u32);
    let t_of_n = count_t(n, w) as f64;
    let t1_of_n = t1(n, w);
    let epsilon0_bound = t1_of_n * norm_e1.max(0.0).sqrt();
    let d0 = 2f64.powi(m as i32);
    let c3 = d0.powi(11) * (3.0 * d0 * d0 + 1.0) / 2.0;
    let nf = n as f64;
    let t2_of_n = match path {
        Path::Qubit => nf * (2.0 * nf + 3.0) * t1_of_n + c3,
        Path::Fermionic => 3.0 * nf * nf * t1_of_n + c3,
    };
    ErrorBudget {
        path,
        weight_bound: w,
        t_of_n,
        t1_of_n,
        epsilon0_bound,
        epsilon_p_bound: pauli_factor(n, path) * epsilon0_bound,
        c0: 3.0 * d0.powi(4) + d0 * d0,
        c3,
        epsilon1: d0.powi(8) * epsilon2,
        epsilon2,
        t2_of_n,
        measured_epsilon0: None,
        diamond_bound: None,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularValueReport {
    pub count_near_one: usize,
    /// `max_{i > M} |d̂_i − 1|`.
    pub max_deviation: f64,
    pub tol: f64,
}

/// Counts `|d̂_i − 1| ≤ tol` over the top `2n − M` entries of an ascending spectrum.
pub fn singular_value_report(sigma: &[f64], big_m: usize, tol: f64) -> SingularValueReport {
    let tail = &sigma[big_m.min(sigma.len())..];
    SingularValueReport {
        count_near_one: tail.iter().filter(|s| (*s - 1.0).abs() <= tol).count(),
        max_deviation: tail.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max),
        tol,
    }
}

/// Norms of an estimation-error matrix.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    pub max_entry: f64,
    pub spectral: f64,
    pub frobenius: f64,
}

impl ErrorNorms {
    pub fn of(e: &RMatrix) -> Self {
        ErrorNorms {
            max_entry: e.amax(),
            spectral: if e.is_empty() { 0.0 } else { e.singular_values().max() },
            frobenius: e.norm(),
        }
    }
}

/// One certified quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    pub pass: bool,
}

impl Certificate {
    /// Passes when `measured ≤ bound`.
    pub fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        Certificate { name: name.to_string(), measured, bound, pass: measured <= bound }
    }

    /// Passes when `measured ≥ bound`.
    pub fn at_least(name: &str, measured: f64, bound: f64) -> Self {
        Certificate { name: name.to_string(), measured, bound, pass: measured >= bound }
    }
}

/// Diagnostics block embedded in a learned description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub exact: bool,
    pub singular_values: Vec<f64>,
    pub singular_report: SingularValueReport,
    pub majorana_commutators: Vec<f64>,
    pub pauli_decoupling: f64,
    pub e1: Option<ErrorNorms>,
    pub e2_max_entry: Option<f64>,
    pub choi_error_spectral: Option<f64>,
    pub lambda_min: f64,
    pub mixing_p: f64,
    pub budget: ErrorBudget,
    pub certificates: Vec<Certificate>,
}

impl DiagnosticsReport {
    pub fn all_pass(&self) -> bool {
        self.certificates.iter().all(|c| c.pass)
    }

    /// CSV with header `name,measured,bound,pass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("name,measured,bound,pass\n");
        for c in &self.certificates {
            out.push_str(&format!("{},{:e},{:e},{}\n", c.name, c.measured, c.bound, c.pass));
        }
        out
    }
}

/// Inputs for [`certify`] beyond the pipeline run itself.
#[derive(Clone, Debug)]
pub struct CertifyInput<'a> {
    pub u_t: &'a DenseOperator,
    pub kappa: usize,
    pub t: usize,
    pub path: Path,
    /// Target accuracy of the sampled run; `None` for exact mode.
    pub epsilon: Option<f64>,
}

/// Compute every certificate for a finished pipeline run, using the true unitary as reference.
pub fn certify(input: &CertifyInput<'_>, run: &crate::learner::PipelineRun) -> Result<DiagnosticsReport> {
    let n = input.u_t.n_qubits();
    let exact = input.epsilon.is_none();
    let (big_m, m) = (run.big_m, run.m);

    let true_c1 = crate::oracle::c1_matrix(input.u_t, crate::oracle::AccessMode::Exact)?;
    let e1 = ErrorNorms::of(&(&run.algo1.c_hat - &true_c1));
    let true_f = crate::oracle::f_matrix(&run.s, m, crate::oracle::AccessMode::Exact)?;
    let e2 = (&run.f_hat - &true_f).amax();
    let true_j = crate::learner::reduced_channel(&run.s, m)?;
    let choi_err = crate::dense::spectral_norm(&(run.j_hat.data() - true_j.data()));

    let commutators = majorana_commutator_norms(&run.w, big_m)?;
    let eps0_measured = commutators.iter().copied().fold(0.0, f64::max);
    let decoupling = pauli_decoupling(&run.s, m)?;

    let mut budget = error_budget(n, input.kappa, input.t, m, e1.spectral, e2, input.path);
    // the full-system Choi comparison is only affordable below the Choi cap
    let distance = match crate::dense::check_choi_cap(n) {
        Ok(()) => Some(crate::learner::learned_vs_true_bound(input.u_t, &run.learned)?),
        Err(_) => None,
    };
    budget.measured_epsilon0 = Some(eps0_measured);
    budget.diamond_bound = distance;

    let tol = NEAR_ONE_TOL.max(e1.spectral);
    let sv = singular_value_report(&run.algo1.sigma, big_m, tol);
    let d0 = (1usize << m) as f64;

    let mut certs =
        vec![Certificate::at_least("singular_values_near_one", sv.count_near_one as f64, (2 * n - big_m) as f64)];
    if exact {
        certs.push(Certificate::at_most("majorana_decoupling", eps0_measured, EXACT_MAJORANA_TOL));
        certs.push(Certificate::at_most("pauli_decoupling", decoupling, EXACT_PAULI_TOL));
        if let Some(d) = distance {
            certs.push(Certificate::at_most("channel_distance", d, EXACT_CHANNEL_TOL));
        }
    } else {
        let eps = input.epsilon.unwrap_or(0.0);
        certs.push(Certificate::at_most("majorana_decoupling", eps0_measured, budget.epsilon0_bound + 1e-12));
        certs.push(Certificate::at_most(
            "pauli_decoupling",
            decoupling,
            pauli_factor(n, input.path) * eps0_measured + 1e-12,
        ));
        certs.push(Certificate::at_most("choi_reconstruction", choi_err, d0.powi(6) * e2 + 1e-12));
        if let Some(d) = distance {
            certs.push(Certificate::at_most("channel_distance", d, budget.t2_of_n * eps));
        }
    }
    let jp = &run.projection.choi;
    certs.push(Certificate::at_most("projected_psd", (-jp.min_eigenvalue()).max(0.0), 1e-12));
    certs.push(Certificate::at_most("projected_tp", jp.tp_deviation(), 1e-10));
    certs.push(Certificate::at_most("dilation_unitarity", run.learned.v_s.unitarity_error(), 1e-9));

    Ok(DiagnosticsReport {
        exact,
        singular_values: run.algo1.sigma.clone(),
        singular_report: sv,
        majorana_commutators: commutators,
        pauli_decoupling: decoupling,
        e1: Some(e1),
        e2_max_entry: Some(e2),
        choi_error_spectral: Some(choi_err),
        lambda_min: run.projection.lambda_min,
        mixing_p: run.projection.mixing_p,
        budget,
        certificates: certs,
    })
}
