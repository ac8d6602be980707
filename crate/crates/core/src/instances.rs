//! Promise-form circuits `U = G_t K_t ⋯ G_1 K_1 G_0`.
//!
//! Non-Gaussian gates are `K = exp(i s γ̃_R)` for an even-weight string `R`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::dense::{
    exp_majorana, gaussian_unitary, givens_decompose, reflection_key, CMatrix, DenseOperator, GivensDecomposition,
    OrthogonalMatrix, RMatrix,
};
use crate::error::{Error, Result};
use crate::majorana::{SparseOperator, StringKey};

/// Current circuit schema version.
pub const CIRCUIT_SCHEMA_VERSION: u64 = 1;

/// How the circuit is realised physically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Path {
    /// Parity-preserving fermionic hardware: Gaussian layers in SO(2n).
    Fermionic,
    /// Qubit hardware: Gaussian layers in O(2n).
    Qubit,
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Path::Fermionic => "fermionic",
            Path::Qubit => "qubit",
        })
    }
}

impl FromStr for Path {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fermionic" => Ok(Path::Fermionic),
            "qubit" => Ok(Path::Qubit),
            other => Err(Error::InvalidArgument(format!("unknown path '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Layer {
    Gaussian(OrthogonalMatrix),
    NonGaussian { generator: StringKey, angle: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CircuitSpec {
    n: usize,
    t: usize,
    kappa: usize,
    path: Path,
    layers: Vec<Layer>,
}

impl CircuitSpec {
    /// Build and validate. `layers` must alternate `O_0, K_1, O_1, …, K_t, O_t`.
    pub fn new(n: usize, kappa: usize, path: Path, layers: Vec<Layer>) -> Result<Self> {
        if layers.len().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "expected an odd number of alternating layers, got {}",
                layers.len()
            )));
        }
        let spec = CircuitSpec { n, t: layers.len() / 2, kappa, path, layers };
        let report = spec.validate();
        if !report.is_empty() {
            return Err(Error::InvalidArgument(report.join("; ")));
        }
        Ok(spec)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn path(&self) -> Path {
        self.path
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// `M = κ t`.
    pub fn big_m(&self) -> usize {
        self.kappa * self.t
    }

    /// `m = M / 2`.
    pub fn m(&self) -> usize {
        self.big_m() / 2
    }

    /// Weight bound `w = (κ + 1)^t`.
    pub fn weight_bound(&self) -> usize {
        (self.kappa + 1).saturating_pow(self.t as u32)
    }

    /// Promise violations; empty when the spec is valid.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        let two_n = 2 * self.n;
        if self.n == 0 {
            v.push("n must be at least 1".to_string());
        }
        if !self.kappa.is_multiple_of(2) {
            v.push(format!("kappa = {} must be even", self.kappa));
        }
        if self.kappa * self.t > two_n {
            v.push(format!("kappa*t = {} exceeds 2n = {two_n}", self.kappa * self.t));
        }
        if self.layers.len() != 2 * self.t + 1 {
            v.push(format!("expected {} layers for t = {}, found {}", 2 * self.t + 1, self.t, self.layers.len()));
        }
        for (idx, layer) in self.layers.iter().enumerate() {
            let want_gaussian = idx % 2 == 0;
            match layer {
                Layer::Gaussian(o) => {
                    if !want_gaussian {
                        v.push(format!("layer {idx}: expected a non-Gaussian gate"));
                    }
                    if o.two_n() != two_n {
                        v.push(format!("layer {idx}: matrix side {} != 2n = {two_n}", o.two_n()));
                    }
                    let dev = o.orthogonality_error();
                    if dev > 1e-10 {
                        v.push(format!("layer {idx}: not orthogonal (deviation {dev:e})"));
                    }
                    if self.path == Path::Fermionic && o.det_sign() < 0 {
                        v.push(format!("layer {idx}: determinant -1 on the fermionic path"));
                    }
                }
                Layer::NonGaussian { generator, angle } => {
                    if want_gaussian {
                        v.push(format!("layer {idx}: expected a Gaussian layer"));
                    }
                    if generator.len() != two_n {
                        v.push(format!("layer {idx}: generator length {} != 2n", generator.len()));
                    }
                    let w = generator.weight();
                    if w % 2 != 0 {
                        v.push(format!("layer {idx}: generator weight {w} is odd"));
                    }
                    if w > self.kappa {
                        v.push(format!("layer {idx}: generator weight {w} exceeds kappa = {}", self.kappa));
                    }
                    if !angle.is_finite() {
                        v.push(format!("layer {idx}: non-finite angle"));
                    }
                }
            }
        }
        v
    }

    pub fn gaussian_layers(&self) -> impl Iterator<Item = &OrthogonalMatrix> {
        self.layers.iter().filter_map(|l| match l {
            Layer::Gaussian(o) => Some(o),
            _ => None,
        })
    }

    /// Dense `U = G_t K_t ⋯ G_1 K_1 G_0`.
    pub fn assemble(&self) -> Result<DenseOperator> {
        let mut u = DenseOperator::identity(self.n);
        for layer in &self.layers {
            let g = match layer {
                Layer::Gaussian(o) => gaussian_unitary(o)?,
                Layer::NonGaussian { generator, angle } => exp_majorana(generator, *angle, true, self.n)?,
            };
            u = &g * &u;
        }
        Ok(u)
    }

    fn sparse_layers(&self) -> Result<Vec<SparseLayer>> {
        self.layers
            .iter()
            .map(|l| {
                Ok(match l {
                    Layer::Gaussian(o) => SparseLayer::Gaussian(givens_decompose(o)?),
                    Layer::NonGaussian { generator, angle } => SparseLayer::Exp(*generator, *angle),
                })
            })
            .collect()
    }

    /// Heisenberg picture `U† op U`, computed symbolically.
    pub fn heisenberg(&self, op: &SparseOperator) -> Result<SparseOperator> {
        let mut out = op.clone();
        for layer in self.sparse_layers()?.iter().rev() {
            out = layer.conjugate_adjoint(&out)?;
        }
        Ok(out)
    }

    /// `U op U†`, computed symbolically.
    pub fn schrodinger(&self, op: &SparseOperator) -> Result<SparseOperator> {
        let mut out = op.clone();
        for layer in self.sparse_layers()? {
            out = layer.conjugate(&out)?;
        }
        Ok(out)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_repr()).expect("circuit serialization is infallible")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Probe {
            version: u64,
        }
        let probe: Probe = serde_json::from_str(text)?;
        if probe.version != CIRCUIT_SCHEMA_VERSION {
            return Err(Error::Version { found: probe.version, expected: CIRCUIT_SCHEMA_VERSION });
        }
        let repr: CircuitRepr = serde_json::from_str(text)?;
        Self::from_repr(repr)
    }

    fn to_repr(&self) -> CircuitRepr {
        CircuitRepr {
            version: CIRCUIT_SCHEMA_VERSION,
            n: self.n,
            t: self.t,
            kappa: self.kappa,
            path: self.path,
            layers: self
                .layers
                .iter()
                .map(|l| match l {
                    Layer::Gaussian(o) => LayerRepr::Gaussian { matrix: o.rows() },
                    Layer::NonGaussian { generator, angle } => {
                        LayerRepr::Nongaussian { support: generator.indices(), angle: *angle }
                    }
                })
                .collect(),
        }
    }

    fn from_repr(r: CircuitRepr) -> Result<Self> {
        let two_n = 2 * r.n;
        let layers = r
            .layers
            .into_iter()
            .map(|l| {
                Ok(match l {
                    LayerRepr::Gaussian { matrix } => {
                        let k = matrix.len();
                        if matrix.iter().any(|row| row.len() != k) {
                            return Err(Error::Dimension("ragged matrix rows".into()));
                        }
                        let data = RMatrix::from_fn(k, k, |i, j| matrix[i][j]);
                        Layer::Gaussian(OrthogonalMatrix::new(data)?)
                    }
                    LayerRepr::Nongaussian { support, angle } => {
                        Layer::NonGaussian { generator: StringKey::from_indices(two_n, &support)?, angle }
                    }
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let spec = CircuitSpec::new(r.n, r.kappa, r.path, layers)?;
        if spec.t != r.t {
            return Err(Error::InvalidArgument(format!(
                "declared t = {} but found {} non-Gaussian gates",
                r.t, spec.t
            )));
        }
        Ok(spec)
    }
}

#[derive(Serialize, Deserialize)]
struct CircuitRepr {
    version: u64,
    n: usize,
    t: usize,
    kappa: usize,
    path: Path,
    layers: Vec<LayerRepr>,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum LayerRepr {
    Gaussian { matrix: Vec<Vec<f64>> },
    Nongaussian { support: Vec<usize>, angle: f64 },
}

/// A layer in the form the sparse algebra consumes.
#[derive(Clone, Debug)]
pub enum SparseLayer {
    /// `G = F^r · g_1 ⋯ g_L`.
    Gaussian(GivensDecomposition),
    /// `exp(i s γ̃_R)`.
    Exp(StringKey, f64),
}

impl SparseLayer {
    /// `L† op L`.
    pub fn conjugate_adjoint(&self, op: &SparseOperator) -> Result<SparseOperator> {
        match self {
            SparseLayer::Gaussian(dec) => {
                let mut out =
                    if dec.reflection { op.conjugate_by_string(&reflection_key(op.n()))? } else { op.clone() };
                for g in &dec.rotations {
                    out = out.conjugate_by_givens(g.i, g.j, g.theta)?;
                }
                Ok(out)
            }
            SparseLayer::Exp(r, s) => op.conjugate_by_exp_string(r, -s),
        }
    }

    /// `L op L†`.
    pub fn conjugate(&self, op: &SparseOperator) -> Result<SparseOperator> {
        match self {
            SparseLayer::Gaussian(dec) => {
                let mut out = op.clone();
                for g in dec.rotations.iter().rev() {
                    out = out.conjugate_by_givens(g.i, g.j, -g.theta)?;
                }
                if dec.reflection {
                    out = out.conjugate_by_string(&reflection_key(op.n()))?;
                }
                Ok(out)
            }
            SparseLayer::Exp(r, s) => op.conjugate_by_exp_string(r, *s),
        }
    }
}

/// Haar-random element of O(k) (or SO(k) when `special`), via QR with sign-fixed `R` diagonal.
pub fn haar_orthogonal<R: Rng + ?Sized>(k: usize, special: bool, rng: &mut R) -> OrthogonalMatrix {
    let g = RMatrix::from_fn(k, k, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..k {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    if special && q.determinant() < 0.0 {
        q.column_mut(0).neg_mut();
    }
    OrthogonalMatrix::new(q).expect("QR factor is orthogonal")
}

/// Haar-random unitary on `n` qubits.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DenseOperator {
    let d = 1usize << n;
    let g = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let qr = g.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..d {
        let rj = r[(j, j)];
        if rj.norm() > 0.0 {
            let ph = rj / rj.norm();
            for i in 0..d {
                q[(i, j)] *= ph;
            }
        }
    }
    DenseOperator::new(n, q).expect("square power-of-two side")
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Random even-weight support of weight in `2..=kappa`, uniform over all such supports.
fn random_generator<R: Rng + ?Sized>(two_n: usize, kappa: usize, rng: &mut R) -> StringKey {
    let weights: Vec<usize> = (2..=kappa.min(two_n)).step_by(2).collect();
    let counts: Vec<u128> = weights.iter().map(|&w| binomial(two_n, w)).collect();
    let total: u128 = counts.iter().sum();
    let mut pick = rng.random_range(0..total);
    let mut w = weights[0];
    for (&ww, &c) in weights.iter().zip(&counts) {
        if pick < c {
            w = ww;
            break;
        }
        pick -= c;
    }
    let idx: Vec<usize> = sample(rng, two_n, w).into_iter().map(|i| i + 1).collect();
    StringKey::from_indices(two_n, &idx).expect("sampled indices are distinct and in range")
}

/// Random promise-form circuit, deterministic in `seed`.
pub fn random_instance(n: usize, t: usize, kappa: usize, path: Path, seed: u64) -> Result<CircuitSpec> {
    if n == 0 {
        return Err(Error::Infeasible("n must be at least 1".into()));
    }
    if 2 * n > crate::majorana::MAX_MAJORANAS {
        return Err(Error::Infeasible(format!("n = {n} exceeds the supported mode count")));
    }
    if t > 0 && (kappa < 2 || !kappa.is_multiple_of(2)) {
        return Err(Error::Infeasible(format!("kappa = {kappa} must be even and at least 2")));
    }
    if kappa * t > 2 * n {
        return Err(Error::Infeasible(format!("kappa*t = {} exceeds 2n = {}", kappa * t, 2 * n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let special = path == Path::Fermionic;
    let mut layers = vec![Layer::Gaussian(haar_orthogonal(2 * n, special, &mut rng))];
    for _ in 0..t {
        let generator = random_generator(2 * n, kappa, &mut rng);
        let angle = rng.random_range(0.0..std::f64::consts::TAU);
        layers.push(Layer::NonGaussian { generator, angle });
        layers.push(Layer::Gaussian(haar_orthogonal(2 * n, special, &mut rng)));
    }
    CircuitSpec::new(n, kappa, path, layers)
}
