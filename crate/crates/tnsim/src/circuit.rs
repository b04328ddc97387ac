//! Circuit intermediate representation: gates on a line of qubits, circuit
//! generators, and a JSON interchange format.
//!
//! Gates are dense unitaries on one qubit or on two adjacent qubits
//! (linear-nearest-neighbor connectivity). For a two-qubit gate on sites
//! `(i, i+1)` the 4x4 matrix acts on the basis `|q_i q_{i+1}>` with `q_i`
//! the more significant bit.

use ndarray::Array2;
use ndarray_linalg::QR;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Max absolute deviation of `U^H U` from the identity tolerated by
/// validation.
pub const UNITARITY_TOL: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("circuit must have at least one qubit")]
    NoQubits,
    #[error("op {index}: site {site} out of range for {n_qubits} qubits")]
    SiteOutOfRange {
        index: usize,
        site: usize,
        n_qubits: usize,
    },
    #[error("op {index}: two-qubit gate must act on adjacent ascending sites, got {a},{b}")]
    NotAdjacent { index: usize, a: usize, b: usize },
    #[error("op {index}: expected a {expect}x{expect} matrix, got {rows}x{cols}")]
    BadMatrixShape {
        index: usize,
        expect: usize,
        rows: usize,
        cols: usize,
    },
    #[error("op {index}: matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { index: usize, deviation: f64 },
    #[error("op {index}: kind {kind:?} does not match {n_sites} site(s)")]
    KindMismatch {
        index: usize,
        kind: String,
        n_sites: usize,
    },
    #[error("unknown gate kind {kind:?}")]
    UnknownKind { kind: String },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// A gate on one site or two adjacent sites.
#[derive(Clone, Debug, PartialEq)]
pub struct GateOp {
    /// One site, or `[i, i+1]` in ascending order.
    pub sites: Vec<usize>,
    /// `2^k x 2^k` unitary for `k` sites.
    pub matrix: Array2<Complex64>,
    pub label: String,
}

impl GateOp {
    pub fn one_q(site: usize, matrix: Array2<Complex64>, label: impl Into<String>) -> Self {
        Self {
            sites: vec![site],
            matrix,
            label: label.into(),
        }
    }

    pub fn two_q(left_site: usize, matrix: Array2<Complex64>, label: impl Into<String>) -> Self {
        Self {
            sites: vec![left_site, left_site + 1],
            matrix,
            label: label.into(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn is_two_q(&self) -> bool {
        self.sites.len() == 2
    }

    /// Conjugate transpose of the gate.
    pub fn dagger(&self) -> Self {
        Self {
            sites: self.sites.clone(),
            matrix: self.matrix.t().mapv(|v| v.conj()),
            label: format!("{}^dag", self.label),
        }
    }

    fn kind_str(&self) -> &'static str {
        if self.sites.len() == 1 {
            "1q"
        } else {
            "2q"
        }
    }
}

/// Max absolute deviation of `m^H m` from the identity.
pub fn unitarity_deviation(m: &Array2<Complex64>) -> f64 {
    let gram = m.t().mapv(|v| v.conj()).dot(m);
    let dim = m.shape()[0];
    let mut dev: f64 = 0.0;
    for i in 0..dim {
        for j in 0..dim {
            let expect = if i == j {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::default()
            };
            dev = dev.max((gram[[i, j]] - expect).norm());
        }
    }
    dev
}

/// Generator provenance and layer structure carried alongside the ops.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CircuitMetadata {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<usize>,
    /// Exclusive end index into `ops` for each layer, ascending.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub layer_ends: Vec<usize>,
}

/// A gate sequence on `n_qubits` qubits in a line.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_qubits: usize,
    pub metadata: CircuitMetadata,
    pub ops: Vec<GateOp>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            metadata: CircuitMetadata::default(),
            ops: Vec::new(),
        }
    }

    pub fn two_qubit_count(&self) -> usize {
        self.ops.iter().filter(|op| op.is_two_q()).count()
    }

    /// Layer boundaries as exclusive op indices. Circuits without layer
    /// metadata count as a single layer.
    pub fn layer_ends(&self) -> Vec<usize> {
        if self.metadata.layer_ends.is_empty() {
            vec![self.ops.len()]
        } else {
            self.metadata.layer_ends.clone()
        }
    }

    /// Indices and ops violating linear-nearest-neighbor adjacency.
    /// The circuit is LNN-valid iff the list is empty.
    pub fn lnn_violations(&self) -> Vec<(usize, &GateOp)> {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, op)| op.sites.len() == 2 && op.sites[1] != op.sites[0] + 1)
            .collect()
    }

    /// Check site ranges, linear-nearest-neighbor adjacency, matrix shapes,
    /// and unitarity of every gate.
    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.n_qubits == 0 {
            return Err(CircuitError::NoQubits);
        }
        for (index, op) in self.ops.iter().enumerate() {
            for &site in &op.sites {
                if site >= self.n_qubits {
                    return Err(CircuitError::SiteOutOfRange {
                        index,
                        site,
                        n_qubits: self.n_qubits,
                    });
                }
            }
            let expect = match op.sites.len() {
                1 => 2,
                2 => {
                    if op.sites[1] != op.sites[0] + 1 {
                        return Err(CircuitError::NotAdjacent {
                            index,
                            a: op.sites[0],
                            b: op.sites[1],
                        });
                    }
                    4
                }
                n => {
                    return Err(CircuitError::KindMismatch {
                        index,
                        kind: format!("{n} sites"),
                        n_sites: n,
                    })
                }
            };
            let (rows, cols) = (op.matrix.shape()[0], op.matrix.shape()[1]);
            if rows != expect || cols != expect {
                return Err(CircuitError::BadMatrixShape {
                    index,
                    expect,
                    rows,
                    cols,
                });
            }
            let deviation = unitarity_deviation(&op.matrix);
            if deviation > UNITARITY_TOL {
                return Err(CircuitError::NotUnitary { index, deviation });
            }
        }
        Ok(())
    }

    /// The inverse circuit: ops reversed, each conjugate-transposed.
    /// Layer boundaries are mirrored accordingly.
    pub fn adjoint(&self) -> Circuit {
        let ops: Vec<GateOp> = self.ops.iter().rev().map(GateOp::dagger).collect();
        let layer_ends = {
            let ends = self.layer_ends();
            let mut sizes: Vec<usize> = Vec::with_capacity(ends.len());
            let mut prev = 0;
            for &e in &ends {
                sizes.push(e - prev);
                prev = e;
            }
            sizes.reverse();
            sizes
                .iter()
                .scan(0usize, |acc, &s| {
                    *acc += s;
                    Some(*acc)
                })
                .collect()
        };
        Circuit {
            n_qubits: self.n_qubits,
            metadata: CircuitMetadata {
                generator: self.metadata.generator.as_ref().map(|g| format!("{g}-adjoint")),
                seed: self.metadata.seed,
                depth: self.metadata.depth,
                layer_ends,
            },
            ops,
        }
    }

    /// This circuit followed by its adjoint. The composite maps any input
    /// state back to itself.
    pub fn mirrored(&self) -> Circuit {
        let adj = self.adjoint();
        let offset = self.ops.len();
        let mut layer_ends = self.layer_ends();
        layer_ends.extend(adj.layer_ends().iter().map(|e| e + offset));
        let mut ops = self.ops.clone();
        ops.extend(adj.ops);
        Circuit {
            n_qubits: self.n_qubits,
            metadata: CircuitMetadata {
                generator: self.metadata.generator.as_ref().map(|g| format!("{g}-mirror")),
                seed: self.metadata.seed,
                depth: self.metadata.depth.map(|d| 2 * d),
                layer_ends,
            },
            ops,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serialization cannot fail")
    }

    /// Parse and validate a circuit from its JSON form.
    pub fn from_json(text: &str) -> Result<Circuit, CircuitError> {
        let circuit: Circuit = serde_json::from_str(text)?;
        circuit.validate()?;
        Ok(circuit)
    }
}

#[derive(Serialize, Deserialize)]
struct GateOpWire {
    kind: String,
    sites: Vec<usize>,
    matrix: Vec<Vec<[f64; 2]>>,
    label: String,
}

#[derive(Serialize, Deserialize)]
struct CircuitWire {
    n_qubits: usize,
    metadata: CircuitMetadata,
    ops: Vec<GateOpWire>,
}

impl Serialize for Circuit {
    fn serialize<S>(&self, serializer: S) -> Result<S::Ok, S::Error>
    where
        S: serde::Serializer,
    {
        let wire = CircuitWire {
            n_qubits: self.n_qubits,
            metadata: self.metadata.clone(),
            ops: self
                .ops
                .iter()
                .map(|op| GateOpWire {
                    kind: op.kind_str().to_string(),
                    sites: op.sites.clone(),
                    matrix: op
                        .matrix
                        .rows()
                        .into_iter()
                        .map(|row| row.iter().map(|v| [v.re, v.im]).collect())
                        .collect(),
                    label: op.label.clone(),
                })
                .collect(),
        };
        wire.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Circuit {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error as _;
        let wire = CircuitWire::deserialize(deserializer)?;
        let mut ops = Vec::with_capacity(wire.ops.len());
        for (index, w) in wire.ops.into_iter().enumerate() {
            let expect_sites = match w.kind.as_str() {
                "1q" => 1,
                "2q" => 2,
                _ => {
                    return Err(D::Error::custom(CircuitError::UnknownKind { kind: w.kind }))
                }
            };
            if w.sites.len() != expect_sites {
                return Err(D::Error::custom(CircuitError::KindMismatch {
                    index,
                    kind: w.kind,
                    n_sites: w.sites.len(),
                }));
            }
            let dim = 1usize << expect_sites;
            if w.matrix.len() != dim || w.matrix.iter().any(|row| row.len() != dim) {
                return Err(D::Error::custom(CircuitError::BadMatrixShape {
                    index,
                    expect: dim,
                    rows: w.matrix.len(),
                    cols: w.matrix.first().map_or(0, |r| r.len()),
                }));
            }
            let matrix = Array2::from_shape_fn((dim, dim), |(i, j)| {
                Complex64::new(w.matrix[i][j][0], w.matrix[i][j][1])
            });
            ops.push(GateOp {
                sites: w.sites,
                matrix,
                label: w.label,
            });
        }
        Ok(Circuit {
            n_qubits: wire.n_qubits,
            metadata: wire.metadata,
            ops,
        })
    }
}

/// Haar-distributed random unitary: QR of a complex Ginibre matrix with the
/// R-diagonal phases folded into Q so the distribution is exactly invariant.
pub fn haar_unitary(dim: usize, rng: &mut impl Rng) -> Array2<Complex64> {
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let z = Array2::from_shape_fn((dim, dim), |_| {
        Complex64::new(
            rng.sample::<f64, _>(StandardNormal) * scale,
            rng.sample::<f64, _>(StandardNormal) * scale,
        )
    });
    let (mut q, r) = z.qr().expect("QR of a Ginibre sample");
    for j in 0..dim {
        let d = r[[j, j]];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[[i, j]] *= phase;
        }
    }
    q
}

fn brickwork_pairs(n_qubits: usize, offset: usize) -> impl Iterator<Item = usize> {
    (offset..n_qubits.saturating_sub(1)).step_by(2)
}

/// Brickwork of Haar-random two-qubit gates: `depth` layers, even layers
/// pairing `(0,1),(2,3),...`, odd layers `(1,2),(3,4),...`.
pub fn gen_haar_layers(n_qubits: usize, depth: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut circuit = Circuit::new(n_qubits);
    for layer in 0..depth {
        for left in brickwork_pairs(n_qubits, layer % 2) {
            let u = haar_unitary(4, &mut rng);
            circuit
                .ops
                .push(GateOp::two_q(left, u, format!("haar2q[{layer}]@{left}")));
        }
        circuit.metadata.layer_ends.push(circuit.ops.len());
    }
    circuit.metadata.generator = Some("haar".to_string());
    circuit.metadata.seed = Some(seed);
    circuit.metadata.depth = Some(depth);
    circuit
}

/// Alternating random circuit: odd layers (1-based) apply a Haar-random
/// single-qubit gate to every qubit, even layers a brickwork of Haar-random
/// two-qubit gates whose pairing parity alternates between even layers.
pub fn gen_cheng_random(n_qubits: usize, depth: usize, seed: u64) -> Circuit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut circuit = Circuit::new(n_qubits);
    let mut two_q_layers = 0usize;
    for layer in 1..=depth {
        if layer % 2 == 1 {
            for site in 0..n_qubits {
                let u = haar_unitary(2, &mut rng);
                circuit
                    .ops
                    .push(GateOp::one_q(site, u, format!("haar1q[{layer}]@{site}")));
            }
        } else {
            let offset = two_q_layers % 2;
            two_q_layers += 1;
            for left in brickwork_pairs(n_qubits, offset) {
                let u = haar_unitary(4, &mut rng);
                circuit
                    .ops
                    .push(GateOp::two_q(left, u, format!("haar2q[{layer}]@{left}")));
            }
        }
        circuit.metadata.layer_ends.push(circuit.ops.len());
    }
    circuit.metadata.generator = Some("cheng".to_string());
    circuit.metadata.seed = Some(seed);
    circuit.metadata.depth = Some(depth);
    circuit
}

/// A brickwork circuit followed by its inverse; see [`Circuit::mirrored`].
pub fn gen_mirror(n_qubits: usize, half_depth: usize, seed: u64) -> Circuit {
    gen_haar_layers(n_qubits, half_depth, seed).mirrored()
}
