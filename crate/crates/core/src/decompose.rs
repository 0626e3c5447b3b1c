//! Rectangular (Clements-style) decomposition of unitaries into mesh
//! settings, plus the phase-pushing sweep used to program any brick wall
//! whose crossing sequence matches an abstract circuit.
//!
//! Convention: a crossing with parameters `(θ, φ)` acts on its
//! `(lower, upper)` modes as
//!
//! ```text
//! T(θ, φ) = [[e^{iφ} cos θ, -sin θ],
//!            [e^{iφ} sin θ,  cos θ]]
//! ```
//!
//! so `θ = 0` is the bar state and `θ = π/2` the cross state. A mesh
//! realizes `diag(e^{iω}) · L_d ··· L_1` where `L_c` embeds the crossings
//! of column `c` and `ω` are the output phases.

use std::collections::{BTreeMap, HashMap};
use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;

use crate::circumvent::DefectSpec;
use crate::error::{Error, Result};
use crate::mesh::{ColumnParity, Crossing, LayoutKind, Mesh, MeshLayout, MeshSettings, MziSetting};
use crate::simulate;

/// Complex field-amplitude transfer matrix; `out = M · in`.
pub type TransferMatrix = DMatrix<Complex64>;

/// Entries below this magnitude count as already nulled.
const NULL_TOLERANCE: f64 = 1e-14;

/// Inputs to `clements_decompose` must be unitary to this tolerance.
pub const UNITARITY_TOLERANCE: f64 = 1e-8;

pub fn crossing_matrix(theta: f64, phi: f64) -> Matrix2<Complex64> {
    let (s, c) = theta.sin_cos();
    let e = Complex64::from_polar(1.0, phi);
    Matrix2::new(e * c, Complex64::new(-s, 0.0), e * s, Complex64::new(c, 0.0))
}

/// `max |U†U − I|`.
pub fn unitarity_deviation(u: &TransferMatrix) -> f64 {
    let gram = u.adjoint() * u;
    gram.iter()
        .enumerate()
        .map(|(k, z)| {
            let (i, j) = (k % gram.nrows(), k / gram.nrows());
            let target = if i == j { 1.0 } else { 0.0 };
            (z - Complex64::new(target, 0.0)).norm()
        })
        .fold(0.0, f64::max)
}

/// Max-norm of `a - b`.
pub fn max_abs_diff(a: &TransferMatrix, b: &TransferMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn unit(z: Complex64) -> Complex64 {
    let r = z.norm();
    if r == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        z / r
    }
}

/// One nulling step recorded in physical order.
#[derive(Debug, Clone, Copy)]
struct Rotation {
    lower: usize,
    theta: f64,
    phi: f64,
}

/// Decomposes an `n×n` unitary into settings for an aligned `Rectangular(n)` mesh.
pub fn clements_decompose(u: &TransferMatrix) -> Result<MeshSettings> {
    let n = check_square_unitary(u)?;
    let (rotations, diagonal) = clements_rotations(u);
    let mesh = Mesh::rectangular(n)?;
    let placed = place_by_layer(&mesh, &rotations)?;
    Ok(MeshSettings {
        crossings: placed,
        output_phases: diagonal.iter().map(|z| crate::mesh::wrap_phase(z.arg())).collect(),
    })
}

/// Decomposes a unitary for any rectangular layout, aligned or shifted.
pub fn decompose(u: &TransferMatrix, layout: MeshLayout) -> Result<MeshSettings> {
    if layout.kind != LayoutKind::Rectangular {
        return Err(Error::InvalidLayout(format!(
            "{layout} is not universal; only rectangular layouts can be decomposed onto"
        )));
    }
    let n = check_square_unitary(u)?;
    if n != layout.modes {
        return Err(Error::DimensionMismatch {
            expected: layout.modes,
            found: n,
        });
    }
    match layout.parity {
        ColumnParity::Aligned => clements_decompose(u),
        ColumnParity::Shifted => decompose_shifted(u, layout),
    }
}

fn check_square_unitary(u: &TransferMatrix) -> Result<usize> {
    if u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch {
            expected: u.nrows(),
            found: u.ncols(),
        });
    }
    if u.nrows() == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let deviation = unitarity_deviation(u);
    if deviation.is_nan() || deviation > UNITARITY_TOLERANCE {
        return Err(Error::NonUnitary { deviation });
    }
    Ok(u.nrows())
}

/// Alternating column/row nulling; returns rotations in physical order and
/// the residual diagonal.
fn clements_rotations(u: &TransferMatrix) -> (Vec<Rotation>, Vec<Complex64>) {
    let n = u.nrows();
    let mut work = u.clone();
    let mut right: Vec<Rotation> = Vec::new();
    let mut left: Vec<Rotation> = Vec::new();

    for i in 1..n {
        if i % 2 == 1 {
            for j in 0..i {
                let (row, col) = (n - 1 - j, i - 1 - j);
                let (a, b) = (work[(row, col)], work[(row, col + 1)]);
                let (theta, phi) = if a.norm() < NULL_TOLERANCE {
                    (0.0, 0.0)
                } else {
                    (a.norm().atan2(b.norm()), a.arg() - b.arg())
                };
                apply_right_inverse(&mut work, col, theta, phi);
                right.push(Rotation { lower: col, theta, phi });
            }
        } else {
            for j in 1..=i {
                let (row, col) = (n + j - i - 1, j - 1);
                let (a, b) = (work[(row - 1, col)], work[(row, col)]);
                let (theta, phi) = if b.norm() < NULL_TOLERANCE {
                    (0.0, 0.0)
                } else {
                    (b.norm().atan2(a.norm()), (-b).arg() - a.arg())
                };
                apply_left(&mut work, row - 1, theta, phi);
                left.push(Rotation {
                    lower: row - 1,
                    theta,
                    phi,
                });
            }
        }
    }

    let mut diagonal: Vec<Complex64> = (0..n).map(|k| unit(work[(k, k)])).collect();
    // Push each inverted left rotation through the diagonal, innermost first.
    let mut pushed = Vec::with_capacity(left.len());
    for rot in left.iter().rev() {
        let (d1, d2) = (diagonal[rot.lower], diagonal[rot.lower + 1]);
        let (phi, new_d1) = if rot.theta == 0.0 {
            (0.0, Complex64::from_polar(1.0, -rot.phi) * d1)
        } else {
            ((-d1 / d2).arg(), -Complex64::from_polar(1.0, -rot.phi) * d2)
        };
        diagonal[rot.lower] = new_d1;
        pushed.push(Rotation {
            lower: rot.lower,
            theta: rot.theta,
            phi,
        });
    }
    // Physical order: right rotations as recorded, then the pushed ones outermost last.
    right.extend(pushed);
    (right, diagonal)
}

fn apply_right_inverse(work: &mut TransferMatrix, col: usize, theta: f64, phi: f64) {
    let t = crossing_matrix(theta, phi).adjoint();
    for r in 0..work.nrows() {
        let (x, y) = (work[(r, col)], work[(r, col + 1)]);
        work[(r, col)] = x * t[(0, 0)] + y * t[(1, 0)];
        work[(r, col + 1)] = x * t[(0, 1)] + y * t[(1, 1)];
    }
}

fn apply_left(work: &mut TransferMatrix, row: usize, theta: f64, phi: f64) {
    let t = crossing_matrix(theta, phi);
    for c in 0..work.ncols() {
        let (x, y) = (work[(row, c)], work[(row + 1, c)]);
        work[(row, c)] = t[(0, 0)] * x + t[(0, 1)] * y;
        work[(row + 1, c)] = t[(1, 0)] * x + t[(1, 1)] * y;
    }
}

/// Assigns rotations to crossings by as-soon-as-possible layering.
fn place_by_layer(mesh: &Mesh, rotations: &[Rotation]) -> Result<BTreeMap<Crossing, MziSetting>> {
    let layers = asap_layers(mesh.modes(), rotations.iter().map(|r| r.lower));
    let template = template_by_layer(mesh);
    let mut placed = BTreeMap::new();
    for (rot, layer) in rotations.iter().zip(layers) {
        let crossing = template.get(&(layer, rot.lower + 1)).copied().ok_or_else(|| {
            Error::TemplateMismatch(format!(
                "rotation on wires ({}, {}) at layer {layer}",
                rot.lower + 1,
                rot.lower + 2
            ))
        })?;
        placed.insert(crossing, MziSetting::new(rot.theta, crate::mesh::wrap_phase(rot.phi)));
    }
    if placed.len() != mesh.crossings().len() {
        return Err(Error::TemplateMismatch(format!(
            "{} rotations for {} crossings",
            placed.len(),
            mesh.crossings().len()
        )));
    }
    Ok(placed)
}

/// ASAP layer (1-based) of each nearest-neighbour op on `wires` wires.
pub(crate) fn asap_layers(wires: usize, lowers: impl IntoIterator<Item = usize>) -> Vec<usize> {
    let mut last = vec![0usize; wires + 1];
    lowers
        .into_iter()
        .map(|k| {
            let layer = last[k].max(last[k + 1]) + 1;
            last[k] = layer;
            last[k + 1] = layer;
            layer
        })
        .collect()
}

/// `(ASAP layer, lower mode)` → crossing for the mesh's own crossings.
pub(crate) fn template_by_layer(mesh: &Mesh) -> HashMap<(usize, usize), Crossing> {
    let layers = asap_layers(mesh.modes(), mesh.crossings().iter().map(|x| x.lower_mode - 1));
    mesh.crossings()
        .iter()
        .zip(layers)
        .map(|(&x, layer)| ((layer, x.lower_mode), x))
        .collect()
}

fn decompose_shifted(u: &TransferMatrix, layout: MeshLayout) -> Result<MeshSettings> {
    let n = layout.modes;
    let mesh = Mesh::new(layout)?;
    if n == 1 {
        return Ok(MeshSettings {
            crossings: BTreeMap::new(),
            output_phases: vec![crate::mesh::wrap_phase(u[(0, 0)].arg())],
        });
    }
    let one = Complex64::new(1.0, 0.0);
    let swap = Matrix2::new(Complex64::default(), one, one, Complex64::default());
    let circuit = if n % 2 == 1 {
        // Odd sizes: the shifted mesh is the mode-reversed aligned mesh.
        let mirrored = TransferMatrix::from_fn(n, n, |i, j| u[(n - 1 - i, n - 1 - j)]);
        let base = clements_decompose(&mirrored)?;
        let elements = base
            .crossings
            .iter()
            .map(|(x, s)| {
                let key = Crossing::new(x.column, n - x.lower_mode);
                (key, swap * crossing_matrix(s.theta, s.phi) * swap)
            })
            .collect();
        let mut output: Vec<Complex64> = base
            .output_phases
            .iter()
            .map(|&w| Complex64::from_polar(1.0, w))
            .collect();
        output.reverse();
        AbstractCircuit {
            input: vec![one; n],
            elements,
            output,
        }
    } else {
        // Even sizes: the shifted mesh is the column-reversed aligned mesh.
        let transposed = u.transpose();
        let base = clements_decompose(&transposed)?;
        let elements = base
            .crossings
            .iter()
            .map(|(x, s)| {
                let key = Crossing::new(n + 1 - x.column, x.lower_mode);
                (key, crossing_matrix(s.theta, s.phi).transpose())
            })
            .collect();
        AbstractCircuit {
            input: base
                .output_phases
                .iter()
                .map(|&w| Complex64::from_polar(1.0, w))
                .collect(),
            elements,
            output: vec![one; n],
        }
    };
    let ops: Vec<SweepOp> = mesh
        .crossings()
        .iter()
        .map(|&x| SweepOp::Tunable {
            key: x,
            physical: x,
            lower_wire: x.lower_mode - 1,
        })
        .collect();
    let realized = circuit.realize(&ops)?;
    Ok(MeshSettings {
        crossings: realized.crossings,
        output_phases: realized.output_phases,
    })
}

/// Splits a 2×2 unitary as `diag(α, β) · T(θ, φ)`.
pub(crate) fn factor_output_phases(w: &Matrix2<Complex64>) -> (Complex64, Complex64, MziSetting) {
    let s = ((w[(0, 1)].norm_sqr() + w[(1, 0)].norm_sqr()) / 2.0).sqrt();
    let c = ((w[(0, 0)].norm_sqr() + w[(1, 1)].norm_sqr()) / 2.0).sqrt();
    let theta = s.atan2(c).clamp(0.0, FRAC_PI_2);
    let (alpha, beta, e_phi) = if c >= s {
        let beta = unit(w[(1, 1)]);
        let alpha = if w[(0, 1)].norm() < NULL_TOLERANCE {
            unit(w[(0, 0)])
        } else {
            unit(-w[(0, 1)])
        };
        (alpha, beta, unit(w[(0, 0)]) / alpha)
    } else {
        let alpha = unit(-w[(0, 1)]);
        let beta = if w[(1, 1)].norm() < NULL_TOLERANCE {
            unit(w[(1, 0)])
        } else {
            unit(w[(1, 1)])
        };
        (alpha, beta, unit(w[(1, 0)]) / beta)
    };
    let phi = crate::mesh::wrap_phase(e_phi.arg());
    (alpha, beta, MziSetting::new(theta, phi))
}

/// An ideal circuit `diag(output) · G_k ··· G_1 · diag(input)` whose 2×2
/// elements are keyed by template crossing.
#[derive(Debug, Clone)]
pub(crate) struct AbstractCircuit {
    pub input: Vec<Complex64>,
    pub elements: HashMap<Crossing, Matrix2<Complex64>>,
    pub output: Vec<Complex64>,
}

/// One step of the hardware sequence the abstract circuit is realized on.
#[derive(Debug, Clone, Copy)]
pub(crate) enum SweepOp {
    /// A programmable crossing acting on wires `(lower_wire, lower_wire + 1)`.
    Tunable {
        key: Crossing,
        physical: Crossing,
        lower_wire: usize,
    },
    /// A constant unit-modulus factor picked up by a wire.
    Phase { wire: usize, factor: Complex64 },
}

pub(crate) struct Realized {
    pub crossings: BTreeMap<Crossing, MziSetting>,
    /// Output phase per wire.
    pub output_phases: Vec<f64>,
}

impl AbstractCircuit {
    pub fn from_settings(mesh: &Mesh, settings: &MeshSettings) -> Result<Self> {
        settings.validate(mesh)?;
        Ok(AbstractCircuit {
            input: vec![Complex64::new(1.0, 0.0); mesh.modes()],
            elements: settings
                .crossings
                .iter()
                .map(|(&x, s)| (x, crossing_matrix(s.theta, s.phi)))
                .collect(),
            output: settings
                .output_phases
                .iter()
                .map(|&w| Complex64::from_polar(1.0, w))
                .collect(),
        })
    }

    /// Programs the tunable ops so that the hardware sequence equals the
    /// abstract circuit, pushing leftover phases forward to the outputs.
    ///
    /// Ops must visit the keyed elements in an order compatible with the
    /// abstract circuit's wire dependencies.
    pub fn realize(&self, ops: &[SweepOp]) -> Result<Realized> {
        // Invariant: abstract prefix = diag(pending) · hardware prefix.
        let mut pending = self.input.clone();
        let mut crossings = BTreeMap::new();
        let mut used = 0usize;
        for op in ops {
            match *op {
                SweepOp::Phase { wire, factor } => pending[wire] /= factor,
                SweepOp::Tunable {
                    key,
                    physical,
                    lower_wire,
                } => {
                    let g = self
                        .elements
                        .get(&key)
                        .ok_or_else(|| Error::TemplateMismatch(format!("no abstract element for {key}")))?;
                    let w = g * Matrix2::from_diagonal(&nalgebra::Vector2::new(
                        pending[lower_wire],
                        pending[lower_wire + 1],
                    ));
                    let (alpha, beta, setting) = factor_output_phases(&w);
                    pending[lower_wire] = alpha;
                    pending[lower_wire + 1] = beta;
                    crossings.insert(physical, setting);
                    used += 1;
                }
            }
        }
        if used != self.elements.len() {
            return Err(Error::TemplateMismatch(format!(
                "{used} ops for {} abstract elements",
                self.elements.len()
            )));
        }
        let output_phases = self
            .output
            .iter()
            .zip(&pending)
            .map(|(o, p)| crate::mesh::wrap_phase((o * p).arg()))
            .collect();
        Ok(Realized {
            crossings,
            output_phases,
        })
    }
}

/// Forward model: column products, output phases, then defect realizations.
pub fn reconstruct(mesh: &Mesh, settings: &MeshSettings, defects: &[DefectSpec]) -> Result<TransferMatrix> {
    simulate::transfer(mesh, settings, defects)
}
