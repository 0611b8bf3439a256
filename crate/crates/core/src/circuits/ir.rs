use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::gate::{validate_placement, Gate};
use crate::error::{Error, Result};

/// One circuit instruction.
#[derive(Debug, Clone, PartialEq)]
pub enum Op {
    Gate {
        gate: Gate,
        targets: Vec<usize>,
        controls: Vec<usize>,
    },
    /// Projective Z-basis measurement of `qubit`, written to `clbit`.
    Measure {
        qubit: usize,
        clbit: usize,
    },
}

impl Op {
    pub fn touched_qubits(&self) -> impl Iterator<Item = usize> + '_ {
        let (a, b): (&[usize], &[usize]) = match self {
            Op::Gate { targets, controls, .. } => (targets, controls),
            Op::Measure { qubit, .. } => (std::slice::from_ref(qubit), &[]),
        };
        a.iter().chain(b).copied()
    }
}

/// An ordered list of gate applications and measurements on a fixed register.
///
/// Circuits validate every instruction on insertion, so a constructed
/// circuit always has in-range indices and disjoint targets and controls.
#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    n_clbits: usize,
    ops: Vec<Op>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_clbits: usize) -> Self {
        Circuit { n_qubits, n_clbits, ops: Vec::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_clbits(&self) -> usize {
        self.n_clbits
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn has_measurements(&self) -> bool {
        self.ops.iter().any(|op| matches!(op, Op::Measure { .. }))
    }

    /// True when no gate follows any measurement.
    pub fn measurements_are_terminal(&self) -> bool {
        match self.ops.iter().position(|op| matches!(op, Op::Measure { .. })) {
            None => true,
            Some(first) => self.ops[first..].iter().all(|op| matches!(op, Op::Measure { .. })),
        }
    }

    pub fn push(&mut self, gate: Gate, targets: &[usize], controls: &[usize]) -> Result<&mut Self> {
        validate_placement(self.n_qubits, &gate, targets, controls)?;
        self.ops.push(Op::Gate { gate, targets: targets.to_vec(), controls: controls.to_vec() });
        Ok(self)
    }

    pub fn measure(&mut self, qubit: usize, clbit: usize) -> Result<&mut Self> {
        if qubit >= self.n_qubits {
            return Err(Error::Index(format!("qubit {qubit} out of range for {} qubits", self.n_qubits)));
        }
        if clbit >= self.n_clbits {
            return Err(Error::Index(format!("clbit {clbit} out of range for {} clbits", self.n_clbits)));
        }
        self.ops.push(Op::Measure { qubit, clbit });
        Ok(self)
    }

    // Builder shorthands for circuits assembled from known-good indices.
    // They panic on invalid placements.

    pub fn h(&mut self, q: usize) -> &mut Self {
        self.gate(Gate::H, &[q], &[])
    }

    pub fn x(&mut self, q: usize) -> &mut Self {
        self.gate(Gate::X, &[q], &[])
    }

    pub fn cx(&mut self, control: usize, target: usize) -> &mut Self {
        self.gate(Gate::X, &[target], &[control])
    }

    pub fn cy(&mut self, control: usize, target: usize) -> &mut Self {
        self.gate(Gate::Y, &[target], &[control])
    }

    pub fn rz(&mut self, theta: f64, q: usize) -> &mut Self {
        self.gate(Gate::Rz(theta), &[q], &[])
    }

    pub fn cphase(&mut self, theta: f64, control: usize, target: usize) -> &mut Self {
        self.gate(Gate::Phase(theta), &[target], &[control])
    }

    pub fn swap(&mut self, a: usize, b: usize) -> &mut Self {
        self.gate(Gate::Swap, &[a, b], &[])
    }

    /// Push `gate` on `targets` with `controls`, panicking on an invalid placement.
    pub fn gate(&mut self, gate: Gate, targets: &[usize], controls: &[usize]) -> &mut Self {
        if let Err(e) = self.push(gate, targets, controls) {
            panic!("invalid gate placement: {e}");
        }
        self
    }

    /// Append `other`, sending its qubit `q` to `qubit_map[q]` and clbit `c`
    /// to `clbit_map[c]`.
    pub fn compose(&mut self, other: &Circuit, qubit_map: &[usize], clbit_map: &[usize]) -> Result<&mut Self> {
        if qubit_map.len() != other.n_qubits {
            return Err(Error::Index(format!(
                "qubit map has {} entries for a {}-qubit circuit",
                qubit_map.len(),
                other.n_qubits
            )));
        }
        for op in &other.ops {
            match op {
                Op::Gate { gate, targets, controls } => {
                    let t: Vec<usize> = targets.iter().map(|&q| qubit_map[q]).collect();
                    let c: Vec<usize> = controls.iter().map(|&q| qubit_map[q]).collect();
                    self.push(gate.clone(), &t, &c)?;
                }
                Op::Measure { qubit, clbit } => {
                    let cb = *clbit_map
                        .get(*clbit)
                        .ok_or_else(|| Error::Index(format!("clbit {clbit} missing from clbit map")))?;
                    self.measure(qubit_map[*qubit], cb)?;
                }
            }
        }
        Ok(self)
    }

    /// The adjoint circuit. Fails if the circuit measures.
    pub fn inverse(&self) -> Result<Circuit> {
        let mut ops = Vec::with_capacity(self.ops.len());
        for op in self.ops.iter().rev() {
            match op {
                Op::Gate { gate, targets, controls } => {
                    ops.push(Op::Gate { gate: gate.inverse(), targets: targets.clone(), controls: controls.clone() })
                }
                Op::Measure { .. } => {
                    return Err(Error::Unsupported("cannot invert a circuit with measurements".into()))
                }
            }
        }
        Ok(Circuit { n_qubits: self.n_qubits, n_clbits: self.n_clbits, ops })
    }

    pub fn gate_count(&self) -> GateCount {
        let mut count = GateCount::default();
        for op in &self.ops {
            match op {
                Op::Gate { gate, controls, .. } => {
                    let key = format!("{}{}", "c".repeat(controls.len()), gate.name());
                    *count.by_kind.entry(key).or_insert(0) += 1;
                    count.total += 1;
                }
                Op::Measure { .. } => count.measurements += 1,
            }
        }
        count
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&CircuitDoc::from(self))?)
    }

    pub fn from_json(text: &str) -> Result<Circuit> {
        serde_json::from_str::<CircuitDoc>(text)?.try_into()
    }
}

/// Gate tally. Keys are the gate name prefixed by one `c` per control
/// (`cx` is a CNOT, `crz` a controlled Z rotation).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct GateCount {
    pub by_kind: BTreeMap<String, usize>,
    /// Gate operations, measurements excluded.
    pub total: usize,
    pub measurements: usize,
}

impl GateCount {
    pub fn get(&self, kind: &str) -> usize {
        self.by_kind.get(kind).copied().unwrap_or(0)
    }
}

// JSON document layout:
//
// { "n_qubits": 3, "n_classical_bits": 1,
//   "ops": [ { "kind": "h", "targets": [0] },
//            { "kind": "rz", "angle": 0.5, "targets": [1], "controls": [0] },
//            { "kind": "u1", "matrix": [[re, im], ...], "targets": [2] },
//            { "kind": "measure", "targets": [0], "clbit": 0 } ] }
//
// `matrix` is row-major, only present for u1/u2.

#[derive(Serialize, Deserialize)]
struct CircuitDoc {
    n_qubits: usize,
    n_classical_bits: usize,
    ops: Vec<OpDoc>,
}

#[derive(Serialize, Deserialize)]
struct OpDoc {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    angle: Option<f64>,
    targets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    controls: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    clbit: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    matrix: Option<Vec<[f64; 2]>>,
}

impl From<&Circuit> for CircuitDoc {
    fn from(c: &Circuit) -> Self {
        let ops = c
            .ops
            .iter()
            .map(|op| match op {
                Op::Gate { gate, targets, controls } => OpDoc {
                    kind: gate.name().to_string(),
                    angle: gate.angle(),
                    targets: targets.clone(),
                    controls: controls.clone(),
                    clbit: None,
                    matrix: match gate {
                        Gate::Unitary1(m) => Some(m.iter().flatten().map(|z| [z.re, z.im]).collect()),
                        Gate::Unitary2(m) => Some(m.iter().flatten().map(|z| [z.re, z.im]).collect()),
                        _ => None,
                    },
                },
                Op::Measure { qubit, clbit } => OpDoc {
                    kind: "measure".into(),
                    angle: None,
                    targets: vec![*qubit],
                    controls: vec![],
                    clbit: Some(*clbit),
                    matrix: None,
                },
            })
            .collect();
        CircuitDoc { n_qubits: c.n_qubits, n_classical_bits: c.n_clbits, ops }
    }
}

impl TryFrom<CircuitDoc> for Circuit {
    type Error = Error;

    fn try_from(doc: CircuitDoc) -> Result<Circuit> {
        let mut c = Circuit::new(doc.n_qubits, doc.n_classical_bits);
        for op in doc.ops {
            if op.kind == "measure" {
                let [q] = op.targets[..] else {
                    return Err(Error::Input("measure takes exactly one target".into()));
                };
                let clbit = op.clbit.ok_or_else(|| Error::Input("measure without clbit".into()))?;
                c.measure(q, clbit)?;
                continue;
            }
            let gate = match op.kind.as_str() {
                "u1" | "u2" => {
                    let dim = if op.kind == "u1" { 2 } else { 4 };
                    let m = op.matrix.ok_or_else(|| Error::Input(format!("{} without matrix", op.kind)))?;
                    if m.len() != dim * dim {
                        return Err(Error::Input(format!("{} matrix needs {} entries", op.kind, dim * dim)));
                    }
                    let z: Vec<Complex64> = m.iter().map(|[re, im]| Complex64::new(*re, *im)).collect();
                    if dim == 2 {
                        Gate::Unitary1(Box::new([[z[0], z[1]], [z[2], z[3]]]))
                    } else {
                        let mut u = [[Complex64::new(0.0, 0.0); 4]; 4];
                        for (i, v) in z.into_iter().enumerate() {
                            u[i / 4][i % 4] = v;
                        }
                        Gate::Unitary2(Box::new(u))
                    }
                }
                kind => Gate::from_name(kind, op.angle)?,
            };
            c.push(gate, &op.targets, &op.controls)?;
        }
        Ok(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_circuit_counts_zero() {
        let c = Circuit::new(3, 0);
        assert_eq!(c.gate_count().total, 0);
        assert_eq!(c.gate_count().measurements, 0);
    }

    #[test]
    fn counts_split_by_controls() {
        let mut c = Circuit::new(3, 1);
        c.h(0).cx(0, 1).cx(1, 2).gate(Gate::Rz(0.2), &[2], &[0]);
        c.measure(0, 0).unwrap();
        let g = c.gate_count();
        assert_eq!(g.total, 4);
        assert_eq!(g.get("cx"), 2);
        assert_eq!(g.get("crz"), 1);
        assert_eq!(g.get("h"), 1);
        assert_eq!(g.measurements, 1);
    }

    #[test]
    fn push_rejects_bad_indices() {
        let mut c = Circuit::new(2, 1);
        assert!(c.push(Gate::X, &[0], &[0]).is_err());
        assert!(c.push(Gate::X, &[3], &[]).is_err());
        assert!(c.measure(0, 1).is_err());
        assert!(c.is_empty());
    }

    #[test]
    fn terminal_measurement_detection() {
        let mut c = Circuit::new(2, 2);
        c.h(0);
        c.measure(0, 0).unwrap();
        c.measure(1, 1).unwrap();
        assert!(c.measurements_are_terminal());
        c.h(1);
        assert!(!c.measurements_are_terminal());
    }

    #[test]
    fn inverse_refuses_measurements() {
        let mut c = Circuit::new(1, 1);
        c.measure(0, 0).unwrap();
        assert!(matches!(c.inverse(), Err(Error::Unsupported(_))));
    }

    #[test]
    fn json_roundtrip_with_custom_matrix() {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        let mut c = Circuit::new(3, 1);
        c.h(0).cphase(0.25, 0, 1).gate(Gate::Rz(-1.5), &[2], &[0, 1]);
        c.gate(Gate::Unitary1(Box::new([[zero, one], [one, zero]])), &[1], &[]);
        c.measure(0, 0).unwrap();
        let text = c.to_json().unwrap();
        assert!(text.contains("\"kind\": \"rz\""));
        assert_eq!(Circuit::from_json(&text).unwrap(), c);
    }

    #[test]
    fn json_rejects_unknown_kinds() {
        let doc = r#"{"n_qubits":1,"n_classical_bits":0,"ops":[{"kind":"toffoli","targets":[0]}]}"#;
        assert!(Circuit::from_json(doc).is_err());
        let doc = r#"{"n_qubits":1,"n_classical_bits":0,"ops":[{"kind":"rz","targets":[0]}]}"#;
        assert!(Circuit::from_json(doc).is_err());
    }
}
