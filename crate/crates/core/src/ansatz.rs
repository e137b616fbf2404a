//! Block/layer structure of an ansatz and causal cones of Pauli strings.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pauli::PauliString;
use crate::{Error, Result};

/// Largest register handled by the bitmask-based layout code.
pub const MAX_LAYOUT_QUBITS: usize = 64;
/// Upper limit on generated brick layouts.
pub const MAX_CHECKERBOARD_LAYERS: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub id: usize,
    /// 1-based; layer 1 acts first on `|0...0>`.
    pub layer: usize,
    pub qubits: Vec<usize>,
}

impl Block {
    pub fn mask(&self) -> u64 {
        self.qubits.iter().fold(0u64, |m, &q| m | (1u64 << q))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Line,
    Ring,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    NoQubits,
    TooManyQubits(usize),
    NoLayers,
    EmptyBlock {
        id: usize,
    },
    DuplicateQubitInBlock {
        id: usize,
        qubit: usize,
    },
    QubitOutOfRange {
        id: usize,
        qubit: usize,
    },
    LayerOutOfRange {
        id: usize,
        layer: usize,
    },
    DuplicateBlockId {
        id: usize,
    },
    SharedQubit {
        layer: usize,
        qubit: usize,
        first: usize,
        second: usize,
    },
    Uncovered {
        qubit: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            NoQubits => write!(f, "layout has no qubits"),
            TooManyQubits(n) => write!(f, "{n} qubits exceeds {MAX_LAYOUT_QUBITS}"),
            NoLayers => write!(f, "layout has no layers"),
            EmptyBlock { id } => write!(f, "block {id} has no qubits"),
            DuplicateQubitInBlock { id, qubit } => {
                write!(f, "block {id} lists qubit {qubit} twice")
            }
            QubitOutOfRange { id, qubit } => {
                write!(f, "block {id} uses out-of-range qubit {qubit}")
            }
            LayerOutOfRange { id, layer } => write!(f, "block {id} has out-of-range layer {layer}"),
            DuplicateBlockId { id } => write!(f, "block id {id} is used twice"),
            SharedQubit {
                layer,
                qubit,
                first,
                second,
            } => write!(
                f,
                "blocks {first} and {second} in layer {layer} both act on qubit {qubit}"
            ),
            Uncovered { qubit } => write!(f, "qubit {qubit} is not acted on by any block"),
        }
    }
}

/// Blocks grouped into layers. Construct through [`AnsatzLayout::new`] or
/// [`AnsatzLayout::checkerboard`], both of which validate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AnsatzLayout {
    n_qubits: usize,
    layer_count: usize,
    /// Sorted by application order: ascending layer, then ascending id.
    blocks: Vec<Block>,
}

impl AnsatzLayout {
    pub fn new(n_qubits: usize, layer_count: usize, blocks: Vec<Block>) -> Result<Self> {
        let violations = validate(n_qubits, layer_count, &blocks);
        if !violations.is_empty() {
            return Err(Error::InvalidLayout(violations));
        }
        Ok(Self::new_unchecked(n_qubits, layer_count, blocks))
    }

    fn new_unchecked(n_qubits: usize, layer_count: usize, mut blocks: Vec<Block>) -> Self {
        blocks.sort_by_key(|b| (b.layer, b.id));
        AnsatzLayout {
            n_qubits,
            layer_count,
            blocks,
        }
    }

    /// Brick-layer layout of two-qubit blocks. Odd layers pair `(0,1),(2,3),...`;
    /// even layers pair `(1,2),(3,4),...` and, on a ring, also `(n-1,0)`.
    /// Block ids count from 1 in application order.
    pub fn checkerboard(n_qubits: usize, layers: usize, topology: Topology) -> Result<Self> {
        if n_qubits < 2 || !n_qubits.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "checkerboard needs an even number of qubits >= 2, got {n_qubits}"
            )));
        }
        if n_qubits > MAX_LAYOUT_QUBITS {
            return Err(Error::TooManyQubits {
                n_qubits,
                cap: MAX_LAYOUT_QUBITS,
            });
        }
        if layers == 0 || layers > MAX_CHECKERBOARD_LAYERS {
            return Err(Error::InvalidArgument(format!(
                "checkerboard needs between 1 and {MAX_CHECKERBOARD_LAYERS} layers, got {layers}"
            )));
        }
        let mut blocks = Vec::new();
        let mut id = 1;
        for layer in 1..=layers {
            let pairs: Vec<(usize, usize)> = if layer % 2 == 1 {
                (0..n_qubits).step_by(2).map(|q| (q, q + 1)).collect()
            } else {
                let mut p: Vec<_> = (1..n_qubits - 1).step_by(2).map(|q| (q, q + 1)).collect();
                if topology == Topology::Ring {
                    p.push((n_qubits - 1, 0));
                }
                p
            };
            for (a, b) in pairs {
                blocks.push(Block {
                    id,
                    layer,
                    qubits: vec![a, b],
                });
                id += 1;
            }
        }
        Self::new(n_qubits, layers, blocks)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn layer_count(&self) -> usize {
        self.layer_count
    }

    /// Blocks in application order.
    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn block(&self, id: usize) -> Result<&Block> {
        self.blocks
            .iter()
            .find(|b| b.id == id)
            .ok_or(Error::UnknownBlock(id))
    }

    pub fn block_index(&self, id: usize) -> Result<usize> {
        self.blocks
            .iter()
            .position(|b| b.id == id)
            .ok_or(Error::UnknownBlock(id))
    }

    pub fn causal_cone(&self, h: &PauliString) -> Result<CausalCone> {
        if h.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: h.n_qubits(),
            });
        }
        let mut active = h.support_mask()?;
        let mut blocks = BTreeSet::new();
        if active == 0 {
            return Ok(CausalCone {
                blocks,
                qubits: BTreeSet::new(),
            });
        }
        for b in self.blocks.iter().rev() {
            let m = b.mask();
            if m & active != 0 {
                blocks.insert(b.id);
                active |= m;
            }
        }
        let qubits = (0..self.n_qubits)
            .filter(|q| active >> q & 1 == 1)
            .collect();
        Ok(CausalCone { blocks, qubits })
    }

    pub fn cone_contains(&self, h: &PauliString, block_id: usize) -> Result<bool> {
        self.block(block_id)?;
        Ok(self.causal_cone(h)?.blocks.contains(&block_id))
    }
}

/// All violated layout invariants; empty means the layout is valid.
///
/// Coverage is checked over the whole layout: every qubit must be acted on by
/// some block. A brick-layer layout on a line leaves the end qubits idle in
/// even layers, which is allowed.
pub fn validate(n_qubits: usize, layer_count: usize, blocks: &[Block]) -> Vec<Violation> {
    let mut out = Vec::new();
    if n_qubits == 0 {
        out.push(Violation::NoQubits);
    }
    if n_qubits > MAX_LAYOUT_QUBITS {
        out.push(Violation::TooManyQubits(n_qubits));
        return out;
    }
    if layer_count == 0 {
        out.push(Violation::NoLayers);
    }
    let mut ids = BTreeSet::new();
    let mut owner: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut covered = vec![false; n_qubits];
    for b in blocks {
        if !ids.insert(b.id) {
            out.push(Violation::DuplicateBlockId { id: b.id });
        }
        if b.qubits.is_empty() {
            out.push(Violation::EmptyBlock { id: b.id });
        }
        if b.layer == 0 || b.layer > layer_count {
            out.push(Violation::LayerOutOfRange {
                id: b.id,
                layer: b.layer,
            });
        }
        let mut seen = BTreeSet::new();
        for &q in &b.qubits {
            if q >= n_qubits {
                out.push(Violation::QubitOutOfRange { id: b.id, qubit: q });
                continue;
            }
            if !seen.insert(q) {
                out.push(Violation::DuplicateQubitInBlock { id: b.id, qubit: q });
                continue;
            }
            covered[q] = true;
            if let Some(&first) = owner.get(&(b.layer, q)) {
                out.push(Violation::SharedQubit {
                    layer: b.layer,
                    qubit: q,
                    first,
                    second: b.id,
                });
            } else {
                owner.insert((b.layer, q), b.id);
            }
        }
    }
    for (q, c) in covered.iter().enumerate() {
        if !c {
            out.push(Violation::Uncovered { qubit: q });
        }
    }
    out
}

/// Blocks that survive in `U^dagger h U`, and the qubits they span.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct CausalCone {
    pub blocks: BTreeSet<usize>,
    /// Union of the member blocks' qubits and the support of the string.
    pub qubits: BTreeSet<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LayoutJson {
    n: usize,
    layers: usize,
    blocks: Vec<Block>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckerboardSpec {
    pub n: usize,
    pub layers: usize,
    pub topology: Topology,
}

/// Layout as it appears in JSON: explicit blocks or the checkerboard shortcut.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum LayoutSpec {
    Checkerboard {
        checkerboard: CheckerboardSpec,
    },
    Explicit {
        n: usize,
        layers: usize,
        blocks: Vec<Block>,
    },
}

impl LayoutSpec {
    pub fn build(&self) -> Result<AnsatzLayout> {
        match self {
            LayoutSpec::Checkerboard { checkerboard: c } => {
                AnsatzLayout::checkerboard(c.n, c.layers, c.topology)
            }
            LayoutSpec::Explicit { n, layers, blocks } => {
                AnsatzLayout::new(*n, *layers, blocks.clone())
            }
        }
    }
}

impl AnsatzLayout {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: LayoutSpec = serde_json::from_str(text)?;
        spec.build()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&LayoutJson {
            n: self.n_qubits,
            layers: self.layer_count,
            blocks: self.blocks.clone(),
        })
        .expect("layout serialization cannot fail")
    }
}
