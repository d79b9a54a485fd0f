use crate::spec::{AtomId, ClassId, Specification};
use num_rational::BigRational;

/// How a node was derived.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeKind {
    Epsilon,
    Atom(AtomId),
    /// `right` is false when the left alternative was taken.
    Union { right: bool, child: usize },
    Product { split: usize, left: usize, right: usize },
    /// `C = ΘA`: `mark` is the offset of the marked atom within the subtree.
    Point { child: usize, mark: usize },
    /// `ΘC = A × B`, read back as an unmarked structure of `C`.
    PointedProduct { split: usize, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Node {
    pub class: ClassId,
    pub size: usize,
    /// Offset of the subtree's first atom in the word.
    pub start: usize,
    pub kind: NodeKind,
}

/// A generated structure: derivation nodes in an arena (root first), the
/// atom word, and the exact probability of the derivation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DerivationTree {
    pub(crate) nodes: Vec<Node>,
    pub(crate) word: Vec<AtomId>,
    pub(crate) trace_probability: BigRational,
    pub(crate) product_candidates: u64,
}

impl DerivationTree {
    pub fn root(&self) -> &Node {
        &self.nodes[0]
    }

    pub fn root_class(&self) -> ClassId {
        self.nodes[0].class
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn size(&self) -> usize {
        self.word.len()
    }

    pub fn word(&self) -> &[AtomId] {
        &self.word
    }

    pub fn trace_probability(&self) -> &BigRational {
        &self.trace_probability
    }

    /// Split sizes examined by the product search while generating.
    pub fn product_candidates(&self) -> u64 {
        self.product_candidates
    }

    pub fn occurrences(&self, atom: AtomId) -> usize {
        self.word.iter().filter(|&&a| a == atom).count()
    }

    /// Word positions marked by pointing nodes.
    pub fn marks(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter_map(|n| match n.kind {
                NodeKind::Point { mark, .. } => Some(n.start + mark),
                _ => None,
            })
            .collect()
    }

    /// Parenthesized derivation over the classes written in the source;
    /// classes introduced by standardization are flattened into their parent.
    pub fn render_tree(&self, spec: &Specification) -> String {
        enum Step {
            Open(usize),
            Close,
        }
        let mut out = String::new();
        let mut stack = vec![Step::Open(0)];
        let mut need_space = false;
        while let Some(step) = stack.pop() {
            match step {
                Step::Close => {
                    out.push(')');
                    need_space = true;
                }
                Step::Open(i) => {
                    let node = &self.nodes[i];
                    let visible = spec.class(node.class).provenance.is_none();
                    if visible {
                        if need_space {
                            out.push(' ');
                        }
                        out.push_str(spec.class_name(node.class));
                        out.push('(');
                        need_space = false;
                        stack.push(Step::Close);
                    }
                    match node.kind {
                        NodeKind::Epsilon => {}
                        NodeKind::Atom(a) => {
                            if need_space {
                                out.push(' ');
                            }
                            out.push_str(&spec.atom(a).symbol);
                            need_space = true;
                        }
                        NodeKind::Union { child, .. } | NodeKind::Point { child, .. } => {
                            stack.push(Step::Open(child))
                        }
                        NodeKind::Product { left, right, .. }
                        | NodeKind::PointedProduct { left, right, .. } => {
                            stack.push(Step::Open(right));
                            stack.push(Step::Open(left));
                        }
                    }
                }
            }
        }
        out
    }
}
