use super::standardize::StandardizationReport;
use super::{AtomId, ClassId, Grammar, Rule, Specification};
use crate::{Error, Result};
use num_integer::Integer;
use std::collections::HashMap;

/// Report structural properties of a standardized specification.
pub fn validate(spec: &Specification) -> Result<StandardizationReport> {
    let g = spec.grammar()?;
    let introduced_classes = spec
        .classes
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.provenance.clone().map(|p| (ClassId(i), p)))
        .collect();
    let is_context_free = g.is_context_free();
    let is_regular = is_context_free && classify_grammar(spec, &g).is_ok();
    let sccs = strongly_connected(&g);
    let sizes = size_lattice(&g);
    let gcds = sccs.iter().map(|scc| cycle_gcd(&g, &sizes, scc)).collect();
    Ok(StandardizationReport {
        introduced_classes,
        is_regular,
        is_context_free,
        scc_decomposition: sccs,
        cycle_gcd_per_scc: gcds,
    })
}

/// Every edge of the class-dependency graph.
fn edges(g: &Grammar, c: ClassId) -> Vec<ClassId> {
    g.rules[c.0].children()
}

/// Tarjan's algorithm, iterative. Components come out in reverse
/// topological order; each is sorted by class id.
pub(crate) fn strongly_connected(g: &Grammar) -> Vec<Vec<ClassId>> {
    let n = g.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut out = Vec::new();
    let mut next = 0usize;
    let succ: Vec<Vec<ClassId>> = (0..n).map(|i| edges(g, ClassId(i))).collect();
    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = next;
        low[root] = next;
        next += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(top) = call.last_mut() {
            let v = top.0;
            if top.1 < succ[v].len() {
                let w = succ[v][top.1].0;
                top.1 += 1;
                if index[w] == usize::MAX {
                    index[w] = next;
                    low[w] = next;
                    next += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(parent) = call.last() {
                    low[parent.0] = low[parent.0].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(ClassId(w));
                        if w == v {
                            break;
                        }
                    }
                    comp.sort();
                    out.push(comp);
                }
            }
        }
    }
    out
}

/// Abstraction of the set of sizes of a class: every size is congruent to
/// `rep` modulo `step`, and `step` is the gcd of all size differences
/// (`step == 0` means a single size).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Sizes {
    rep: u64,
    step: u64,
}

fn join(a: Option<Sizes>, b: Option<Sizes>) -> Option<Sizes> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(Sizes {
            rep: a.rep.min(b.rep),
            step: a.step.gcd(&b.step).gcd(&a.rep.abs_diff(b.rep)),
        }),
    }
}

fn sum(a: Option<Sizes>, b: Option<Sizes>) -> Option<Sizes> {
    Some(Sizes {
        rep: a?.rep + b?.rep,
        step: a?.step.gcd(&b?.step),
    })
}

/// Drop the size 0 from an abstraction.
fn positive(a: Option<Sizes>) -> Option<Sizes> {
    let a = a?;
    if a.rep > 0 {
        Some(a)
    } else if a.step > 0 {
        Some(Sizes {
            rep: a.step,
            step: a.step,
        })
    } else {
        None
    }
}

fn size_lattice(g: &Grammar) -> Vec<Option<Sizes>> {
    let mut s: Vec<Option<Sizes>> = vec![None; g.len()];
    loop {
        let mut changed = false;
        for (i, r) in g.rules.iter().enumerate() {
            let v = match *r {
                Rule::Epsilon => Some(Sizes { rep: 0, step: 0 }),
                Rule::Atom(_) => Some(Sizes { rep: 1, step: 0 }),
                Rule::Union(a, b) => join(s[a.0], s[b.0]),
                Rule::Product(a, b) => sum(s[a.0], s[b.0]),
                Rule::Point(a) => positive(s[a.0]),
                Rule::PointedProduct(a, b) => positive(sum(s[a.0], s[b.0])),
            };
            let merged = join(s[i], v);
            if merged != s[i] {
                s[i] = merged;
                changed = true;
            }
        }
        if !changed {
            return s;
        }
    }
}

/// Gcd of all cycle lengths, measured in atoms, within one component.
fn cycle_gcd(g: &Grammar, sizes: &[Option<Sizes>], scc: &[ClassId]) -> Option<u64> {
    let member: HashMap<usize, usize> = scc.iter().enumerate().map(|(k, c)| (c.0, k)).collect();
    // Intra-component edges with the abstracted length sets.
    let mut out_edges: Vec<Vec<(usize, Sizes)>> = vec![Vec::new(); scc.len()];
    let zero = Sizes { rep: 0, step: 0 };
    for (k, c) in scc.iter().enumerate() {
        let mut add = |to: ClassId, len: Option<Sizes>| {
            if let (Some(&j), Some(len)) = (member.get(&to.0), len) {
                out_edges[k].push((j, len));
            }
        };
        match g.rules[c.0] {
            Rule::Epsilon | Rule::Atom(_) => {}
            Rule::Union(a, b) => {
                add(a, Some(zero));
                add(b, Some(zero));
            }
            Rule::Point(a) => add(a, Some(zero)),
            Rule::Product(a, b) | Rule::PointedProduct(a, b) => {
                add(a, sizes[b.0]);
                add(b, sizes[a.0]);
            }
        }
    }
    if out_edges.iter().all(|e| e.is_empty()) {
        return None;
    }
    // Potentials along a spanning tree, then the gcd of edge slacks.
    let mut pot: Vec<Option<i128>> = vec![None; scc.len()];
    pot[0] = Some(0);
    let mut queue = vec![0usize];
    while let Some(u) = queue.pop() {
        for &(v, len) in &out_edges[u] {
            if pot[v].is_none() {
                pot[v] = Some(pot[u].unwrap() + len.rep as i128);
                queue.push(v);
            }
        }
    }
    let mut d: u64 = 0;
    for (u, es) in out_edges.iter().enumerate() {
        for &(v, len) in es {
            let (Some(pu), Some(pv)) = (pot[u], pot[v]) else { continue };
            let slack = (pu + len.rep as i128 - pv).unsigned_abs() as u64;
            d = d.gcd(&slack).gcd(&len.step);
        }
    }
    Some(d)
}

/// One state of a right-linear specification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum State {
    Class(ClassId),
    /// Accepting sink reached after an alternative that ends on an atom.
    End,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Transition {
    pub from: usize,
    pub to: usize,
    pub atom: AtomId,
}

/// Automaton view of a right-linear specification: states, one-step
/// atom-labelled transitions and accepting states.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferDescription {
    pub states: Vec<State>,
    pub transitions: Vec<Transition>,
    pub accepting: Vec<bool>,
    /// Index of the axiom's state.
    pub initial: usize,
}

impl TransferDescription {
    /// Atoms labelling transitions from state `i` to state `j`.
    pub fn entry(&self, i: usize, j: usize) -> Vec<AtomId> {
        self.transitions
            .iter()
            .filter(|t| t.from == i && t.to == j)
            .map(|t| t.atom)
            .collect()
    }

    pub fn state_index(&self, s: State) -> Option<usize> {
        self.states.iter().position(|&x| x == s)
    }
}

#[derive(Debug, Clone, Copy)]
enum Alt {
    Accept,
    Step(AtomId, State),
}

/// Read a right-linear specification as an automaton.
pub fn classify_regular(spec: &Specification) -> Result<TransferDescription> {
    let g = spec.grammar()?;
    classify_grammar(spec, &g)
}

fn classify_grammar(spec: &Specification, g: &Grammar) -> Result<TransferDescription> {
    let mut memo: HashMap<usize, Vec<Alt>> = HashMap::new();
    let mut states = vec![State::Class(g.axiom)];
    let mut index: HashMap<State, usize> = HashMap::from([(State::Class(g.axiom), 0)]);
    let mut transitions = Vec::new();
    let mut accepting = Vec::new();
    let mut k = 0;
    while k < states.len() {
        let alts = match states[k] {
            State::End => vec![Alt::Accept],
            State::Class(c) => alternatives(spec, g, c, &mut memo)?,
        };
        let mut acc = false;
        for alt in alts {
            match alt {
                Alt::Accept => acc = true,
                Alt::Step(a, to) => {
                    let j = *index.entry(to).or_insert_with(|| {
                        states.push(to);
                        states.len() - 1
                    });
                    transitions.push(Transition { from: k, to: j, atom: a });
                }
            }
        }
        accepting.push(acc);
        k += 1;
    }
    Ok(TransferDescription {
        states,
        transitions,
        accepting,
        initial: 0,
    })
}

fn alternatives(
    spec: &Specification,
    g: &Grammar,
    c: ClassId,
    memo: &mut HashMap<usize, Vec<Alt>>,
) -> Result<Vec<Alt>> {
    if let Some(v) = memo.get(&c.0) {
        return Ok(v.clone());
    }
    let name = |x: ClassId| spec.class_name(x).to_string();
    let v = match g.rules[c.0] {
        Rule::Epsilon => vec![Alt::Accept],
        Rule::Atom(a) => vec![Alt::Step(a, State::End)],
        Rule::Union(a, b) => {
            let mut v = alternatives(spec, g, a, memo)?;
            v.extend(alternatives(spec, g, b, memo)?);
            v
        }
        Rule::Product(a, b) => match (g.rules[a.0], g.rules[b.0]) {
            (Rule::Atom(x), _) => vec![Alt::Step(x, State::Class(b))],
            (_, Rule::Epsilon) => alternatives(spec, g, a, memo)?,
            _ => {
                return Err(Error::NotRegular(format!(
                    "`{}` is a product whose left factor `{}` is not an atom",
                    name(c),
                    name(a)
                )))
            }
        },
        Rule::Point(_) | Rule::PointedProduct(..) => {
            return Err(Error::NotRegular(format!("`{}` uses pointing", name(c))))
        }
    };
    memo.insert(c.0, v.clone());
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spec::{parse_spec, standardize};

    fn report(src: &str) -> (Specification, StandardizationReport) {
        standardize(&parse_spec(src).unwrap()).unwrap()
    }

    #[test]
    fn fibonacci_report() {
        let (_, r) = report("S -> a S | b b S | _ ;");
        assert!(r.is_regular && r.is_context_free);
        let cyclic: Vec<_> = r.cyclic_components().collect();
        assert_eq!(cyclic.len(), 1);
        assert_eq!(cyclic[0].1, 1);
    }

    #[test]
    fn motzkin_report() {
        let (_, r) = report("S -> a S b S | c S | _ ;");
        assert!(!r.is_regular);
        assert!(r.is_context_free);
        assert!(r.is_aperiodic());
    }

    #[test]
    fn even_cycles() {
        let (_, r) = report("S -> a a S | _ ;");
        let g: Vec<u64> = r.cyclic_components().map(|(_, g)| g).collect();
        assert_eq!(g, vec![2]);
        assert!(!r.is_aperiodic());
    }

    #[test]
    fn context_free_periodicity() {
        // Dyck-like words only have even length.
        let (_, r) = report("S -> a S b S | _ ;");
        let g: Vec<u64> = r.cyclic_components().map(|(_, g)| g).collect();
        assert_eq!(g, vec![2]);
    }

    #[test]
    fn fibonacci_transfer() {
        let (s, _) = report("S -> a S | b b S | _ ;");
        let t = classify_regular(&s).unwrap();
        assert_eq!(t.states.len(), 2);
        let a = s.find_atom("a").unwrap();
        let b = s.find_atom("b").unwrap();
        assert_eq!(t.entry(0, 0), vec![a]);
        assert_eq!(t.entry(0, 1), vec![b]);
        assert_eq!(t.entry(1, 0), vec![b]);
        assert_eq!(t.accepting, vec![true, false]);
    }

    #[test]
    fn motzkin_not_regular() {
        let (s, _) = report("S -> a S b S | c S | _ ;");
        assert!(matches!(classify_regular(&s), Err(Error::NotRegular(_))));
    }

    #[test]
    fn renaming_and_final_atoms() {
        let (s, r) = report("S -> A | x ; A -> a A | b ;");
        assert!(r.is_regular);
        let t = classify_regular(&s).unwrap();
        let end = t.state_index(State::End).unwrap();
        assert!(t.accepting[end]);
        assert!(!t.accepting[0]);
    }
}
