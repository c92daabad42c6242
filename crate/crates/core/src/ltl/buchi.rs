//! LTL to Büchi automaton translation.
//!
//! The formula is put in negation normal form and expanded with the
//! classical on-the-fly tableau. The result is a state-labelled generalized
//! automaton with one acceptance set per until subformula, which is then
//! degeneralized with a round-robin counter.

use std::collections::{BTreeSet, HashMap};

use indexmap::IndexSet;

use super::formula::{LtlFormula, Prop};

type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Nnf {
    True,
    False,
    Lit(u32, bool),
    And(NodeId, NodeId),
    Or(NodeId, NodeId),
    Until(NodeId, NodeId),
    Release(NodeId, NodeId),
}

#[derive(Default)]
struct Arena {
    nodes: IndexSet<Nnf>,
    atoms: IndexSet<LtlFormula>,
    /// Treat propositional subformulas as single atoms.
    opaque_props: bool,
}

impl Arena {
    fn intern(&mut self, n: Nnf) -> NodeId {
        self.nodes.insert_full(n).0 as NodeId
    }

    fn get(&self, id: NodeId) -> Nnf {
        self.nodes[id as usize]
    }

    fn build(&mut self, f: &LtlFormula, positive: bool) -> NodeId {
        use LtlFormula::*;
        if self.opaque_props && f.is_propositional() && !matches!(f, True | False | Not(_)) {
            let lit = Nnf::Lit(self.atoms.insert_full(f.clone()).0 as u32, positive);
            return self.intern(lit);
        }
        let node = match (f, positive) {
            (True, true) | (False, false) => Nnf::True,
            (True, false) | (False, true) => Nnf::False,
            (Atom(_), pol) => Nnf::Lit(self.atoms.insert_full(f.clone()).0 as u32, pol),
            (Not(a), pol) => return self.build(a, !pol),
            (And(a, b), true) | (Or(a, b), false) => {
                Nnf::And(self.build(a, positive), self.build(b, positive))
            }
            (Or(a, b), true) | (And(a, b), false) => {
                Nnf::Or(self.build(a, positive), self.build(b, positive))
            }
            (Implies(a, b), true) => Nnf::Or(self.build(a, false), self.build(b, true)),
            (Implies(a, b), false) => Nnf::And(self.build(a, true), self.build(b, false)),
            (Until(a, b), true) | (Release(a, b), false) => {
                Nnf::Until(self.build(a, positive), self.build(b, positive))
            }
            (Release(a, b), true) | (Until(a, b), false) => {
                Nnf::Release(self.build(a, positive), self.build(b, positive))
            }
            (Eventually(a), true) | (Always(a), false) => {
                let t = self.intern(Nnf::True);
                Nnf::Until(t, self.build(a, positive))
            }
            (Always(a), true) | (Eventually(a), false) => {
                let ff = self.intern(Nnf::False);
                Nnf::Release(ff, self.build(a, positive))
            }
        };
        self.intern(node)
    }
}

/// A Büchi automaton whose states carry a conjunction of literals. A run
/// reads a letter at each state it enters, including the initial one.
#[derive(Debug, Clone)]
pub struct BuchiAutomaton<A = Prop> {
    pub atoms: Vec<A>,
    pub states: Vec<BuchiState>,
    pub initial: Vec<usize>,
}

#[derive(Debug, Clone, Default)]
pub struct BuchiState {
    /// Indices into `atoms` that must hold.
    pub positive: Vec<u32>,
    /// Indices into `atoms` that must not hold.
    pub negative: Vec<u32>,
    pub successors: Vec<usize>,
    pub accepting: bool,
}

impl BuchiState {
    pub fn admits(&self, val: &dyn Fn(u32) -> bool) -> bool {
        self.positive.iter().all(|&a| val(a)) && self.negative.iter().all(|&a| !val(a))
    }
}

impl<A> BuchiAutomaton<A> {
    /// Transition triples `(from, constraint of target, to)`.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, &BuchiState, usize)> + '_ {
        self.states.iter().enumerate().flat_map(move |(i, s)| {
            s.successors.iter().map(move |&j| (i, &self.states[j], j))
        })
    }

    /// Decides whether the lasso word is accepted. `holds(a, i)` gives the
    /// value of atom index `a` at position `i`.
    pub fn accepts_lasso(
        &self,
        len: usize,
        loop_start: usize,
        holds: &dyn Fn(u32, usize) -> bool,
    ) -> bool {
        let succ = |i: usize| if i + 1 < len { i + 1 } else { loop_start };
        let ok = |q: usize, i: usize| self.states[q].admits(&|a| holds(a, i));
        let index = |i: usize, q: usize| i * self.states.len() + q;
        let total = len * self.states.len();
        let mut edges: Vec<Vec<usize>> = vec![Vec::new(); total];
        for i in 0..len {
            for q in 0..self.states.len() {
                if ok(q, i) {
                    for &r in &self.states[q].successors {
                        if ok(r, succ(i)) {
                            edges[index(i, q)].push(index(succ(i), r));
                        }
                    }
                }
            }
        }
        let mut reach = vec![false; total];
        let mut stack: Vec<usize> =
            self.initial.iter().filter(|&&q| ok(q, 0)).map(|&q| index(0, q)).collect();
        for &s in &stack {
            reach[s] = true;
        }
        while let Some(s) = stack.pop() {
            for &t in &edges[s] {
                if !reach[t] {
                    reach[t] = true;
                    stack.push(t);
                }
            }
        }
        (0..total).filter(|&s| reach[s] && self.states[s % self.states.len()].accepting).any(
            |s| {
                let mut seen = vec![false; total];
                let mut stack = edges[s].clone();
                while let Some(t) = stack.pop() {
                    if t == s {
                        return true;
                    }
                    if !seen[t] {
                        seen[t] = true;
                        stack.extend(edges[t].iter().copied());
                    }
                }
                false
            },
        )
    }
}

const INIT: usize = usize::MAX;

#[derive(Clone)]
struct Pending {
    incoming: BTreeSet<usize>,
    new: BTreeSet<NodeId>,
    old: BTreeSet<NodeId>,
    next: BTreeSet<NodeId>,
}

struct Tableau {
    incoming: Vec<BTreeSet<usize>>,
    old: Vec<BTreeSet<NodeId>>,
    index: HashMap<(BTreeSet<NodeId>, BTreeSet<NodeId>), usize>,
}

fn negation(arena: &Arena, id: NodeId) -> Option<NodeId> {
    match arena.get(id) {
        Nnf::Lit(a, pol) => arena.nodes.get_index_of(&Nnf::Lit(a, !pol)).map(|i| i as NodeId),
        _ => None,
    }
}

fn expand(arena: &Arena, root: NodeId) -> Tableau {
    let mut tab = Tableau { incoming: Vec::new(), old: Vec::new(), index: HashMap::new() };
    let mut stack = vec![Pending {
        incoming: BTreeSet::from([INIT]),
        new: BTreeSet::from([root]),
        old: BTreeSet::new(),
        next: BTreeSet::new(),
    }];
    'outer: while let Some(mut n) = stack.pop() {
        while let Some(eta) = n.new.pop_first() {
            if n.old.contains(&eta) {
                continue;
            }
            match arena.get(eta) {
                Nnf::False => continue 'outer,
                Nnf::True => {}
                Nnf::Lit(..) => {
                    if negation(arena, eta).is_some_and(|neg| n.old.contains(&neg)) {
                        continue 'outer;
                    }
                    n.old.insert(eta);
                }
                Nnf::And(a, b) => {
                    n.old.insert(eta);
                    for x in [a, b] {
                        if !n.old.contains(&x) {
                            n.new.insert(x);
                        }
                    }
                }
                Nnf::Or(a, b) | Nnf::Until(a, b) | Nnf::Release(a, b) => {
                    n.old.insert(eta);
                    let mut left = n.clone();
                    let (l_new, l_next, r_new): (Vec<NodeId>, Option<NodeId>, Vec<NodeId>) =
                        match arena.get(eta) {
                            Nnf::Or(..) => (vec![a], None, vec![b]),
                            Nnf::Until(..) => (vec![a], Some(eta), vec![b]),
                            _ => (vec![b], Some(eta), vec![a, b]),
                        };
                    for x in l_new {
                        if !left.old.contains(&x) {
                            left.new.insert(x);
                        }
                    }
                    if let Some(x) = l_next {
                        left.next.insert(x);
                    }
                    for x in r_new {
                        if !n.old.contains(&x) {
                            n.new.insert(x);
                        }
                    }
                    stack.push(left);
                }
            }
        }
        let key = (n.old.clone(), n.next.clone());
        if let Some(&k) = tab.index.get(&key) {
            tab.incoming[k].extend(n.incoming);
        } else {
            let id = tab.old.len();
            tab.index.insert(key, id);
            tab.incoming.push(n.incoming);
            tab.old.push(n.old);
            stack.push(Pending {
                incoming: BTreeSet::from([id]),
                new: n.next,
                old: BTreeSet::new(),
                next: BTreeSet::new(),
            });
        }
    }
    tab
}

/// Builds a Büchi automaton accepting exactly the models of `f`.
pub fn ltl_to_buchi(f: &LtlFormula) -> BuchiAutomaton {
    let aut = construct(f, false);
    let atoms = aut
        .atoms
        .into_iter()
        .map(|a| match a {
            LtlFormula::Atom(p) => p,
            _ => unreachable!("only atoms are opaque"),
        })
        .collect();
    BuchiAutomaton { atoms, states: aut.states, initial: aut.initial }
}

/// Like [`ltl_to_buchi`], but every maximal propositional subformula is a
/// single atom. The tableau then only branches on temporal structure.
pub fn ltl_to_buchi_opaque(f: &LtlFormula) -> BuchiAutomaton<LtlFormula> {
    construct(f, true)
}

fn construct(f: &LtlFormula, opaque_props: bool) -> BuchiAutomaton<LtlFormula> {
    let mut arena = Arena { opaque_props, ..Arena::default() };
    let root = arena.build(&f.simplify(), true);
    let tab = expand(&arena, root);
    let n = tab.old.len();

    let untils: Vec<(NodeId, NodeId)> = arena
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(i, node)| match node {
            Nnf::Until(_, b) => Some((i as NodeId, *b)),
            _ => None,
        })
        .collect();
    // in_set[k][q]: tableau node q belongs to acceptance set k.
    let in_set: Vec<Vec<bool>> = untils
        .iter()
        .map(|&(u, b)| (0..n).map(|q| tab.old[q].contains(&b) || !tab.old[q].contains(&u)).collect())
        .collect();

    let mut succ: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut initial = Vec::new();
    for q in 0..n {
        for &p in &tab.incoming[q] {
            if p == INIT {
                initial.push(q);
            } else {
                succ[p].push(q);
            }
        }
    }
    let labels: Vec<(Vec<u32>, Vec<u32>)> = tab
        .old
        .iter()
        .map(|old| {
            let (mut pos, mut neg) = (Vec::new(), Vec::new());
            for &id in old {
                if let Nnf::Lit(a, pol) = arena.get(id) {
                    if pol { pos.push(a) } else { neg.push(a) }
                }
            }
            (pos, neg)
        })
        .collect();

    // Degeneralize over reachable (q, k) pairs.
    let m = untils.len().max(1);
    let accepts = |q: usize, k: usize| untils.is_empty() || in_set[k][q];
    let mut ids: IndexSet<(usize, usize)> = IndexSet::new();
    let mut states: Vec<BuchiState> = Vec::new();
    let mut work = Vec::new();
    let mut init_ids = Vec::new();
    for &q in &initial {
        let (i, fresh) = ids.insert_full((q, 0));
        if fresh {
            work.push(i);
        }
        init_ids.push(i);
    }
    while let Some(i) = work.pop() {
        let (q, k) = ids[i];
        let nk = if accepts(q, k) { (k + 1) % m } else { k };
        let mut out = Vec::new();
        for &r in &succ[q] {
            let (j, fresh) = ids.insert_full((r, nk));
            if fresh {
                work.push(j);
            }
            out.push(j);
        }
        if states.len() < ids.len() {
            states.resize(ids.len(), BuchiState::default());
        }
        states[i] = BuchiState {
            positive: labels[q].0.clone(),
            negative: labels[q].1.clone(),
            successors: out,
            accepting: k == m - 1 && accepts(q, k),
        };
    }
    states.resize(ids.len(), BuchiState::default());
    init_ids.sort_unstable();
    init_ids.dedup();
    reduce(BuchiAutomaton { atoms: arena.atoms.into_iter().collect(), states, initial: init_ids })
}

/// Drops states from which no accepting cycle is reachable, then merges
/// bisimilar states.
fn reduce<A>(aut: BuchiAutomaton<A>) -> BuchiAutomaton<A> {
    let n = aut.states.len();
    let reach_from = |q: usize| {
        let mut seen = vec![false; n];
        let mut stack = aut.states[q].successors.clone();
        while let Some(r) = stack.pop() {
            if !seen[r] {
                seen[r] = true;
                stack.extend(aut.states[r].successors.iter().copied());
            }
        }
        seen
    };
    let good: Vec<bool> = (0..n).map(|q| aut.states[q].accepting && reach_from(q)[q]).collect();
    let mut productive = good.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for q in 0..n {
            if !productive[q] && aut.states[q].successors.iter().any(|&r| productive[r]) {
                productive[q] = true;
                changed = true;
            }
        }
    }

    // Coarsest partition with equal labels, acceptance and successor classes.
    let mut class: Vec<usize> = vec![0; n];
    let mut count = 0;
    loop {
        let mut sigs: HashMap<(&[u32], &[u32], bool, usize, BTreeSet<usize>), usize> = HashMap::new();
        let mut next = vec![usize::MAX; n];
        for q in (0..n).filter(|&q| productive[q]) {
            let st = &aut.states[q];
            let succ: BTreeSet<usize> =
                st.successors.iter().filter(|&&r| productive[r]).map(|&r| class[r]).collect();
            let key = (&st.positive[..], &st.negative[..], st.accepting, class[q], succ);
            let len = sigs.len();
            next[q] = *sigs.entry(key).or_insert(len);
        }
        let stable = sigs.len() == count;
        count = sigs.len();
        class = next;
        if stable {
            break;
        }
    }
    let mut states = vec![BuchiState::default(); count];
    let mut filled = vec![false; count];
    for q in (0..n).filter(|&q| productive[q]) {
        let c = class[q];
        if filled[c] {
            continue;
        }
        filled[c] = true;
        let st = &aut.states[q];
        let mut successors: Vec<usize> =
            st.successors.iter().filter(|&&r| productive[r]).map(|&r| class[r]).collect();
        successors.sort_unstable();
        successors.dedup();
        states[c] = BuchiState {
            positive: st.positive.clone(),
            negative: st.negative.clone(),
            successors,
            accepting: st.accepting,
        };
    }
    let mut initial: Vec<usize> =
        aut.initial.iter().filter(|&&q| productive[q]).map(|&q| class[q]).collect();
    initial.sort_unstable();
    initial.dedup();
    BuchiAutomaton { atoms: aut.atoms, states, initial }
}
