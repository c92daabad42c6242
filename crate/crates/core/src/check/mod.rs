//! Explicit-state LTL model checking of compiled systems.
//!
//! The product of the system with the Büchi automaton of the formula is
//! explored on the fly by a nested depth-first search. Witnesses are then
//! shortened by breadth-first search: the shortest prefix to the accepting
//! seed, followed by the shortest cycle through it.

use std::collections::hash_map::Entry;
use std::collections::{HashMap, HashSet, VecDeque};
use std::rc::Rc;

use indexmap::IndexSet;
use serde::Serialize;
use thiserror::Error;

use crate::ltl::{ltl_to_buchi_opaque, BuchiAutomaton, LtlFormula};
use crate::system::{State, StateExpr, SystemError, TransitionSystem};

pub const DEFAULT_MAX_STATES: usize = 5_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum McError {
    #[error("state budget exhausted after {explored} states (limit {limit}); raise --max-states")]
    ResourceLimit { explored: usize, limit: usize },
    #[error(transparent)]
    System(#[from] SystemError),
}

/// An ultimately periodic run `states[..loop_start] (states[loop_start..])^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LassoTrace {
    pub states: Vec<State>,
    /// Command taken to reach each state; `None` for the initial state.
    pub steps: Vec<Option<usize>>,
    pub loop_start: usize,
    /// Command leading from the last state back to `states[loop_start]`.
    pub loop_back: usize,
}

impl LassoTrace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub system_states: usize,
    pub product_states: usize,
}

/// Model checker bound to one system. System states and their successors
/// are cached across queries.
pub struct Checker<'a> {
    ts: &'a TransitionSystem,
    max_states: usize,
    states: IndexSet<State>,
    succ: Vec<Option<Box<[(u32, u32)]>>>,
    automata: HashMap<LtlFormula, Rc<BuchiAutomaton<LtlFormula>>>,
    pub last_stats: Stats,
}

/// The automaton of one conjunct, with atom indices renumbered to the
/// shared valuation of the run.
struct Component {
    aut: BuchiAutomaton<LtlFormula>,
    /// Every state is accepting, so the component imposes no liveness.
    safety: bool,
}

/// One emptiness check. The formula is split into its top-level conjuncts
/// whose automata are composed on the fly. A composite automaton state is
/// a tuple of component states followed by a degeneralization index that
/// waits for each live component to accept in turn.
struct Run {
    comps: Vec<Component>,
    live: Vec<usize>,
    tuples: IndexSet<Box<[u32]>>,
    exprs: Vec<StateExpr>,
    words: usize,
    vals: Vec<u64>,
    known: Vec<bool>,
}

impl Run {
    fn accepting(&self, q: u32) -> bool {
        let t = &self.tuples[q as usize];
        t[t.len() - 1] as usize == self.live.len()
    }

    /// Degeneralization index after leaving a composite state with
    /// component states `qs` and index `j`.
    fn next_index(&self, qs: &[u32], j: u32) -> u32 {
        let k = self.live.len() as u32;
        if j == k {
            return 0;
        }
        let mut j = j;
        while j < k && self.comps[self.live[j as usize]].aut.states[qs[self.live[j as usize]] as usize].accepting {
            j += 1;
        }
        j
    }

    /// Composite states whose component states are drawn from `choices`,
    /// all tagged with index `j`.
    fn combine(&mut self, choices: &[Vec<u32>], j: u32, out: &mut Vec<u32>) {
        if choices.iter().any(|c| c.is_empty()) {
            return;
        }
        let mut idx = vec![0usize; choices.len()];
        loop {
            let mut t: Vec<u32> = idx.iter().zip(choices).map(|(&i, c)| c[i]).collect();
            t.push(j);
            out.push(self.tuples.insert_full(t.into_boxed_slice()).0 as u32);
            let mut d = 0;
            loop {
                if d == idx.len() {
                    return;
                }
                idx[d] += 1;
                if idx[d] < choices[d].len() {
                    break;
                }
                idx[d] = 0;
                d += 1;
            }
        }
    }
}

type Node = u64;

type Path = Vec<(Node, Option<u32>)>;

type Parents = HashMap<Node, (Option<Node>, Option<u32>)>;

fn node(s: u32, q: u32) -> Node {
    (s as u64) << 32 | q as u64
}

fn split(n: Node) -> (u32, u32) {
    ((n >> 32) as u32, n as u32)
}

impl<'a> Checker<'a> {
    pub fn new(ts: &'a TransitionSystem, max_states: usize) -> Self {
        Checker {
            ts,
            max_states,
            states: IndexSet::new(),
            succ: Vec::new(),
            automata: HashMap::new(),
            last_stats: Stats::default(),
        }
    }

    pub fn system(&self) -> &'a TransitionSystem {
        self.ts
    }

    fn intern(&mut self, s: State) -> Result<u32, McError> {
        if let Some(i) = self.states.get_index_of(&s) {
            return Ok(i as u32);
        }
        if self.states.len() >= self.max_states {
            return Err(McError::ResourceLimit { explored: self.states.len() + 1, limit: self.max_states });
        }
        let (i, _) = self.states.insert_full(s);
        self.succ.push(None);
        Ok(i as u32)
    }

    fn ensure_succ(&mut self, s: u32) -> Result<(), McError> {
        if self.succ[s as usize].is_some() {
            return Ok(());
        }
        let ts = self.ts;
        let mut raw = Vec::new();
        ts.for_each_successor(&self.states[s as usize], |c, t| raw.push((c, t)));
        let mut out = Vec::with_capacity(raw.len());
        for (c, t) in raw {
            out.push((c as u32, self.intern(t)?));
        }
        self.succ[s as usize] = Some(out.into_boxed_slice());
        Ok(())
    }

    fn valuation<'r>(states: &IndexSet<State>, run: &'r mut Run, s: u32) -> &'r [u64] {
        let s = s as usize;
        if run.known.len() <= s {
            run.known.resize(s + 1, false);
            run.vals.resize((s + 1) * run.words, 0);
        }
        let (lo, hi) = (s * run.words, (s + 1) * run.words);
        if !run.known[s] {
            let st = &states[s];
            for (a, e) in run.exprs.iter().enumerate() {
                if e.eval(st) {
                    run.vals[lo + a / 64] |= 1 << (a % 64);
                }
            }
            run.known[s] = true;
        }
        &run.vals[lo..hi]
    }

    fn admits(aut: &BuchiAutomaton<LtlFormula>, q: usize, val: &[u64]) -> bool {
        aut.states[q].admits(&|a| val[a as usize / 64] >> (a % 64) & 1 == 1)
    }

    fn product_succ(&mut self, run: &mut Run, n: Node) -> Result<Vec<(Node, u32)>, McError> {
        let (s, q) = split(n);
        self.ensure_succ(s)?;
        let list = self.succ[s as usize].as_ref().unwrap();
        for &(_, t) in list.iter() {
            Self::valuation(&self.states, run, t);
        }
        let tuple = run.tuples[q as usize].clone();
        let (qs, j) = tuple.split_at(tuple.len() - 1);
        let j = run.next_index(qs, j[0]);
        let w = run.words;
        let mut out = Vec::new();
        let mut targets = Vec::new();
        for &(c, t) in list.iter() {
            let val = run.vals[t as usize * w..(t as usize + 1) * w].to_vec();
            let choices: Vec<Vec<u32>> = run
                .comps
                .iter()
                .zip(qs)
                .map(|(comp, &qi)| {
                    comp.aut.states[qi as usize]
                        .successors
                        .iter()
                        .filter(|&&r| Self::admits(&comp.aut, r, &val))
                        .map(|&r| r as u32)
                        .collect()
                })
                .collect();
            targets.clear();
            run.combine(&choices, j, &mut targets);
            out.extend(targets.iter().map(|&r| (node(t, r), c)));
        }
        Ok(out)
    }

    fn initial_nodes(&mut self, run: &mut Run) -> Result<Vec<Node>, McError> {
        let Some(init) = self.ts.initial.clone() else { return Ok(Vec::new()) };
        let s0 = self.intern(init)?;
        let val = Self::valuation(&self.states, run, s0).to_vec();
        let choices: Vec<Vec<u32>> = run
            .comps
            .iter()
            .map(|comp| {
                comp.aut.initial.iter().filter(|&&q| Self::admits(&comp.aut, q, &val)).map(|&q| q as u32).collect()
            })
            .collect();
        let mut qs = Vec::new();
        run.combine(&choices, 0, &mut qs);
        Ok(qs.into_iter().map(|q| node(s0, q)).collect())
    }

    fn automaton(&mut self, f: &LtlFormula) -> Rc<BuchiAutomaton<LtlFormula>> {
        if let Some(a) = self.automata.get(f) {
            return a.clone();
        }
        let a = Rc::new(ltl_to_buchi_opaque(f));
        self.automata.insert(f.clone(), a.clone());
        a
    }

    fn prepare(&mut self, f: &LtlFormula) -> Result<Run, McError> {
        let mut conjuncts = Vec::new();
        split_conjuncts(f, &mut conjuncts);
        let mut atoms: IndexSet<LtlFormula> = IndexSet::new();
        let mut comps = Vec::new();
        for c in conjuncts {
            let shared = self.automaton(&c);
            let mut aut = (*shared).clone();
            let map: Vec<u32> = aut.atoms.iter().map(|p| atoms.insert_full(p.clone()).0 as u32).collect();
            for st in &mut aut.states {
                for a in st.positive.iter_mut().chain(st.negative.iter_mut()) {
                    *a = map[*a as usize];
                }
            }
            let safety = aut.states.iter().all(|st| st.accepting);
            comps.push(Component { aut, safety });
        }
        let live = (0..comps.len()).filter(|&i| !comps[i].safety).collect();
        let exprs = atoms.iter().map(|p| self.ts.ltl_state_expr(p)).collect::<Result<Vec<_>, _>>()?;
        let words = exprs.len().div_ceil(64).max(1);
        Ok(Run { comps, live, tuples: IndexSet::new(), exprs, words, vals: Vec::new(), known: Vec::new() })
    }

    /// Searches for a run of the system satisfying `f`.
    pub fn exists_trace(&mut self, f: &LtlFormula) -> Result<Option<LassoTrace>, McError> {
        let mut run = self.prepare(f)?;
        let inits = self.initial_nodes(&mut run)?;
        let Some((prefix, cycle)) = self.nested_dfs(&mut run, &inits)? else { return Ok(None) };
        let trace = self.witness(&mut run, &inits, prefix, cycle)?;
        #[cfg(debug_assertions)]
        self.verify(f, &trace);
        Ok(Some(trace))
    }

    /// Checks that every run satisfies `f`; returns a counterexample otherwise.
    pub fn holds_on_all(&mut self, f: &LtlFormula) -> Result<Option<LassoTrace>, McError> {
        self.exists_trace(&LtlFormula::not(f.clone()))
    }

    /// Returns the outer DFS stack leading to an accepting node that lies
    /// on a cycle, and that cycle, both as `(node, command into node)`.
    fn nested_dfs(&mut self, run: &mut Run, inits: &[Node]) -> Result<Option<(Path, Path)>, McError> {
        let mut outer: HashSet<Node> = HashSet::new();
        let mut inner: HashSet<Node> = HashSet::new();
        let mut result = None;
        'search: for &n0 in inits {
            if !outer.insert(n0) {
                continue;
            }
            let mut stack = vec![(n0, self.product_succ(run, n0)?, 0usize)];
            while let Some(top) = stack.last_mut() {
                if top.2 < top.1.len() {
                    let m = top.1[top.2].0;
                    top.2 += 1;
                    if outer.insert(m) {
                        if outer.len() > self.max_states {
                            return Err(McError::ResourceLimit { explored: outer.len(), limit: self.max_states });
                        }
                        let succ = self.product_succ(run, m)?;
                        stack.push((m, succ, 0));
                    }
                } else {
                    let (n, _, _) = stack.last().unwrap();
                    let n = *n;
                    if run.accepting(split(n).1) {
                        if let Some(cycle) = self.inner_search(run, n, &mut inner)? {
                            let mut prefix = vec![(n0, None)];
                            for w in stack.windows(2) {
                                let (_, succ, idx) = &w[0];
                                prefix.push((w[1].0, Some(succ[idx - 1].1)));
                            }
                            result = Some((prefix, cycle));
                            break 'search;
                        }
                    }
                    stack.pop();
                }
            }
        }
        self.last_stats = Stats { system_states: self.states.len(), product_states: outer.len() };
        Ok(result)
    }

    /// Breadth-first search for a path from `seed` back to itself, skipping
    /// nodes seen by earlier inner searches.
    fn inner_search(&mut self, run: &mut Run, seed: Node, visited: &mut HashSet<Node>) -> Result<Option<Path>, McError> {
        let mut parent: Parents = HashMap::new();
        let mut queue: VecDeque<Node> = VecDeque::new();
        let mut from = seed;
        loop {
            for (m, c) in self.product_succ(run, from)? {
                if m == seed {
                    let mut path = vec![(seed, Some(c))];
                    let mut cur = from;
                    while cur != seed {
                        let (p, c) = parent[&cur];
                        path.push((cur, c));
                        cur = p.unwrap();
                    }
                    path.reverse();
                    return Ok(Some(path));
                }
                if visited.insert(m) {
                    parent.insert(m, (Some(from), Some(c)));
                    queue.push_back(m);
                }
            }
            match queue.pop_front() {
                Some(n) => from = n,
                None => return Ok(None),
            }
        }
    }

    /// Breadth-first search from `from` until `to` is dequeued, `limit`
    /// nodes are seen or every node within `max_depth` edges is expanded.
    /// Returns the dequeue order and the parent links.
    fn bfs(
        &mut self,
        run: &mut Run,
        from: &[(Node, Option<u32>)],
        to: Node,
        limit: usize,
        max_depth: usize,
    ) -> Result<(Vec<Node>, Parents), McError> {
        let mut parent: Parents = HashMap::new();
        let mut queue = VecDeque::new();
        let mut order = Vec::new();
        for &(n, c) in from {
            if let Entry::Vacant(e) = parent.entry(n) {
                e.insert((None, c));
                queue.push_back((n, 1usize));
            }
        }
        while let Some((n, depth)) = queue.pop_front() {
            order.push(n);
            if n == to || parent.len() > limit {
                break;
            }
            if depth >= max_depth {
                continue;
            }
            for (m, c) in self.product_succ(run, n)? {
                if let Entry::Vacant(e) = parent.entry(m) {
                    e.insert((Some(n), Some(c)));
                    queue.push_back((m, depth + 1));
                }
            }
        }
        Ok((order, parent))
    }

    fn path_to(parent: &Parents, to: Node) -> Vec<(Node, Option<u32>)> {
        let mut path = Vec::new();
        let mut cur = Some(to);
        while let Some(x) = cur {
            let (p, c) = parent[&x];
            path.push((x, c));
            cur = p;
        }
        path.reverse();
        path
    }

    /// Shortest cycle through `n` of at most `max_len` edges, if one is
    /// found within `limit` nodes.
    fn cycle_through(
        &mut self,
        run: &mut Run,
        n: Node,
        limit: usize,
        max_len: usize,
    ) -> Result<Option<Vec<(Node, Option<u32>)>>, McError> {
        let succ: Vec<(Node, Option<u32>)> =
            self.product_succ(run, n)?.into_iter().map(|(m, c)| (m, Some(c))).collect();
        let (_, parent) = self.bfs(run, &succ, n, limit, max_len)?;
        Ok(parent.contains_key(&n).then(|| Self::path_to(&parent, n)))
    }

    /// Builds the lasso, first trying to replace the one found by the
    /// search with a shorter one found by a bounded breadth-first search.
    fn witness(&mut self, run: &mut Run, inits: &[Node], prefix: Path, cycle: Path) -> Result<LassoTrace, McError> {
        const SHORTEN_LIMIT: usize = 50_000;
        const CANDIDATES: usize = 8;
        const CYCLE_LIMIT: usize = 20_000;
        let mut best_len = prefix.len() + cycle.len();
        let mut best = (prefix, cycle);
        let starts: Vec<(Node, Option<u32>)> = inits.iter().map(|&n| (n, None)).collect();
        let (order, parent) = self.bfs(run, &starts, Node::MAX, SHORTEN_LIMIT, best_len)?;
        let candidates: Vec<Node> =
            order.iter().copied().filter(|&n| run.accepting(split(n).1)).take(CANDIDATES).collect();
        for c in candidates {
            let prefix = Self::path_to(&parent, c);
            if prefix.len() + 1 >= best_len {
                break;
            }
            if let Some(cycle) = self.cycle_through(run, c, CYCLE_LIMIT, best_len - prefix.len() - 1)? {
                best_len = prefix.len() + cycle.len();
                best = (prefix, cycle);
            }
        }
        let (prefix, cycle) = best;
        let mut states = Vec::new();
        let mut steps = Vec::new();
        for &(n, c) in &prefix {
            states.push(self.states[split(n).0 as usize].clone());
            steps.push(c.map(|c| c as usize));
        }
        let loop_start = states.len() - 1;
        for &(n, c) in &cycle[..cycle.len() - 1] {
            states.push(self.states[split(n).0 as usize].clone());
            steps.push(c.map(|c| c as usize));
        }
        let loop_back = cycle.last().unwrap().1.expect("cycle edge has a command") as usize;
        Ok(LassoTrace { states, steps, loop_start, loop_back })
    }

    #[cfg(debug_assertions)]
    fn verify(&self, f: &LtlFormula, trace: &LassoTrace) {
        let exprs: HashMap<_, _> =
            f.atoms().into_iter().map(|p| (p.clone(), self.ts.prop_expr(&p).unwrap())).collect();
        let ok = crate::ltl::eval_lasso(f, trace.len(), trace.loop_start, &|p, i| {
            exprs[p].eval(&trace.states[i])
        });
        assert!(ok, "witness does not satisfy {f}");
    }
}

/// Flattens top-level conjunctions, distributing `G` over `&`.
fn split_conjuncts(f: &LtlFormula, out: &mut Vec<LtlFormula>) {
    match f {
        LtlFormula::True => {}
        LtlFormula::And(a, b) => {
            split_conjuncts(a, out);
            split_conjuncts(b, out);
        }
        LtlFormula::Always(g) if matches!(**g, LtlFormula::And(..)) => {
            let mut parts = Vec::new();
            split_conjuncts(g, &mut parts);
            out.extend(parts.into_iter().map(LtlFormula::always));
        }
        _ => out.push(f.clone()),
    }
}

/// One-shot convenience wrapper around [`Checker::exists_trace`].
pub fn exists_trace(
    ts: &TransitionSystem,
    f: &LtlFormula,
    max_states: usize,
) -> Result<Option<LassoTrace>, McError> {
    Checker::new(ts, max_states).exists_trace(f)
}

/// One-shot convenience wrapper around [`Checker::holds_on_all`].
pub fn holds_on_all(
    ts: &TransitionSystem,
    f: &LtlFormula,
    max_states: usize,
) -> Result<Option<LassoTrace>, McError> {
    Checker::new(ts, max_states).holds_on_all(f)
}
