//! Minimal 2-SAT solver over an explicit implication graph.
//!
//! Literals are `2 * var + polarity` with polarity 1 meaning "true". Each
//! clause `(a | b)` contributes the edges `!a -> b` and `!b -> a`, labelled
//! so that refutations can be replayed as forcing chains.

pub type Lit = u32;

pub fn lit(var: u32, value: bool) -> Lit {
    2 * var + u32::from(value)
}

pub fn negate(l: Lit) -> Lit {
    l ^ 1
}

pub struct TwoSat<L> {
    n_vars: u32,
    // adjacency: edges[from] = [(to, label)]
    edges: Vec<Vec<(Lit, L)>>,
}

pub enum Solution<L> {
    /// `assignment[var]` is the chosen truth value.
    Satisfiable(Vec<bool>),
    /// A variable forced both ways, with the implication chain
    /// `lit(var, false) ->* lit(var, true) ->* lit(var, false)`.
    Unsatisfiable { var: u32, chain: Vec<L> },
}

impl<L: Clone> TwoSat<L> {
    pub fn new(n_vars: u32) -> Self {
        TwoSat {
            n_vars,
            edges: vec![Vec::new(); 2 * n_vars as usize],
        }
    }

    pub fn add_implication(&mut self, from: Lit, to: Lit, label: L) {
        self.edges[from as usize].push((to, label));
    }

    /// Forces `l` to hold.
    pub fn pin(&mut self, l: Lit, label: L) {
        self.add_implication(negate(l), l, label);
    }

    pub fn solve(&self) -> Solution<L> {
        let comp = self.condense();
        for var in 0..self.n_vars {
            let pos = lit(var, true) as usize;
            let neg = lit(var, false) as usize;
            if comp[pos] == comp[neg] {
                let mut chain = self
                    .implication_chain(lit(var, false), lit(var, true))
                    .expect("same SCC implies a connecting path");
                let back = self
                    .implication_chain(lit(var, true), lit(var, false))
                    .expect("same SCC implies a connecting path");
                chain.extend(back);
                return Solution::Unsatisfiable { var, chain };
            }
        }
        // Tarjan numbers SCCs in reverse topological order: lower ids are
        // closer to the sinks of the condensation, so a literal whose
        // component id is smaller than its negation's is safe to satisfy.
        let assignment = (0..self.n_vars)
            .map(|var| comp[lit(var, true) as usize] < comp[lit(var, false) as usize])
            .collect();
        Solution::Satisfiable(assignment)
    }

    /// Iterative Tarjan SCC over the implication graph.
    fn condense(&self) -> Vec<u32> {
        const UNSET: u32 = u32::MAX;
        let n = self.edges.len();
        let mut comp = vec![UNSET; n];
        let mut low = vec![0u32; n];
        let mut t_in = vec![UNSET; n];
        let mut timer = 0;
        let mut n_comp = 0;
        let mut scc_stack: Vec<u32> = Vec::new();
        let mut on_stack = vec![false; n];
        // (node, next edge position)
        let mut call_stack: Vec<(u32, usize)> = Vec::new();

        for root in 0..n as u32 {
            if t_in[root as usize] != UNSET {
                continue;
            }
            call_stack.push((root, 0));
            while let Some(&mut (u, ref mut pos)) = call_stack.last_mut() {
                let ui = u as usize;
                if *pos == 0 {
                    t_in[ui] = timer;
                    low[ui] = timer;
                    timer += 1;
                    scc_stack.push(u);
                    on_stack[ui] = true;
                }
                if let Some(&(v, _)) = self.edges[ui].get(*pos) {
                    *pos += 1;
                    let vi = v as usize;
                    if t_in[vi] == UNSET {
                        call_stack.push((v, 0));
                    } else if on_stack[vi] {
                        low[ui] = low[ui].min(t_in[vi]);
                    }
                } else {
                    if low[ui] == t_in[ui] {
                        loop {
                            let v = scc_stack.pop().unwrap();
                            on_stack[v as usize] = false;
                            comp[v as usize] = n_comp;
                            if v == u {
                                break;
                            }
                        }
                        n_comp += 1;
                    }
                    call_stack.pop();
                    if let Some(&mut (p, _)) = call_stack.last_mut() {
                        let pi = p as usize;
                        low[pi] = low[pi].min(low[ui]);
                    }
                }
            }
        }
        comp
    }

    /// Shortest implication path `from ->* to`, as edge labels.
    fn implication_chain(&self, from: Lit, to: Lit) -> Option<Vec<L>> {
        let n = self.edges.len();
        let mut prev: Vec<Option<(Lit, L)>> = vec![None; n];
        let mut seen = vec![false; n];
        let mut queue = std::collections::VecDeque::new();
        seen[from as usize] = true;
        queue.push_back(from);
        while let Some(u) = queue.pop_front() {
            if u == to {
                let mut labels = Vec::new();
                let mut cur = to;
                while cur != from {
                    let (p, label) = prev[cur as usize].clone().unwrap();
                    labels.push(label);
                    cur = p;
                }
                labels.reverse();
                return Some(labels);
            }
            for (v, label) in &self.edges[u as usize] {
                if !seen[*v as usize] {
                    seen[*v as usize] = true;
                    prev[*v as usize] = Some((u, label.clone()));
                    queue.push_back(*v);
                }
            }
        }
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn satisfiable_chain() {
        // (x0 | x1) & (!x0 | x1): forces nothing contradictory
        let mut sat: TwoSat<u32> = TwoSat::new(2);
        sat.add_implication(lit(0, false), lit(1, true), 0);
        sat.add_implication(lit(1, false), lit(0, true), 0);
        sat.add_implication(lit(0, true), lit(1, true), 1);
        sat.add_implication(lit(1, false), lit(0, false), 1);
        match sat.solve() {
            Solution::Satisfiable(asg) => assert!(asg[1]),
            Solution::Unsatisfiable { .. } => panic!("should be satisfiable"),
        }
    }

    #[test]
    fn pinned_contradiction() {
        let mut sat: TwoSat<u32> = TwoSat::new(1);
        sat.pin(lit(0, true), 0);
        sat.pin(lit(0, false), 1);
        match sat.solve() {
            Solution::Satisfiable(_) => panic!("should be unsatisfiable"),
            Solution::Unsatisfiable { var, chain } => {
                assert_eq!(var, 0);
                assert!(!chain.is_empty());
            }
        }
    }

    #[test]
    fn implication_cycle_is_fine() {
        // x0 -> x1 -> x0: both in one SCC, no contradiction
        let mut sat: TwoSat<u32> = TwoSat::new(2);
        sat.add_implication(lit(0, true), lit(1, true), 0);
        sat.add_implication(lit(1, true), lit(0, true), 1);
        assert!(matches!(sat.solve(), Solution::Satisfiable(_)));
    }
}
