//! Inactivation decoding of sparse linear systems over GF(2^m).
//!
//! The solver runs in four phases: (1) triangulation — peel reduced-degree-1
//! equations, and when the ripple empties mark one active variable inactive
//! under a pluggable strategy; (2) express every peeled variable as an
//! affine form over the inactive set (this is the column-addition cleanup,
//! completed in full before any elimination); (3) dense Gaussian elimination
//! on the residual equations restricted to the inactive variables; (4) back
//! substitution through the stored affine forms.
//!
//! Decoding succeeds iff the system has full column rank and is consistent;
//! the inactivation strategy affects only how many variables are
//! inactivated, never success.

use crate::gf::{Fe, FieldSpec};
use crate::linalg::{BitMatrix, FieldMatrix};
use crate::lt::ReceivedSet;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// One linear equation: sum_i coefs[i] * x[vars[i]] = rhs, with vars sorted
/// ascending and all coefficients nonzero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub vars: Vec<u32>,
    pub coefs: Vec<Fe>,
    pub rhs: Fe,
}

impl Equation {
    /// Normalize: drop zero coefficients, sort by variable, merge duplicates.
    pub fn new(field: &FieldSpec, vars: &[u32], coefs: &[Fe], rhs: Fe) -> Self {
        assert_eq!(vars.len(), coefs.len());
        let mut pairs: Vec<(u32, Fe)> = vars
            .iter()
            .zip(coefs.iter())
            .filter(|(_, &c)| c != 0)
            .map(|(&v, &c)| (v, c))
            .collect();
        pairs.sort_unstable_by_key(|&(v, _)| v);
        let mut out: Vec<(u32, Fe)> = Vec::with_capacity(pairs.len());
        for (v, c) in pairs {
            match out.last_mut() {
                Some((lv, lc)) if *lv == v => *lc = field.add(*lc, c),
                _ => out.push((v, c)),
            }
        }
        out.retain(|&(_, c)| c != 0);
        Equation {
            vars: out.iter().map(|&(v, _)| v).collect(),
            coefs: out.iter().map(|&(_, c)| c).collect(),
            rhs,
        }
    }

    pub fn degree(&self) -> usize {
        self.vars.len()
    }
}

/// A sparse linear system over GF(2^m).
#[derive(Debug, Clone)]
pub struct SparseSystem {
    pub num_vars: usize,
    pub field: FieldSpec,
    pub equations: Vec<Equation>,
}

impl SparseSystem {
    pub fn new(num_vars: usize, field: FieldSpec) -> Self {
        Self { num_vars, field, equations: Vec::new() }
    }

    pub fn push(&mut self, vars: &[u32], coefs: &[Fe], rhs: Fe) {
        debug_assert!(vars.iter().all(|&v| (v as usize) < self.num_vars));
        let eq = Equation::new(&self.field, vars, coefs, rhs);
        self.equations.push(eq);
    }

    /// Received fountain symbols as a system over the source word.
    pub fn from_received(rs: &ReceivedSet) -> Self {
        let mut sys = Self::new(rs.k, rs.field.clone());
        for (col, &y) in rs.columns.iter().zip(rs.symbols.iter()) {
            sys.push(&col.vars, &col.coefs, y);
        }
        sys
    }

    /// Dense form (one row per equation) plus right-hand-side column.
    pub fn to_dense(&self) -> (FieldMatrix, FieldMatrix) {
        let mut a = FieldMatrix::zeros(self.equations.len(), self.num_vars, &self.field);
        let mut b = FieldMatrix::zeros(self.equations.len(), 1, &self.field);
        for (r, eq) in self.equations.iter().enumerate() {
            for (&v, &c) in eq.vars.iter().zip(eq.coefs.iter()) {
                a.set(r, v as usize, c);
            }
            b.set(r, 0, eq.rhs);
        }
        (a, b)
    }

    /// Check a candidate assignment against every equation.
    pub fn satisfied_by(&self, x: &[Fe]) -> bool {
        assert_eq!(x.len(), self.num_vars);
        let f = &self.field;
        self.equations.iter().all(|eq| {
            let mut acc = 0u32;
            for (&v, &c) in eq.vars.iter().zip(eq.coefs.iter()) {
                acc = f.add(acc, f.mul(c, x[v as usize]));
            }
            acc == eq.rhs
        })
    }
}

/// How to choose the variable to inactivate when the ripple empties.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InactivationStrategy {
    /// Uniform over the active variables.
    Random,
    /// The active variable with the most incident equations (ties uniform).
    MaxReducedDegree,
    /// Pick the alive equation of minimum reduced degree, breaking ties by
    /// the largest sum of its neighbors' degrees, then inactivate one of its
    /// variables (all remaining ties uniform).
    MaxAccumulatedReducedDegree,
    /// Build the graph whose vertices are the reduced-degree-2 equations,
    /// adjacent when they share a variable; inactivate a variable touching
    /// the largest connected component (ties uniform; falls back to Random
    /// when no degree-2 equation is alive).
    MaxComponent,
}

impl InactivationStrategy {
    pub const ALL: [InactivationStrategy; 4] = [
        InactivationStrategy::Random,
        InactivationStrategy::MaxReducedDegree,
        InactivationStrategy::MaxAccumulatedReducedDegree,
        InactivationStrategy::MaxComponent,
    ];
}

/// What happened at one triangulation step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TraceEvent {
    Resolve { var: u32, equation: usize },
    Inactivate { var: u32 },
}

/// A step with the census just before it: ripple = alive equations of
/// reduced degree 1, cloud = alive equations of reduced degree >= 2,
/// active = variables not yet peeled or inactivated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceStep {
    pub event: TraceEvent,
    pub ripple: usize,
    pub cloud: usize,
    pub active: usize,
}

/// Triangulation outcome: pivot (variable, equation) pairs in resolution
/// order, inactivated variables in inactivation order, and the step trace.
#[derive(Debug, Clone)]
pub struct Triangulation {
    pub pivots: Vec<(u32, usize)>,
    pub inactive: Vec<u32>,
    pub trace: Vec<TraceStep>,
}

impl Triangulation {
    pub fn inactivations(&self) -> usize {
        self.inactive.len()
    }
}

struct UnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n as u32).collect(), size: vec![1; n] }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let gp = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = gp;
            x = gp;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        let (big, small) = if self.size[ra as usize] >= self.size[rb as usize] {
            (ra, rb)
        } else {
            (rb, ra)
        };
        self.parent[small as usize] = big;
        self.size[big as usize] += self.size[small as usize];
    }
}

/// Triangulate the system: peel while the ripple is nonempty, otherwise
/// inactivate one variable chosen by `strategy`. All ties are broken
/// uniformly under `rng`.
pub fn triangulate<R: Rng + ?Sized>(
    sys: &SparseSystem,
    strategy: InactivationStrategy,
    rng: &mut R,
) -> Triangulation {
    let n = sys.num_vars;
    let m = sys.equations.len();
    let mut cnt: Vec<u32> = sys.equations.iter().map(|e| e.degree() as u32).collect();
    let mut incidence: Vec<Vec<u32>> = vec![Vec::new(); n];
    for (j, eq) in sys.equations.iter().enumerate() {
        for &v in &eq.vars {
            incidence[v as usize].push(j as u32);
        }
    }
    // Active-variable pool with O(1) uniform removal.
    let mut active: Vec<u32> = (0..n as u32).collect();
    let mut active_pos: Vec<usize> = (0..n).collect();
    // Ripple membership with O(1) add/remove.
    let mut ripple: Vec<u32> = Vec::new();
    let mut ripple_pos: Vec<usize> = vec![usize::MAX; m];
    let mut cloud_count = 0usize;
    for j in 0..m {
        match cnt[j] {
            1 => {
                ripple_pos[j] = ripple.len();
                ripple.push(j as u32);
            }
            c if c >= 2 => cloud_count += 1,
            _ => {}
        }
    }
    let mut peeled = vec![false; n];
    let mut pivots: Vec<(u32, usize)> = Vec::new();
    let mut inactive: Vec<u32> = Vec::new();
    let mut trace: Vec<TraceStep> = Vec::new();

    let remove_active = |active: &mut Vec<u32>, active_pos: &mut Vec<usize>, v: u32| {
        let pos = active_pos[v as usize];
        let last = *active.last().unwrap();
        active.swap_remove(pos);
        if pos < active.len() {
            active_pos[last as usize] = pos;
        }
        active_pos[v as usize] = usize::MAX;
    };

    while !active.is_empty() {
        let census = TraceStep {
            event: TraceEvent::Inactivate { var: 0 }, // placeholder
            ripple: ripple.len(),
            cloud: cloud_count,
            active: active.len(),
        };
        let (victim, event) = if !ripple.is_empty() {
            let eq = ripple[rng.gen_range(0..ripple.len())] as usize;
            let var = sys.equations[eq]
                .vars
                .iter()
                .copied()
                .find(|&v| active_pos[v as usize] != usize::MAX)
                .expect("ripple equation must hold one active variable");
            peeled[var as usize] = true;
            pivots.push((var, eq));
            (var, TraceEvent::Resolve { var, equation: eq })
        } else {
            let var = choose_inactivation(
                sys,
                strategy,
                &active,
                &active_pos,
                &cnt,
                &incidence,
                rng,
            );
            inactive.push(var);
            (var, TraceEvent::Inactivate { var })
        };
        trace.push(TraceStep { event, ..census });
        // Remove the variable and its edges.
        remove_active(&mut active, &mut active_pos, victim);
        for &j in &incidence[victim as usize] {
            let j = j as usize;
            debug_assert!(cnt[j] >= 1);
            cnt[j] -= 1;
            match cnt[j] {
                1 => {
                    cloud_count -= 1;
                    ripple_pos[j] = ripple.len();
                    ripple.push(j as u32);
                }
                0 => {
                    // Leaving the ripple (it was the pivot or a duplicate).
                    let pos = ripple_pos[j];
                    debug_assert!(pos != usize::MAX);
                    let last = *ripple.last().unwrap() as usize;
                    ripple.swap_remove(pos);
                    if pos < ripple.len() {
                        ripple_pos[last] = pos;
                    }
                    ripple_pos[j] = usize::MAX;
                }
                _ => {}
            }
        }
    }
    let _ = peeled;
    Triangulation { pivots, inactive, trace }
}

fn choose_inactivation<R: Rng + ?Sized>(
    sys: &SparseSystem,
    strategy: InactivationStrategy,
    active: &[u32],
    active_pos: &[usize],
    cnt: &[u32],
    incidence: &[Vec<u32>],
    rng: &mut R,
) -> u32 {
    let uniform_active = |rng: &mut R| active[rng.gen_range(0..active.len())];
    match strategy {
        InactivationStrategy::Random => uniform_active(rng),
        InactivationStrategy::MaxReducedDegree => {
            // While a variable is active every equation incident to it is
            // alive, so its reduced degree equals its incidence count.
            let best = active
                .iter()
                .map(|&v| incidence[v as usize].len())
                .max()
                .unwrap();
            let cands: Vec<u32> = active
                .iter()
                .copied()
                .filter(|&v| incidence[v as usize].len() == best)
                .collect();
            cands[rng.gen_range(0..cands.len())]
        }
        InactivationStrategy::MaxAccumulatedReducedDegree => {
            // Minimum reduced degree among alive equations, then maximum
            // accumulated (summed neighbor) degree, then uniform.
            let alive: Vec<usize> = (0..sys.equations.len())
                .filter(|&j| cnt[j] >= 1)
                .collect();
            if alive.is_empty() {
                return uniform_active(rng);
            }
            let min_deg = alive.iter().map(|&j| cnt[j]).min().unwrap();
            let acc_of = |j: usize| -> usize {
                sys.equations[j]
                    .vars
                    .iter()
                    .filter(|&&v| active_pos[v as usize] != usize::MAX)
                    .map(|&v| incidence[v as usize].len())
                    .sum()
            };
            let mut best_acc = 0usize;
            let mut cands: Vec<usize> = Vec::new();
            for &j in alive.iter().filter(|&&j| cnt[j] == min_deg) {
                let acc = acc_of(j);
                match acc.cmp(&best_acc) {
                    std::cmp::Ordering::Greater => {
                        best_acc = acc;
                        cands.clear();
                        cands.push(j);
                    }
                    std::cmp::Ordering::Equal => cands.push(j),
                    std::cmp::Ordering::Less => {}
                }
            }
            let eq = cands[rng.gen_range(0..cands.len())];
            let vars: Vec<u32> = sys.equations[eq]
                .vars
                .iter()
                .copied()
                .filter(|&v| active_pos[v as usize] != usize::MAX)
                .collect();
            vars[rng.gen_range(0..vars.len())]
        }
        InactivationStrategy::MaxComponent => {
            // Union the alive degree-2 equations that share a variable.
            let m = sys.equations.len();
            let mut uf = UnionFind::new(m);
            let mut any_deg2 = false;
            for &v in active {
                let mut first: Option<u32> = None;
                for &j in &incidence[v as usize] {
                    if cnt[j as usize] == 2 {
                        any_deg2 = true;
                        match first {
                            None => first = Some(j),
                            Some(f) => uf.union(f, j),
                        }
                    }
                }
            }
            if !any_deg2 {
                return uniform_active(rng);
            }
            // Largest component (size counted in equations), ties uniform.
            let mut best_size = 0u32;
            let mut roots: Vec<u32> = Vec::new();
            for j in 0..m as u32 {
                if cnt[j as usize] == 2 {
                    let r = uf.find(j);
                    if r == j {
                        match uf.size[r as usize].cmp(&best_size) {
                            std::cmp::Ordering::Greater => {
                                best_size = uf.size[r as usize];
                                roots.clear();
                                roots.push(r);
                            }
                            std::cmp::Ordering::Equal => roots.push(r),
                            std::cmp::Ordering::Less => {}
                        }
                    }
                }
            }
            let root = roots[rng.gen_range(0..roots.len())];
            // Active variables adjacent to the chosen component.
            let mut seen = vec![false; sys.num_vars];
            let mut vars: Vec<u32> = Vec::new();
            for j in 0..m as u32 {
                if cnt[j as usize] == 2 && uf.find(j) == root {
                    for &v in &sys.equations[j as usize].vars {
                        if active_pos[v as usize] != usize::MAX && !seen[v as usize] {
                            seen[v as usize] = true;
                            vars.push(v);
                        }
                    }
                }
            }
            vars[rng.gen_range(0..vars.len())]
        }
    }
}

/// Full decode report.
#[derive(Debug, Clone)]
pub struct DecodeReport {
    pub success: bool,
    pub solution: Option<Vec<Fe>>,
    pub inactivations: usize,
    pub rank: usize,
    pub consistent: bool,
    pub trace: Vec<TraceStep>,
}

/// Solve the system by inactivation decoding. Success iff the coefficient
/// matrix has rank = num_vars and the right-hand sides are consistent; the
/// result then equals dense Gaussian elimination on the same system.
pub fn inactivation_decode<R: Rng + ?Sized>(
    sys: &SparseSystem,
    strategy: InactivationStrategy,
    rng: &mut R,
) -> DecodeReport {
    let tri = triangulate(sys, strategy, rng);
    let f = sys.field.clone();
    let y = tri.inactive.len();
    let p = tri.pivots.len();
    // Index of each inactive variable in the core system.
    let mut inactive_idx = vec![usize::MAX; sys.num_vars];
    for (i, &v) in tri.inactive.iter().enumerate() {
        inactive_idx[v as usize] = i;
    }
    // Affine form of each peeled variable over the inactive set:
    // value = c0 + sum_i coeffs[i] * e_i.
    struct Affine {
        coeffs: Vec<Fe>,
        c0: Fe,
    }
    let mut forms: Vec<Option<Affine>> = (0..sys.num_vars).map(|_| None).collect();
    let mut used = vec![false; sys.equations.len()];
    for &(var, eqi) in &tri.pivots {
        used[eqi] = true;
        let eq = &sys.equations[eqi];
        let mut coeffs = vec![0u32; y];
        let mut c0 = eq.rhs;
        let mut pivot_coef = 0u32;
        for (&v, &c) in eq.vars.iter().zip(eq.coefs.iter()) {
            if v == var {
                pivot_coef = c;
            } else if inactive_idx[v as usize] != usize::MAX {
                let i = inactive_idx[v as usize];
                coeffs[i] = f.add(coeffs[i], c);
            } else {
                let form = forms[v as usize]
                    .as_ref()
                    .expect("pivot equation may only reference settled variables");
                c0 = f.sub(c0, f.mul(c, form.c0));
                for (i, &fc) in form.coeffs.iter().enumerate() {
                    if fc != 0 {
                        coeffs[i] = f.sub(coeffs[i], f.mul(c, fc));
                    }
                }
            }
        }
        debug_assert!(pivot_coef != 0);
        let inv = f.inv(pivot_coef);
        if inv != 1 {
            c0 = f.mul(c0, inv);
            for c in coeffs.iter_mut() {
                *c = f.mul(*c, inv);
            }
        }
        forms[var as usize] = Some(Affine { coeffs, c0 });
    }
    // Residual equations, rewritten over the inactive variables. Over GF(2)
    // the core is solved bit-packed: dense-leaning distributions put
    // hundreds of variables into it, where word-wide elimination is the
    // difference between milliseconds and seconds per decode.
    let residual_count = sys.equations.len() - p;
    let binary = f.is_binary();
    let (bit_rows, field_rows) = if binary { (residual_count, 0) } else { (0, residual_count) };
    let mut bit_core = BitMatrix::zeros(bit_rows, y);
    let mut bit_rhs = BitMatrix::zeros(bit_rows, 1);
    let mut core = FieldMatrix::zeros(field_rows, y, &f);
    let mut core_rhs = FieldMatrix::zeros(field_rows, 1, &f);
    let mut r = 0usize;
    let mut early_inconsistent = false;
    for (eqi, eq) in sys.equations.iter().enumerate() {
        if used[eqi] {
            continue;
        }
        let mut coeffs = vec![0u32; y];
        let mut rhs = eq.rhs;
        for (&v, &c) in eq.vars.iter().zip(eq.coefs.iter()) {
            if inactive_idx[v as usize] != usize::MAX {
                let i = inactive_idx[v as usize];
                coeffs[i] = f.add(coeffs[i], c);
            } else {
                let form = forms[v as usize]
                    .as_ref()
                    .expect("triangulation settles every variable");
                rhs = f.sub(rhs, f.mul(c, form.c0));
                for (i, &fc) in form.coeffs.iter().enumerate() {
                    if fc != 0 {
                        coeffs[i] = f.add(coeffs[i], f.mul(c, fc));
                    }
                }
            }
        }
        if coeffs.iter().all(|&c| c == 0) && rhs != 0 {
            early_inconsistent = true;
        }
        if binary {
            for (i, &c) in coeffs.iter().enumerate() {
                if c != 0 {
                    bit_core.set(r, i, true);
                }
            }
            if rhs != 0 {
                bit_rhs.set(r, 0, true);
            }
        } else {
            for (i, &c) in coeffs.iter().enumerate() {
                core.set(r, i, c);
            }
            core_rhs.set(r, 0, rhs);
        }
        r += 1;
    }
    if early_inconsistent {
        return DecodeReport {
            success: false,
            solution: None,
            inactivations: y,
            rank: p, // at least the pivot count; exact rank not needed on this path
            consistent: false,
            trace: tri.trace,
        };
    }
    let (core_rank, consistent, core_solution) = if binary {
        let rep = bit_core.eliminate(Some(&bit_rhs));
        let sol = rep
            .solution
            .map(|s| (0..y).map(|i| Fe::from(s.get(i, 0))).collect::<Vec<Fe>>());
        (rep.rank, rep.consistent, sol)
    } else {
        let rep = core.eliminate(Some(&core_rhs));
        let sol = rep
            .solution
            .map(|s| (0..y).map(|i| s.get(i, 0)).collect::<Vec<Fe>>());
        (rep.rank, rep.consistent, sol)
    };
    let rank = p + core_rank;
    let success = consistent && core_rank == y;
    let solution = if success {
        let e = core_solution.expect("consistent system has a solution");
        let mut x = vec![0u32; sys.num_vars];
        for (i, &v) in tri.inactive.iter().enumerate() {
            x[v as usize] = e[i];
        }
        // Evaluate the stored affine forms in reverse resolution order.
        for &(var, _) in tri.pivots.iter().rev() {
            let form = forms[var as usize].as_ref().unwrap();
            let mut val = form.c0;
            for (i, &fc) in form.coeffs.iter().enumerate() {
                if fc != 0 {
                    val = f.add(val, f.mul(fc, e[i]));
                }
            }
            x[var as usize] = val;
        }
        debug_assert!(sys.satisfied_by(&x));
        Some(x)
    } else {
        None
    };
    DecodeReport {
        success,
        solution,
        inactivations: y,
        rank,
        consistent,
        trace: tri.trace,
    }
}
