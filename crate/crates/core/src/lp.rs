//! Dense two-phase primal simplex with Bland's rule. Small, deterministic,
//! and sufficient for per-island dispatch problems of a few dozen variables.

/// Reduced-cost optimality tolerance.
pub const OPTIMALITY_TOL: f64 = 1e-9;
const PIVOT_TOL: f64 = 1e-9;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone)]
pub struct Constraint {
    pub coefs: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize c.x` subject to the constraints and `x >= 0`.
#[derive(Debug, Clone, Default)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { x: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![0.0; n_vars],
            constraints: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add(&mut self, coefs: Vec<(usize, f64)>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coefs,
            relation,
            rhs,
        });
    }

    pub fn solve(&self) -> LpOutcome {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    n_cols: usize,
    first_artificial: usize,
}

enum Phase {
    Optimal,
    Unbounded,
    Limit,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let n = lp.n_vars();
        let m = lp.constraints.len();
        let mut norm: Vec<(Vec<(usize, f64)>, Relation, f64)> = Vec::with_capacity(m);
        for c in &lp.constraints {
            if c.rhs < 0.0 {
                let rel = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                norm.push((c.coefs.iter().map(|&(j, v)| (j, -v)).collect(), rel, -c.rhs));
            } else {
                norm.push((c.coefs.clone(), c.relation, c.rhs));
            }
        }
        let n_slack = norm.iter().filter(|c| c.1 != Relation::Eq).count();
        let n_art = norm.iter().filter(|c| c.1 != Relation::Le).count();
        let first_artificial = n + n_slack;
        let n_cols = first_artificial + n_art;

        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let (mut s, mut a) = (n, first_artificial);
        for (coefs, rel, rhs) in norm {
            let mut row = vec![0.0; n_cols + 1];
            for (j, v) in coefs {
                row[j] += v;
            }
            row[n_cols] = rhs;
            match rel {
                Relation::Le => {
                    row[s] = 1.0;
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    row[s] = -1.0;
                    s += 1;
                    row[a] = 1.0;
                    basis.push(a);
                    a += 1;
                }
                Relation::Eq => {
                    row[a] = 1.0;
                    basis.push(a);
                    a += 1;
                }
            }
            rows.push(row);
        }
        Self {
            rows,
            basis,
            n_cols,
            first_artificial,
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        d.push(0.0);
        for (i, &b) in self.basis.iter().enumerate() {
            let cb = cost[b];
            if cb != 0.0 {
                for (dj, tij) in d.iter_mut().zip(&self.rows[i]) {
                    *dj -= cb * tij;
                }
            }
        }
        d
    }

    fn pivot(&mut self, d: &mut [f64], r: usize, c: usize) {
        let p = self.rows[r][c];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = d[c];
        if f != 0.0 {
            for (v, pv) in d.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            d[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn optimize(&mut self, d: &mut [f64], allowed: usize, pivots: &mut usize) -> Phase {
        let rhs = self.n_cols;
        loop {
            let Some(c) = (0..allowed).find(|&j| d[j] > OPTIMALITY_TOL) else {
                return Phase::Optimal;
            };
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                let a = row[c];
                if a > PIVOT_TOL {
                    let ratio = row[rhs] / a;
                    let better = match best {
                        None => true,
                        Some((r, _, b)) => {
                            ratio < r - 1e-12 || (ratio <= r + 1e-12 && self.basis[i] < b)
                        }
                    };
                    if better {
                        best = Some((ratio, i, self.basis[i]));
                    }
                }
            }
            let Some((_, r, _)) = best else {
                return Phase::Unbounded;
            };
            *pivots += 1;
            if *pivots > MAX_PIVOTS {
                return Phase::Limit;
            }
            self.pivot(d, r, c);
        }
    }

    fn run(mut self, lp: &LinearProgram) -> LpOutcome {
        let n = lp.n_vars();
        let rhs = self.n_cols;
        let mut pivots = 0;

        if self.first_artificial < self.n_cols {
            let mut cost = vec![0.0; self.n_cols];
            for c in cost.iter_mut().skip(self.first_artificial) {
                *c = -1.0;
            }
            let mut d = self.reduced_costs(&cost);
            match self.optimize(&mut d, self.n_cols, &mut pivots) {
                Phase::Optimal => {}
                Phase::Limit => return LpOutcome::IterationLimit,
                Phase::Unbounded => return LpOutcome::Infeasible,
            }
            let infeas: f64 = self
                .basis
                .iter()
                .enumerate()
                .filter(|&(_, &b)| b >= self.first_artificial)
                .map(|(i, _)| self.rows[i][rhs])
                .sum();
            if infeas > 1e-7 {
                return LpOutcome::Infeasible;
            }
            // drive zero-valued artificials out of the basis where possible
            for r in 0..self.rows.len() {
                if self.basis[r] >= self.first_artificial {
                    if let Some(c) =
                        (0..self.first_artificial).find(|&j| self.rows[r][j].abs() > PIVOT_TOL)
                    {
                        let mut dummy = vec![0.0; self.n_cols + 1];
                        self.pivot(&mut dummy, r, c);
                    }
                }
            }
        }

        let mut cost = vec![0.0; self.n_cols];
        cost[..n].copy_from_slice(&lp.objective);
        let mut d = self.reduced_costs(&cost);
        match self.optimize(&mut d, self.first_artificial, &mut pivots) {
            Phase::Optimal => {}
            Phase::Limit => return LpOutcome::IterationLimit,
            Phase::Unbounded => return LpOutcome::Unbounded,
        }
        let mut x = vec![0.0; n];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < n {
                x[b] = self.rows[i][rhs].max(0.0);
            }
        }
        let value = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        LpOutcome::Optimal { x, value }
    }
}
