//! Mixed ε-derivatives of the solution map, by finite differences of full
//! nonlinear solves and by evaluating generated interaction trees.

use std::collections::HashMap;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::symbolics::nonlinearity::TaylorNonlinearity;
use crate::symbolics::terms::{InteractionTerm, TermNode};
use crate::wavesolver::field::Field;
use crate::wavesolver::operator::WaveOperator;
use crate::wavesolver::solve::{solve_linear_causal, solve_semilinear, SampledNonlinearity, SolveOptions};

#[derive(Debug, Clone, PartialEq)]
pub enum ExtractionMethod {
    /// Central differences at `eps`, with `(4 D(ε) − D(2ε)) / 3` when
    /// `richardson` is set.
    FiniteDifference { eps: f64, richardson: bool },
    Formula { terms: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExpansionResult {
    pub multi: [usize; 4],
    pub method: ExtractionMethod,
    pub field: Field,
    /// Number of PDE solves performed.
    pub solves: usize,
}

/// Nodes and weights of the central difference for `d^m/dε^m` at 0:
/// points `(m/2 − j) δ`, weights `(−1)^j C(m, j) / δ^m`, `j = 0..=m`, with
/// `δ = 2ε` for odd `m` so that the nodes stay at multiples of `ε`.
pub fn central_stencil(m: usize, eps: f64) -> Vec<(f64, f64)> {
    if m == 0 {
        return vec![(0.0, 1.0)];
    }
    let delta = if m % 2 == 1 { 2.0 * eps } else { eps };
    let mut binom = 1.0;
    let mut out = Vec::with_capacity(m + 1);
    for j in 0..=m {
        if j > 0 {
            binom = binom * (m + 1 - j) as f64 / j as f64;
        }
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        out.push(((m as f64 / 2.0 - j as f64) * delta, sign * binom / delta.powi(m as i32)));
    }
    out
}

/// Tensor-product stencil over the four sources, merged by node.
fn product_stencil(multi: [usize; 4], eps: f64) -> Vec<([f64; 4], f64)> {
    let mut pts: Vec<([f64; 4], f64)> = vec![([0.0; 4], 1.0)];
    for (i, &m) in multi.iter().enumerate() {
        let st = central_stencil(m, eps);
        pts = pts
            .into_iter()
            .flat_map(|(p, w)| {
                st.iter().map(move |&(e, we)| {
                    let mut q = p;
                    q[i] = e;
                    (q, w * we)
                })
            })
            .collect();
    }
    pts
}

fn check_sources(sources: &[Field], multi: [usize; 4]) -> Result<()> {
    if multi.iter().all(|&m| m == 0) {
        return Err(Error::InvalidArgument("multi-index must be nonzero".into()));
    }
    for (i, &m) in multi.iter().enumerate() {
        if m > 0 && i >= sources.len() {
            return Err(Error::InvalidArgument(format!("multi-index uses source {} but only {} given", i + 1, sources.len())));
        }
    }
    Ok(())
}

fn fd_at(
    op: &WaveOperator,
    h: &SampledNonlinearity,
    sources: &[Field],
    multi: [usize; 4],
    eps: f64,
    opts: &SolveOptions,
) -> Result<(Field, usize)> {
    let stencil = product_stencil(multi, eps);
    let solves: Vec<Result<(Field, f64)>> = stencil
        .par_iter()
        .map(|(e, w)| {
            let mut f = Field::zeros(op.grid);
            for (i, &ei) in e.iter().enumerate() {
                if ei != 0.0 {
                    f.add_scaled(ei, &sources[i])?;
                }
            }
            Ok((solve_semilinear(op, h, &f, opts)?, *w))
        })
        .collect();
    let mut acc = Field::zeros(op.grid);
    for s in solves {
        let (u, w) = s?;
        acc.add_scaled(w, &u)?;
    }
    Ok((acc, stencil.len()))
}

/// `∂^multi_ε u(Σ ε_i f_i)` at `ε = 0` by central differences.
pub fn extract_expansion_fd(
    op: &WaveOperator,
    h: &TaylorNonlinearity,
    sources: &[Field],
    eps: f64,
    multi: [usize; 4],
    richardson: bool,
    opts: &SolveOptions,
) -> Result<ExpansionResult> {
    check_sources(sources, multi)?;
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    let hs = SampledNonlinearity::new(h, op.grid);
    let (d1, n1) = fd_at(op, &hs, sources, multi, eps, opts)?;
    let (field, solves) = if richardson {
        let (d2, n2) = fd_at(op, &hs, sources, multi, 2.0 * eps, opts)?;
        let mut r = d1.scaled(4.0 / 3.0);
        r.add_scaled(-1.0 / 3.0, &d2)?;
        (r, n1 + n2)
    } else {
        (d1, n1)
    };
    Ok(ExpansionResult {
        multi,
        method: ExtractionMethod::FiniteDifference { eps, richardson },
        field,
        solves,
    })
}

struct TreeEval<'a> {
    op: &'a WaveOperator,
    h: &'a SampledNonlinearity,
    leaves: Vec<Field>,
    memo: HashMap<String, Field>,
    solves: usize,
}

impl TreeEval<'_> {
    fn eval(&mut self, node: &TermNode) -> Result<Field> {
        let key = node.to_string();
        if let Some(f) = self.memo.get(&key) {
            return Ok(f.clone());
        }
        let out = match node {
            TermNode::Source(i) => self
                .leaves
                .get(i - 1)
                .cloned()
                .ok_or_else(|| Error::InvalidArgument(format!("term uses v{i} but no such source")))?,
            TermNode::Product { order, children } => {
                let mut acc = match self.h.coefficient(*order) {
                    Some(c) => Field {
                        grid: self.op.grid,
                        data: c.to_vec(),
                    },
                    None => Field::zeros(self.op.grid),
                };
                for c in children {
                    acc = acc.mul(&self.eval(c)?)?;
                }
                acc
            }
            TermNode::ApplyQ(c) => {
                let inner = self.eval(c)?;
                self.solves += 1;
                solve_linear_causal(self.op, &inner)?
            }
        };
        self.memo.insert(key, out.clone());
        Ok(out)
    }
}

/// Sum of `multiplier × Σ_{orderings} tree` with `Q` the discrete causal
/// inverse and `v_i = Q f_i`.
pub fn formula_expansion(
    op: &WaveOperator,
    h: &TaylorNonlinearity,
    sources: &[Field],
    terms: &[InteractionTerm],
    multi: [usize; 4],
) -> Result<ExpansionResult> {
    check_sources(sources, multi)?;
    let hs = SampledNonlinearity::new(h, op.grid);
    let leaves: Vec<Field> = sources
        .par_iter()
        .map(|f| solve_linear_causal(op, f))
        .collect::<Result<_>>()?;
    let mut ev = TreeEval {
        op,
        h: &hs,
        solves: leaves.len(),
        leaves,
        memo: HashMap::new(),
    };
    let mut total = Field::zeros(op.grid);
    for t in terms {
        let (seqs, weight) = t.label_sequences();
        let scale = t.multiplier_f64() * weight as f64;
        for seq in seqs {
            let tree = t.root.with_slot_labels(&seq).canonicalized();
            let f = ev.eval(&tree)?;
            total.add_scaled(scale, &f)?;
        }
    }
    Ok(ExpansionResult {
        multi,
        method: ExtractionMethod::Formula { terms: terms.len() },
        field: total,
        solves: ev.solves,
    })
}

/// Least-squares `c` in `target ≈ c · basis`.
pub fn fitted_multiplier(target: &Field, basis: &Field) -> Result<f64> {
    let num: f64 = target.mul(basis)?.data.iter().sum();
    let den: f64 = basis.mul(basis)?.data.iter().sum();
    if den == 0.0 {
        return Err(Error::Fit("basis field vanishes".into()));
    }
    Ok(num / den)
}
