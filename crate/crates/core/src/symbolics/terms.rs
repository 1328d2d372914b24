//! Interaction terms of the small-source expansion.
//!
//! Writing `v = Σ ε_i v_i` for the linear waves, the solution of
//! `u = v − Q(H(u))` is expanded as a formal series in an unlabeled `v`.
//! Each degree-`n` piece is a sum of trees with `n` leaves; the coefficient
//! of a tree is an integer that collects all ordered ways of producing it.
//!
//! Multiplier convention: a generated [`InteractionTerm`] carries the
//! coefficient of its unlabeled shape. That is the weight of every *ordered*
//! assignment of the labels to the leaf slots, so
//!
//! ```text
//! ∂^m_ε u |_{ε=0} = Σ_terms multiplier · Σ_{all n! slot permutations} tree
//! ```
//!
//! For `m = (1,1,0,0)` and `H = a z²` this is `−Q(a v1 v2) − Q(a v2 v1)`.
//!
//! Canonical form: inside a product, source leaves come first, followed by
//! `Q` subtrees in a fixed total order; labels are handed out in ascending
//! order during a depth-first pre-order walk.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;

use crate::error::{Error, ParseError, Result};
use crate::symbolics::nonlinearity::{TaylorNonlinearity, MAX_ORDER};

pub type Rational = Ratio<i64>;

pub const DEFAULT_TERM_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
enum Shape {
    V,
    // Q applied to the product h_k · children
    Q(usize, Vec<Shape>),
}

impl Shape {
    fn to_labeled(&self, labels: &mut impl Iterator<Item = usize>) -> TermNode {
        match self {
            Shape::V => TermNode::Source(labels.next().expect("label list too short")),
            Shape::Q(k, children) => TermNode::ApplyQ(Box::new(TermNode::Product {
                order: *k,
                children: children.iter().map(|c| c.to_labeled(labels)).collect(),
            })),
        }
    }
}

/// Labeled interaction tree.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TermNode {
    /// `v_i`, `i ∈ 1..=4`
    Source(usize),
    /// `h_order · Π children`
    Product { order: usize, children: Vec<TermNode> },
    ApplyQ(Box<TermNode>),
}

impl TermNode {
    pub fn leaf_count(&self) -> usize {
        match self {
            TermNode::Source(_) => 1,
            TermNode::Product { children, .. } => children.iter().map(|c| c.leaf_count()).sum(),
            TermNode::ApplyQ(c) => c.leaf_count(),
        }
    }

    /// Leaf labels in pre-order.
    pub fn slot_labels(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_labels(&mut out);
        out
    }

    fn collect_labels(&self, out: &mut Vec<usize>) {
        match self {
            TermNode::Source(i) => out.push(*i),
            TermNode::Product { children, .. } => {
                children.iter().for_each(|c| c.collect_labels(out))
            }
            TermNode::ApplyQ(c) => c.collect_labels(out),
        }
    }

    /// Same shape with the pre-order leaf slots relabeled.
    pub fn with_slot_labels(&self, labels: &[usize]) -> TermNode {
        let mut it = labels.iter().copied();
        let out = self.relabel(&mut it);
        debug_assert!(it.next().is_none());
        out
    }

    fn relabel(&self, it: &mut impl Iterator<Item = usize>) -> TermNode {
        match self {
            TermNode::Source(_) => TermNode::Source(it.next().expect("label list too short")),
            TermNode::Product { order, children } => TermNode::Product {
                order: *order,
                children: children.iter().map(|c| c.relabel(it)).collect(),
            },
            TermNode::ApplyQ(c) => TermNode::ApplyQ(Box::new(c.relabel(it))),
        }
    }

    /// Number of `Q` nodes strictly below the root.
    pub fn interior_q_count(&self) -> usize {
        let total = self.q_count();
        match self {
            TermNode::ApplyQ(_) => total - 1,
            _ => total,
        }
    }

    fn q_count(&self) -> usize {
        match self {
            TermNode::Source(_) => 0,
            TermNode::Product { children, .. } => children.iter().map(|c| c.q_count()).sum(),
            TermNode::ApplyQ(c) => 1 + c.q_count(),
        }
    }

    /// Nesting depth counted in `Q` levels.
    pub fn depth(&self) -> usize {
        match self {
            TermNode::Source(_) => 0,
            TermNode::Product { children, .. } => {
                children.iter().map(|c| c.depth()).max().unwrap_or(0)
            }
            TermNode::ApplyQ(c) => 1 + c.depth(),
        }
    }

    /// Orders `k` of all products, in pre-order.
    pub fn orders(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_orders(&mut out);
        out
    }

    fn collect_orders(&self, out: &mut Vec<usize>) {
        match self {
            TermNode::Source(_) => {}
            TermNode::Product { order, children } => {
                out.push(*order);
                children.iter().for_each(|c| c.collect_orders(out));
            }
            TermNode::ApplyQ(c) => c.collect_orders(out),
        }
    }

    /// Sort product children (sources by label, then subtrees by their
    /// canonical text) so that equal trees compare equal.
    pub fn canonicalized(&self) -> TermNode {
        match self {
            TermNode::Source(i) => TermNode::Source(*i),
            TermNode::ApplyQ(c) => TermNode::ApplyQ(Box::new(c.canonicalized())),
            TermNode::Product { order, children } => {
                let mut kids: Vec<TermNode> = children.iter().map(|c| c.canonicalized()).collect();
                kids.sort_by_cached_key(|c| match c {
                    TermNode::Source(i) => (0, *i, String::new()),
                    other => (1, 0, other.to_string()),
                });
                TermNode::Product {
                    order: *order,
                    children: kids,
                }
            }
        }
    }
}

impl fmt::Display for TermNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TermNode::Source(i) => write!(f, "v{i}"),
            TermNode::Product { order, children } => {
                write!(f, "(h{order}")?;
                for c in children {
                    write!(f, " {c}")?;
                }
                write!(f, ")")
            }
            TermNode::ApplyQ(c) => write!(f, "(Q {c})"),
        }
    }
}

/// One generated term: exact multiplier times a canonical labeled tree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionTerm {
    pub multiplier: Rational,
    pub root: TermNode,
    pub multi_index: [usize; 4],
}

impl InteractionTerm {
    pub fn new(multiplier: Rational, root: TermNode) -> Result<Self> {
        let mut multi_index = [0usize; 4];
        for l in root.slot_labels() {
            if !(1..=4).contains(&l) {
                return Err(Error::InvalidArgument(format!("source label v{l} outside 1..=4")));
            }
            multi_index[l - 1] += 1;
        }
        Ok(InteractionTerm {
            multiplier,
            root,
            multi_index,
        })
    }

    pub fn degree(&self) -> usize {
        self.multi_index.iter().sum()
    }

    /// Sorted label list `1,..,1,2,..` matching the multi-index.
    pub fn label_list(&self) -> Vec<usize> {
        label_list(self.multi_index)
    }

    /// Distinct assignments of the label list to the leaf slots, each with
    /// the number of slot permutations that produce it (`Π m_i!`).
    pub fn label_sequences(&self) -> (Vec<Vec<usize>>, u64) {
        let seqs = multiset_permutations(&self.label_list());
        let weight = self
            .multi_index
            .iter()
            .map(|&m| (1..=m as u64).product::<u64>())
            .product();
        (seqs, weight)
    }

    pub fn multiplier_f64(&self) -> f64 {
        *self.multiplier.numer() as f64 / *self.multiplier.denom() as f64
    }

    pub fn parse(text: &str) -> std::result::Result<Self, ParseError> {
        SexprParser::new(text).parse_term()
    }
}

impl fmt::Display for InteractionTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.multiplier;
        if m >= Rational::from_integer(0) {
            write!(f, "+")?;
        }
        write!(f, "{m} {}", self.root)
    }
}

/// Text form of a term list, one term per line.
pub fn to_sexpr_lines(terms: &[InteractionTerm]) -> String {
    let mut s = String::new();
    for t in terms {
        s.push_str(&t.to_string());
        s.push('\n');
    }
    s
}

pub fn parse_sexpr_lines(text: &str) -> std::result::Result<Vec<InteractionTerm>, ParseError> {
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(InteractionTerm::parse(line).map_err(|e| e.relocate(n + 1, 0))?);
    }
    Ok(out)
}

pub fn label_list(multi: [usize; 4]) -> Vec<usize> {
    let mut out = Vec::new();
    for (i, &m) in multi.iter().enumerate() {
        out.extend(std::iter::repeat_n(i + 1, m));
    }
    out
}

/// All distinct orderings of a sorted multiset, in lexicographic order.
pub fn multiset_permutations(sorted: &[usize]) -> Vec<Vec<usize>> {
    fn rec(counts: &mut BTreeMap<usize, usize>, cur: &mut Vec<usize>, n: usize, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        let keys: Vec<usize> = counts.iter().filter(|(_, &c)| c > 0).map(|(&k, _)| k).collect();
        for k in keys {
            *counts.get_mut(&k).unwrap() -= 1;
            cur.push(k);
            rec(counts, cur, n, out);
            cur.pop();
            *counts.get_mut(&k).unwrap() += 1;
        }
    }
    let mut counts = BTreeMap::new();
    for &l in sorted {
        *counts.entry(l).or_insert(0) += 1;
    }
    let mut out = Vec::new();
    rec(&mut counts, &mut Vec::new(), sorted.len(), &mut out);
    out
}

/// Expansion terms of multi-degree `multi` for the nonlinearity's orders.
pub fn generate_expansion_terms(
    h: &TaylorNonlinearity,
    multi: [usize; 4],
) -> Result<Vec<InteractionTerm>> {
    let orders: Vec<usize> = h.orders().collect();
    generate_terms_for_orders(&orders, multi, DEFAULT_TERM_CAP)
}

/// Same as [`generate_expansion_terms`] with explicit orders and a cap on
/// the number of intermediate series entries.
pub fn generate_terms_for_orders(
    orders: &[usize],
    multi: [usize; 4],
    cap: usize,
) -> Result<Vec<InteractionTerm>> {
    let n: usize = multi.iter().sum();
    if n > MAX_ORDER {
        return Err(Error::InvalidArgument(format!(
            "total degree {n} exceeds {MAX_ORDER}"
        )));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let series = unlabeled_series(orders, n, cap)?;
    let labels = label_list(multi);
    let mut out: Vec<InteractionTerm> = series[n]
        .iter()
        .filter(|(_, c)| **c != Rational::from_integer(0))
        .map(|(shape, c)| {
            let root = shape.to_labeled(&mut labels.iter().copied());
            InteractionTerm {
                multiplier: *c,
                root,
                multi_index: multi,
            }
        })
        .collect();
    out.sort_by_cached_key(|t| {
        (
            std::cmp::Reverse(t.root.interior_q_count()),
            std::cmp::Reverse(t.root.depth()),
            t.root.to_string(),
        )
    });
    Ok(out)
}

type Series = Vec<BTreeMap<Shape, Rational>>;

// u_1 = v, u_n = −Σ_k Q(h_k [u^k]_n)
fn unlabeled_series(orders: &[usize], n_max: usize, cap: usize) -> Result<Series> {
    let mut u: Series = vec![BTreeMap::new(); n_max + 1];
    u[1].insert(Shape::V, Rational::from_integer(1));
    let max_k = orders.iter().copied().max().unwrap_or(0).min(n_max);
    // pow[k][n]: ordered products of k factors of total degree n, keyed by the
    // sorted factor list
    let mut pow: Vec<Vec<BTreeMap<Vec<Shape>, Rational>>> =
        vec![vec![BTreeMap::new(); n_max + 1]; max_k + 1];
    let mut count = 1usize;
    for n in 1..=n_max {
        if n >= 2 {
            // higher powers at degree n only need u_j with j < n
            for k in 2..=max_k {
                let mut acc: BTreeMap<Vec<Shape>, Rational> = BTreeMap::new();
                for n1 in 1..n {
                    let rest = n - n1;
                    if rest < k - 1 {
                        continue;
                    }
                    for (s, c) in &u[n1] {
                        for (factors, c2) in &pow[k - 1][rest] {
                            let mut f = factors.clone();
                            let pos = f.partition_point(|x| x <= s);
                            f.insert(pos, s.clone());
                            *acc.entry(f).or_insert_with(|| Rational::from_integer(0)) += c * c2;
                        }
                    }
                }
                count += acc.len();
                if count > cap {
                    return Err(Error::TermOverflow { cap, count });
                }
                pow[k][n] = acc;
            }
            let mut un: BTreeMap<Shape, Rational> = BTreeMap::new();
            for &k in orders {
                if k > max_k {
                    continue;
                }
                for (factors, c) in &pow[k][n] {
                    *un.entry(Shape::Q(k, factors.clone()))
                        .or_insert_with(|| Rational::from_integer(0)) -= c;
                }
            }
            un.retain(|_, c| *c != Rational::from_integer(0));
            count += un.len();
            if count > cap {
                return Err(Error::TermOverflow { cap, count });
            }
            u[n] = un;
        }
        if max_k >= 1 {
            pow[1][n] = u[n].iter().map(|(s, c)| (vec![s.clone()], *c)).collect();
        }
    }
    Ok(u)
}

/// Terms whose coefficient product does not vanish for `hvals` and that
/// have the fewest interior `Q` nodes among those.
pub fn leading_terms(terms: &[InteractionTerm], nonzero: impl Fn(usize) -> bool) -> Vec<InteractionTerm> {
    let live: Vec<&InteractionTerm> = terms
        .iter()
        .filter(|t| t.root.orders().iter().all(|&k| nonzero(k)))
        .collect();
    let min_q = live.iter().map(|t| t.root.interior_q_count()).min();
    live.into_iter()
        .filter(|t| Some(t.root.interior_q_count()) == min_q)
        .cloned()
        .collect()
}

struct SexprParser<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> SexprParser<'a> {
    fn new(src: &'a str) -> Self {
        SexprParser { src, pos: 0 }
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError {
            line: 1,
            column: self.pos + 1,
            message: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn atom(&mut self) -> &'a str {
        self.skip_ws();
        let start = self.pos;
        while let Some(c) = self.src[self.pos..].chars().next() {
            if c.is_whitespace() || c == '(' || c == ')' {
                break;
            }
            self.pos += c.len_utf8();
        }
        &self.src[start..self.pos]
    }

    fn expect(&mut self, c: char) -> std::result::Result<(), ParseError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn parse_term(mut self) -> std::result::Result<InteractionTerm, ParseError> {
        let start = self.pos;
        let m = self.atom();
        let m = m.strip_prefix('+').unwrap_or(m);
        let multiplier = parse_rational(m).ok_or_else(|| {
            let mut e = self.error(format!("invalid multiplier '{m}'"));
            e.column = start + 1;
            e
        })?;
        let root = self.node()?;
        self.skip_ws();
        if self.pos != self.src.len() {
            return Err(self.error("trailing input"));
        }
        InteractionTerm::new(multiplier, root).map_err(|e| self.error(e.to_string()))
    }

    fn node(&mut self) -> std::result::Result<TermNode, ParseError> {
        self.skip_ws();
        if self.src[self.pos..].starts_with('(') {
            self.pos += 1;
            let head_pos = self.pos;
            let head = self.atom();
            let node = if head == "Q" {
                let child = self.node()?;
                TermNode::ApplyQ(Box::new(child))
            } else if let Some(k) = head.strip_prefix('h').and_then(|k| k.parse::<usize>().ok()) {
                let mut children = Vec::new();
                loop {
                    self.skip_ws();
                    if self.src[self.pos..].starts_with(')') || self.pos >= self.src.len() {
                        break;
                    }
                    children.push(self.node()?);
                }
                if children.len() != k {
                    return Err(self.error(format!(
                        "product h{k} needs {k} factors, found {}",
                        children.len()
                    )));
                }
                TermNode::Product { order: k, children }
            } else {
                self.pos = head_pos;
                return Err(self.error(format!("unknown node '{head}'")));
            };
            self.expect(')')?;
            Ok(node)
        } else {
            let p = self.pos;
            let a = self.atom();
            match a.strip_prefix('v').and_then(|i| i.parse::<usize>().ok()) {
                Some(i) => Ok(TermNode::Source(i)),
                None => {
                    self.pos = p;
                    Err(self.error(format!("expected source leaf, found '{a}'")))
                }
            }
        }
    }
}

fn parse_rational(s: &str) -> Option<Rational> {
    match s.split_once('/') {
        Some((n, d)) => {
            let d: i64 = d.parse().ok()?;
            let n: i64 = n.parse().ok()?;
            (d != 0).then(|| Rational::new(n, d))
        }
        None => s.parse().ok().map(Rational::from_integer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64) -> Rational {
        Rational::from_integer(n)
    }

    #[test]
    fn quadratic_pair() {
        let terms = generate_terms_for_orders(&[2], [1, 1, 0, 0], DEFAULT_TERM_CAP).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].to_string(), "-1 (Q (h2 v1 v2))");
    }

    #[test]
    fn cubic_order_matches_two_terms() {
        let terms = generate_terms_for_orders(&[2, 3], [1, 1, 1, 0], DEFAULT_TERM_CAP).unwrap();
        let text: Vec<String> = terms.iter().map(|t| t.to_string()).collect();
        assert_eq!(text, vec!["+2 (Q (h2 v1 (Q (h2 v2 v3))))", "-1 (Q (h3 v1 v2 v3))"]);
    }

    #[test]
    fn quartic_golden() {
        let terms = generate_terms_for_orders(&[2, 3, 4], [1, 1, 1, 1], DEFAULT_TERM_CAP).unwrap();
        let text = to_sexpr_lines(&terms);
        let golden = "\
-4 (Q (h2 v1 (Q (h2 v2 (Q (h2 v3 v4))))))
-1 (Q (h2 (Q (h2 v1 v2)) (Q (h2 v3 v4))))
+2 (Q (h2 v1 (Q (h3 v2 v3 v4))))
+3 (Q (h3 v1 v2 (Q (h2 v3 v4))))
-1 (Q (h4 v1 v2 v3 v4))
";
        assert_eq!(text, golden);
        assert_eq!(parse_sexpr_lines(golden).unwrap(), terms);
    }

    #[test]
    fn single_high_order_term() {
        for k in 4..=8 {
            let terms = generate_terms_for_orders(&[k], [k - 3, 1, 1, 1], DEFAULT_TERM_CAP).unwrap();
            assert_eq!(terms.len(), 1);
            assert_eq!(terms[0].multiplier, r(-1));
            assert_eq!(terms[0].root.leaf_count(), k);
        }
    }

    #[test]
    fn multi_index_is_respected() {
        let terms = generate_terms_for_orders(&[2, 3], [2, 1, 1, 1], DEFAULT_TERM_CAP).unwrap();
        for t in &terms {
            let mut counts = [0; 4];
            for l in t.root.slot_labels() {
                counts[l - 1] += 1;
            }
            assert_eq!(counts, [2, 1, 1, 1]);
            assert!(matches!(t.root, TermNode::ApplyQ(_)));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let all: Vec<usize> = (2..=12).collect();
        let err = generate_terms_for_orders(&all, [3, 3, 3, 3], 1000).unwrap_err();
        assert!(matches!(err, Error::TermOverflow { cap: 1000, .. }));
    }

    #[test]
    fn multiset_permutation_count() {
        assert_eq!(multiset_permutations(&[1, 1, 2, 3, 4]).len(), 60);
        assert_eq!(multiset_permutations(&[1, 2, 3, 4]).len(), 24);
    }

    #[test]
    fn parse_errors_have_columns() {
        let e = InteractionTerm::parse("-1 (Q (h2 v1))").unwrap_err();
        assert!(e.message.contains("needs 2"));
        let e = InteractionTerm::parse("x (Q v1)").unwrap_err();
        assert_eq!(e.column, 1);
        assert!(InteractionTerm::parse("3/2 (Q (h2 v1 v2))").is_ok());
    }

    #[test]
    fn leading_selection() {
        let terms = generate_terms_for_orders(&[2, 3, 4], [1, 1, 1, 1], DEFAULT_TERM_CAP).unwrap();
        let ab = leading_terms(&terms, |k| k == 2 || k == 3);
        assert_eq!(ab.len(), 2);
        let c = leading_terms(&terms, |_| true);
        assert_eq!(c.len(), 1);
        let a = leading_terms(&terms, |k| k == 2);
        assert_eq!(a.len(), 2);
        assert!(a.iter().all(|t| t.root.interior_q_count() == 2));
    }
}
