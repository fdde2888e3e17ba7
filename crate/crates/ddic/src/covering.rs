//! Covering graphs over parties and the biseparable bound they induce.
//!
//! A covering is a connected undirected graph on the parties; every edge is
//! one bipartite test. The quantity that controls how hard a covering is to
//! spoof is its global edge min-cut: a biseparability strategy must cut at
//! least `mincut` of the `|E|` edges, and each cut edge can score at most the
//! local bound. Hence the certification threshold
//!
//! ```text
//! bound = beta_Q - (mincut / |E|) * (beta_Q - beta_L)
//! ```
//!
//! which any biseparable state's edge-averaged score obeys; exceeding it
//! strictly certifies genuine multipartite entanglement.
//!
//! Three stock coverings are provided: the path (`minimal`, N-1 edges,
//! min-cut 1), the complete graph (`full`, min-cut N-1 but ratio 2/N), and
//! the ring (N edges, min-cut 2, same ratio as full with far fewer edges).
//! [`optimality_audit`] checks exhaustively, over every connected graph on
//! up to 7 vertices, that no covering beats the ratio 2/N — the integer
//! inequality `mincut * N <= 2 * |E|` — so ring and complete are optimal.

use crate::bell::BellInequality;
use crate::error::{Error, Result};
use std::collections::BTreeSet;
use std::fmt::Write as _;

/// Connected undirected graph on `n` parties; edges are stored sorted with
/// `i < j`, zero-indexed internally, one-indexed in all text formats.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Covering {
    n: usize,
    edges: Vec<(usize, usize)>,
}

/// Stock covering families with known min-cut structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveringFamily {
    Minimal,
    Full,
    Ring,
}

impl Covering {
    /// Path covering `1-2, 2-3, ..., (N-1)-N`: the cheapest connected choice
    /// (N-1 edges, min-cut 1).
    pub fn minimal(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidCovering("need at least 2 parties".into()));
        }
        Ok(Covering { n, edges: (0..n - 1).map(|i| (i, i + 1)).collect() })
    }

    /// Complete graph on N parties.
    pub fn full(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidCovering("need at least 2 parties".into()));
        }
        let mut edges = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                edges.push((i, j));
            }
        }
        Ok(Covering { n, edges })
    }

    /// Ring covering `1-2, ..., (N-1)-N, N-1`; requires `N >= 3` (on two
    /// parties the ring would duplicate its single edge).
    pub fn ring(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidCovering("a ring needs at least 3 parties".into()));
        }
        let mut edges: Vec<(usize, usize)> = (0..n - 1).map(|i| (i, i + 1)).collect();
        edges.push((0, n - 1));
        edges.sort_unstable();
        Ok(Covering { n, edges })
    }

    /// Covering from explicit zero-indexed edges. Validates range, rejects
    /// self-loops and duplicates, and requires the graph to be connected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidCovering("need at least 2 parties".into()));
        }
        if edges.is_empty() {
            return Err(Error::InvalidCovering("a covering needs at least one edge".into()));
        }
        let mut seen = BTreeSet::new();
        let mut sorted = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::InvalidCovering(format!(
                    "edge ({a}, {b}) out of range for {n} parties"
                )));
            }
            if a == b {
                return Err(Error::InvalidCovering(format!("self-loop at party {a}")));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::InvalidCovering(format!(
                    "duplicate edge ({}, {})",
                    e.0, e.1
                )));
            }
            sorted.push(e);
        }
        sorted.sort_unstable();
        let cov = Covering { n, edges: sorted };
        if !cov.is_connected() {
            return Err(Error::InvalidCovering("covering must be connected".into()));
        }
        Ok(cov)
    }

    /// Build one of the stock families.
    pub fn from_family(family: CoveringFamily, n: usize) -> Result<Self> {
        match family {
            CoveringFamily::Minimal => Self::minimal(n),
            CoveringFamily::Full => Self::full(n),
            CoveringFamily::Ring => Self::ring(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Which stock family this edge set realizes, if any.
    pub fn family(&self) -> Option<CoveringFamily> {
        for fam in [CoveringFamily::Minimal, CoveringFamily::Full, CoveringFamily::Ring] {
            if let Ok(c) = Self::from_family(fam, self.n) {
                if c.edges == self.edges {
                    return Some(fam);
                }
            }
        }
        None
    }

    fn is_connected(&self) -> bool {
        let mut adj = vec![Vec::new(); self.n];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.n
    }

    /// Global edge min-cut via the Stoer-Wagner minimum-cut algorithm with
    /// unit weights. Deterministic (ties resolved by lowest index).
    pub fn mincut(&self) -> usize {
        let n = self.n;
        if n == 2 {
            return self.edges.len();
        }
        let mut w = vec![vec![0usize; n]; n];
        for &(a, b) in &self.edges {
            w[a][b] += 1;
            w[b][a] += 1;
        }
        let mut active: Vec<usize> = (0..n).collect();
        let mut best = usize::MAX;
        while active.len() > 1 {
            let m = active.len();
            let mut added = vec![false; m];
            let mut weight = vec![0usize; m];
            let mut order = Vec::with_capacity(m);
            let mut last_weight = 0;
            for _ in 0..m {
                let mut pick = usize::MAX;
                for k in 0..m {
                    if !added[k] && (pick == usize::MAX || weight[k] > weight[pick]) {
                        pick = k;
                    }
                }
                added[pick] = true;
                last_weight = weight[pick];
                order.push(pick);
                for l in 0..m {
                    if !added[l] {
                        weight[l] += w[active[pick]][active[l]];
                    }
                }
            }
            best = best.min(last_weight);
            // merge the last vertex of the phase into the one before it
            let vt = active[order[m - 1]];
            let vs = active[order[m - 2]];
            for l in 0..n {
                if l != vs && l != vt {
                    w[vs][l] += w[vt][l];
                    w[l][vs] = w[vs][l];
                }
            }
            active.retain(|&v| v != vt);
        }
        best
    }

    /// Min-cut by enumerating all `2^(n-1)` bipartitions. Exponential;
    /// reference oracle for [`Self::mincut`].
    pub fn mincut_by_enumeration(&self) -> usize {
        assert!(self.n >= 2 && self.n <= 24, "enumeration oracle supports 2..=24 parties");
        let mut best = usize::MAX;
        // vertex 0 stays on the fixed side; mask picks the other side
        for mask in 1u32..(1 << (self.n - 1)) {
            let side = |v: usize| v > 0 && (mask >> (v - 1)) & 1 == 1;
            let cut = self.edges.iter().filter(|&&(a, b)| side(a) != side(b)).count();
            best = best.min(cut);
        }
        best
    }

    /// The fraction of tests a biseparability strategy must sacrifice,
    /// `mincut / |E|`, as an exact integer pair `(mincut, |E|)`.
    pub fn cut_fraction(&self) -> (usize, usize) {
        (self.mincut(), self.edges.len())
    }

    /// One-indexed `i j` edge list, one edge per line, sorted.
    pub fn to_edge_list_text(&self) -> String {
        let mut out = String::new();
        for &(a, b) in &self.edges {
            writeln!(out, "{} {}", a + 1, b + 1).unwrap();
        }
        out
    }

    /// Parse a one-indexed `i j` edge list (one edge per line; blank lines
    /// and `#` comments ignored). The party count is the largest index seen.
    pub fn from_edge_list_text(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut max_idx = 0usize;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut it = line.split_whitespace();
            let parse = |tok: Option<&str>| -> Result<usize> {
                let tok = tok.ok_or_else(|| {
                    Error::InvalidCovering(format!("line {}: expected 'i j'", lineno + 1))
                })?;
                let v: usize = tok.parse().map_err(|_| {
                    Error::InvalidCovering(format!("line {}: bad index {tok:?}", lineno + 1))
                })?;
                if v == 0 {
                    return Err(Error::InvalidCovering(format!(
                        "line {}: indices are one-based",
                        lineno + 1
                    )));
                }
                Ok(v)
            };
            let a = parse(it.next())?;
            let b = parse(it.next())?;
            if it.next().is_some() {
                return Err(Error::InvalidCovering(format!(
                    "line {}: trailing tokens",
                    lineno + 1
                )));
            }
            max_idx = max_idx.max(a).max(b);
            edges.push((a - 1, b - 1));
        }
        if edges.is_empty() {
            return Err(Error::InvalidCovering("no edges in edge list".into()));
        }
        Self::from_edges(max_idx, &edges)
    }
}

/// The biseparable threshold `beta_Q - (mincut/|E|)(beta_Q - beta_L)` for a
/// covering under a given inequality (computed with the configured local
/// bound).
pub fn biseparable_bound(covering: &Covering, ineq: &BellInequality) -> f64 {
    let (m, e) = covering.cut_fraction();
    let bq = ineq.quantum_bound();
    let bl = ineq.local_bound();
    bq - (m as f64 / e as f64) * (bq - bl)
}

// ---------------------------------------------------------------------------
// Exhaustive optimality audit

/// Summary of an exhaustive scan over all connected graphs on `n` vertices.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AuditReport {
    pub n: usize,
    pub connected_graphs: u64,
    /// Graphs with `mincut * n == 2 * |E|` (ratio exactly 2/n).
    pub equality_attainers: u64,
    /// Graphs with `mincut * n > 2 * |E|` — must be zero.
    pub violations: u64,
    /// Best cut fraction found, as an exact integer pair.
    pub max_ratio: (usize, usize),
    /// A few equality attainers, as one-indexed edge lists.
    pub sample_attainers: Vec<Vec<(usize, usize)>>,
}

/// Scan every connected graph on `n` vertices (`3 <= n <= 7`) and verify the
/// integer inequality `mincut * n <= 2 * |E|`, i.e. no covering has a cut
/// fraction above 2/n. Comparisons are exact integer arithmetic, so the
/// audit cannot be fooled by rounding.
pub fn optimality_audit(n: usize) -> Result<AuditReport> {
    if !(3..=7).contains(&n) {
        return Err(Error::Config(format!(
            "optimality audit supports 3..=7 vertices, got {n}"
        )));
    }
    let pairs: Vec<(usize, usize)> = {
        let mut v = Vec::new();
        for i in 0..n {
            for j in (i + 1)..n {
                v.push((i, j));
            }
        }
        v
    };
    let n_pairs = pairs.len();
    let mut report = AuditReport {
        n,
        connected_graphs: 0,
        equality_attainers: 0,
        violations: 0,
        max_ratio: (0, 1),
        sample_attainers: Vec::new(),
    };
    let mut edges = Vec::with_capacity(n_pairs);
    for mask in 1u32..(1 << n_pairs) {
        if (mask.count_ones() as usize) < n - 1 {
            continue; // cannot be connected
        }
        edges.clear();
        for (k, &p) in pairs.iter().enumerate() {
            if (mask >> k) & 1 == 1 {
                edges.push(p);
            }
        }
        if !connected(n, &edges) {
            continue;
        }
        report.connected_graphs += 1;
        let cov = Covering { n, edges: edges.clone() };
        let m = cov.mincut();
        let e = edges.len();
        // compare m/e with the incumbent max_ratio a/b: m*b vs a*e
        let (a, b) = report.max_ratio;
        if m * b > a * e {
            report.max_ratio = (m, e);
        }
        match (m * n).cmp(&(2 * e)) {
            std::cmp::Ordering::Greater => report.violations += 1,
            std::cmp::Ordering::Equal => {
                report.equality_attainers += 1;
                if report.sample_attainers.len() < 3 {
                    report
                        .sample_attainers
                        .push(edges.iter().map(|&(x, y)| (x + 1, y + 1)).collect());
                }
            }
            std::cmp::Ordering::Less => {}
        }
    }
    Ok(report)
}

fn connected(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut components = n;
    for &(a, b) in edges {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components == 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn stock_family_mincuts() {
        for n in 3..=8 {
            assert_eq!(Covering::minimal(n).unwrap().mincut(), 1, "path n={n}");
            assert_eq!(Covering::full(n).unwrap().mincut(), n - 1, "complete n={n}");
            assert_eq!(Covering::ring(n).unwrap().mincut(), 2, "ring n={n}");
        }
        assert_eq!(Covering::minimal(2).unwrap().mincut(), 1);
    }

    #[test]
    fn family_detection_round_trips() {
        assert_eq!(Covering::minimal(5).unwrap().family(), Some(CoveringFamily::Minimal));
        assert_eq!(Covering::full(5).unwrap().family(), Some(CoveringFamily::Full));
        assert_eq!(Covering::ring(5).unwrap().family(), Some(CoveringFamily::Ring));
        // path on 3 == ring minus an edge; a star on 4 is none of the three
        let star = Covering::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(star.family(), None);
        // on 3 parties ring == full; detection returns the first match
        assert_eq!(Covering::ring(3).unwrap().family(), Some(CoveringFamily::Full));
    }

    #[test]
    fn validation_rejects_bad_edge_sets() {
        assert!(Covering::from_edges(3, &[(0, 1)]).is_err()); // disconnected
        assert!(Covering::from_edges(3, &[(0, 0), (1, 2)]).is_err()); // self-loop
        assert!(Covering::from_edges(3, &[(0, 1), (1, 0), (1, 2)]).is_err()); // duplicate
        assert!(Covering::from_edges(3, &[(0, 3), (1, 2)]).is_err()); // out of range
        assert!(Covering::from_edges(1, &[]).is_err());
        assert!(Covering::ring(2).is_err());
    }

    #[test]
    fn edge_list_text_round_trip() {
        let cov = Covering::ring(4).unwrap();
        let text = cov.to_edge_list_text();
        assert_eq!(text, "1 2\n1 4\n2 3\n3 4\n");
        let back = Covering::from_edge_list_text(&text).unwrap();
        assert_eq!(back, cov);
        // comments, blank lines, arbitrary order
        let messy = "# a ring\n2 1\n\n3 2\n4 3\n4 1\n";
        assert_eq!(Covering::from_edge_list_text(messy).unwrap(), cov);
        assert!(Covering::from_edge_list_text("0 1\n").is_err());
        assert!(Covering::from_edge_list_text("1 2 3\n").is_err());
        assert!(Covering::from_edge_list_text("").is_err());
    }

    #[test]
    fn chsh_bounds_for_stock_coverings() {
        let chsh = BellInequality::chsh();
        let r2 = 2.0 * 2.0_f64.sqrt();
        // path on 4: bound = 2sqrt2 - (2sqrt2 - 2)/3
        let b = biseparable_bound(&Covering::minimal(4).unwrap(), &chsh);
        assert!((b - 2.552_284_749_830_793_7).abs() < 1e-15, "{b}");
        assert!((b - (r2 - (r2 - 2.0) / 3.0)).abs() < 1e-15);
        // complete on 4: bound = 2sqrt2 - (2sqrt2 - 2)/2 = sqrt2 + 1
        let b = biseparable_bound(&Covering::full(4).unwrap(), &chsh);
        assert!((b - 2.414_213_562_373_095).abs() < 1e-15, "{b}");
        assert!((b - (2.0_f64.sqrt() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn ring_matches_full_bound_exactly() {
        let chsh = BellInequality::chsh();
        for n in 3..=12 {
            let ring = biseparable_bound(&Covering::ring(n).unwrap(), &chsh);
            let full = biseparable_bound(&Covering::full(n).unwrap(), &chsh);
            // bit-for-bit: both evaluate (2/n)(bq - bl) from the same integers
            assert_eq!(ring, full, "n={n}");
        }
    }

    #[test]
    fn two_party_bound_degenerates_to_local() {
        let chsh = BellInequality::chsh();
        assert_eq!(biseparable_bound(&Covering::minimal(2).unwrap(), &chsh), 2.0);
        assert_eq!(biseparable_bound(&Covering::full(2).unwrap(), &chsh), 2.0);
    }

    fn random_connected(n: usize, rng: &mut ChaCha8Rng) -> Covering {
        loop {
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if rng.gen::<f64>() < 0.4 {
                        edges.push((i, j));
                    }
                }
            }
            if edges.is_empty() {
                continue;
            }
            if let Ok(cov) = Covering::from_edges(n, &edges) {
                return cov;
            }
        }
    }

    #[test]
    fn stoer_wagner_matches_enumeration_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for trial in 0..200 {
            let n = rng.gen_range(3..=10);
            let cov = random_connected(n, &mut rng);
            assert_eq!(
                cov.mincut(),
                cov.mincut_by_enumeration(),
                "trial {trial}: n={n}, edges={:?}",
                cov.edges()
            );
        }
    }

    #[test]
    fn audit_small_sizes() {
        // n=3: connected graphs are P3 (x3) and K3; only K3 attains 2/3
        let r = optimality_audit(3).unwrap();
        assert_eq!(r.connected_graphs, 4);
        assert_eq!(r.violations, 0);
        assert_eq!(r.equality_attainers, 1);
        assert_eq!(r.max_ratio.0 * r.n, 2 * r.max_ratio.1);
        // n=4: 38 connected labeled graphs
        let r = optimality_audit(4).unwrap();
        assert_eq!(r.connected_graphs, 38);
        assert_eq!(r.violations, 0);
        assert!(r.equality_attainers >= 2); // at least C4 (x3) and K4
        assert!(optimality_audit(2).is_err());
        assert!(optimality_audit(8).is_err());
    }
}
