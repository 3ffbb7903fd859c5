//! Extended and reduced dual graphs of singular curves, with and without a
//! modulus vertex, and their chain complexes, first homology, and Laplacians.
//!
//! The extended graph is bipartite: A-vertices are singular points, C-vertices
//! are components of the normalisation, and edges (branches) b run from
//! φ(b) ∈ A to ψ(b) ∈ C. A modulus adds one extra vertex v₀ with an edge to
//! λ(z) ∈ A for each z ∈ Σ^sing and to θ(z) ∈ C for each z ∈ Σ^reg, oriented
//! away from v₀.

use crate::abelian::{kernel_basis, IntMatrix};
use num_bigint::BigInt;
use num_traits::One;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("unknown vertex `{0}` referenced by `{1}`")]
    UnknownVertex(String, String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("A-vertex `{0}` has degree {1}, expected 2 (not an ordinary double point)")]
    BadDegree(String, usize),
    #[error("reduce_extended requires an empty Σ^sing")]
    SingularModulus,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct Branch {
    pub id: String,
    /// singular point (A-vertex) the branch lies over
    pub phi: String,
    /// component (C-vertex) the branch lies on
    pub psi: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtendedGraph {
    a: Vec<String>,
    c: Vec<String>,
    b: Vec<Branch>,
}

/// A point of the modulus together with the vertex its edge attaches to
/// (λ(z) ∈ A for Σ^sing, θ(z) ∈ C for Σ^reg).
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq, Eq)]
pub struct ModulusPoint {
    pub id: String,
    pub target: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphWithModulus {
    pub base: ExtendedGraph,
    sigma_sing: Vec<ModulusPoint>,
    sigma_reg: Vec<ModulusPoint>,
}

fn check_sorted_unique(labels: &mut Vec<String>) -> Result<(), GraphError> {
    labels.sort();
    for w in labels.windows(2) {
        if w[0] == w[1] {
            return Err(GraphError::DuplicateLabel(w[0].clone()));
        }
    }
    Ok(())
}

impl ExtendedGraph {
    pub fn new(
        mut a: Vec<String>,
        mut c: Vec<String>,
        mut b: Vec<Branch>,
    ) -> Result<Self, GraphError> {
        check_sorted_unique(&mut a)?;
        check_sorted_unique(&mut c)?;
        b.sort_by(|x, y| x.id.cmp(&y.id));
        let mut ids: Vec<String> = b.iter().map(|e| e.id.clone()).collect();
        check_sorted_unique(&mut ids)?;
        for e in &b {
            if a.binary_search(&e.phi).is_err() {
                return Err(GraphError::UnknownVertex(e.phi.clone(), e.id.clone()));
            }
            if c.binary_search(&e.psi).is_err() {
                return Err(GraphError::UnknownVertex(e.psi.clone(), e.id.clone()));
            }
        }
        Ok(ExtendedGraph { a, c, b })
    }

    pub fn a(&self) -> &[String] {
        &self.a
    }

    pub fn c(&self) -> &[String] {
        &self.c
    }

    pub fn b(&self) -> &[Branch] {
        &self.b
    }

    pub fn a_index(&self, label: &str) -> usize {
        self.a.binary_search_by(|x| x.as_str().cmp(label)).expect("A label")
    }

    pub fn c_index(&self, label: &str) -> usize {
        self.c.binary_search_by(|x| x.as_str().cmp(label)).expect("C label")
    }
}

impl GraphWithModulus {
    pub fn new(
        base: ExtendedGraph,
        mut sigma_sing: Vec<ModulusPoint>,
        mut sigma_reg: Vec<ModulusPoint>,
    ) -> Result<Self, GraphError> {
        sigma_sing.sort_by(|x, y| x.id.cmp(&y.id));
        sigma_reg.sort_by(|x, y| x.id.cmp(&y.id));
        let mut ids: Vec<String> =
            sigma_sing.iter().chain(&sigma_reg).map(|z| z.id.clone()).collect();
        check_sorted_unique(&mut ids)?;
        for z in &sigma_sing {
            if base.a.binary_search(&z.target).is_err() {
                return Err(GraphError::UnknownVertex(z.target.clone(), z.id.clone()));
            }
        }
        for z in &sigma_reg {
            if base.c.binary_search(&z.target).is_err() {
                return Err(GraphError::UnknownVertex(z.target.clone(), z.id.clone()));
            }
        }
        Ok(GraphWithModulus { base, sigma_sing, sigma_reg })
    }

    pub fn without_modulus(base: ExtendedGraph) -> Self {
        GraphWithModulus { base, sigma_sing: vec![], sigma_reg: vec![] }
    }

    pub fn sigma_sing(&self) -> &[ModulusPoint] {
        &self.sigma_sing
    }

    pub fn sigma_reg(&self) -> &[ModulusPoint] {
        &self.sigma_reg
    }

    /// Column labels of the edge space ℤ[B] ⊕ ℤ[Σ^sing] ⊕ ℤ[Σ^reg],
    /// in the fixed ordering used by all matrices.
    pub fn edge_labels(&self) -> Vec<String> {
        self.base
            .b
            .iter()
            .map(|e| e.id.clone())
            .chain(self.sigma_sing.iter().map(|z| z.id.clone()))
            .chain(self.sigma_reg.iter().map(|z| z.id.clone()))
            .collect()
    }

    /// The block matrix [[ψ, 0, θ], [φ, λ, 0]] from
    /// ℤ[B] ⊕ ℤ[Σ^sing] ⊕ ℤ[Σ^reg] to ℤ[C] ⊕ ℤ[A]; the character group of
    /// the generalized Jacobian is its kernel.
    pub fn char_group_matrix(&self) -> IntMatrix {
        let g = &self.base;
        let (na, nc) = (g.a.len(), g.c.len());
        let (nb, ns, nr) = (g.b.len(), self.sigma_sing.len(), self.sigma_reg.len());
        let mut m = IntMatrix::zero(nc + na, nb + ns + nr);
        for (j, e) in g.b.iter().enumerate() {
            m[(g.c_index(&e.psi), j)] = BigInt::one();
            m[(nc + g.a_index(&e.phi), j)] = BigInt::one();
        }
        for (j, z) in self.sigma_sing.iter().enumerate() {
            m[(nc + g.a_index(&z.target), nb + j)] = BigInt::one();
        }
        for (j, z) in self.sigma_reg.iter().enumerate() {
            m[(g.c_index(&z.target), nb + ns + j)] = BigInt::one();
        }
        m
    }

    /// Boundary matrix of the topological realisation: rows are vertices
    /// (A sorted, then C sorted, then v₀ if the modulus is nonempty), columns
    /// are edges (B, Σ^sing, Σ^reg). ∂b = ψ(b) − φ(b); ∂z = target − v₀.
    pub fn boundary_matrix(&self) -> IntMatrix {
        let g = &self.base;
        let (na, nc) = (g.a.len(), g.c.len());
        let has_v0 = !self.sigma_sing.is_empty() || !self.sigma_reg.is_empty();
        let nv = na + nc + has_v0 as usize;
        let (nb, ns, nr) = (g.b.len(), self.sigma_sing.len(), self.sigma_reg.len());
        let mut m = IntMatrix::zero(nv, nb + ns + nr);
        for (j, e) in g.b.iter().enumerate() {
            m[(na + g.c_index(&e.psi), j)] += BigInt::one();
            m[(g.a_index(&e.phi), j)] -= BigInt::one();
        }
        for (j, z) in self.sigma_sing.iter().enumerate() {
            m[(g.a_index(&z.target), nb + j)] += BigInt::one();
            m[(na + nc, nb + j)] -= BigInt::one();
        }
        for (j, z) in self.sigma_reg.iter().enumerate() {
            m[(na + g.c_index(&z.target), nb + ns + j)] += BigInt::one();
            m[(na + nc, nb + ns + j)] -= BigInt::one();
        }
        m
    }

    pub fn num_vertices(&self) -> usize {
        let has_v0 = !self.sigma_sing.is_empty() || !self.sigma_reg.is_empty();
        self.base.a.len() + self.base.c.len() + has_v0 as usize
    }

    pub fn num_edges(&self) -> usize {
        self.base.b.len() + self.sigma_sing.len() + self.sigma_reg.len()
    }

    pub fn num_connected_components(&self) -> usize {
        let n = self.num_vertices();
        if n == 0 {
            return 0;
        }
        let mut dsu: Vec<usize> = (0..n).collect();
        fn find(dsu: &mut Vec<usize>, x: usize) -> usize {
            if dsu[x] != x {
                let r = find(dsu, dsu[x]);
                dsu[x] = r;
            }
            dsu[x]
        }
        let g = &self.base;
        let (na, nc) = (g.a.len(), g.c.len());
        let unite = |dsu: &mut Vec<usize>, x: usize, y: usize| {
            let (rx, ry) = (find(dsu, x), find(dsu, y));
            dsu[rx] = ry;
        };
        for e in &g.b {
            unite(&mut dsu, g.a_index(&e.phi), na + g.c_index(&e.psi));
        }
        for z in &self.sigma_sing {
            unite(&mut dsu, g.a_index(&z.target), na + nc);
        }
        for z in &self.sigma_reg {
            unite(&mut dsu, na + g.c_index(&z.target), na + nc);
        }
        (0..n).filter(|&x| find(&mut dsu, x) == x).count()
    }
}

/// First homology: rank = E − V + #components, and a cycle basis (columns
/// are ℤ-cycles in the edge coordinates of `edge_labels`).
pub fn h1(g: &GraphWithModulus) -> (usize, IntMatrix) {
    let basis = kernel_basis(&g.boundary_matrix());
    let rank = g.num_edges() + g.num_connected_components() - g.num_vertices();
    debug_assert_eq!(basis.cols(), rank);
    (rank, basis)
}

/// Reduced graph: vertices are components, one undirected edge per double
/// point (loops and multi-edges allowed), with optional modulus edges from
/// a distinguished vertex v₀ to the components carrying the modulus points.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedGraph {
    vertices: Vec<String>,
    /// undirected edges (u, v) between component vertices, sorted endpoints
    edges: Vec<(String, String)>,
    /// modulus points: (point id, component vertex it lies on)
    theta_edges: Vec<ModulusPoint>,
}

impl ReducedGraph {
    pub fn new(
        mut vertices: Vec<String>,
        edges: Vec<(String, String)>,
        mut theta_edges: Vec<ModulusPoint>,
    ) -> Result<Self, GraphError> {
        check_sorted_unique(&mut vertices)?;
        let mut norm = Vec::with_capacity(edges.len());
        for (u, v) in edges {
            if vertices.binary_search(&u).is_err() {
                return Err(GraphError::UnknownVertex(u, "edge".into()));
            }
            if vertices.binary_search(&v).is_err() {
                return Err(GraphError::UnknownVertex(v, "edge".into()));
            }
            norm.push(if u <= v { (u, v) } else { (v, u) });
        }
        norm.sort();
        theta_edges.sort_by(|x, y| x.id.cmp(&y.id));
        for z in &theta_edges {
            if vertices.binary_search(&z.target).is_err() {
                return Err(GraphError::UnknownVertex(z.target.clone(), z.id.clone()));
            }
        }
        Ok(ReducedGraph { vertices, edges: norm, theta_edges })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[(String, String)] {
        &self.edges
    }

    pub fn theta_edges(&self) -> &[ModulusPoint] {
        &self.theta_edges
    }

    pub fn vertex_index(&self, label: &str) -> usize {
        self.vertices.binary_search_by(|x| x.as_str().cmp(label)).expect("vertex label")
    }

    fn b1(&self) -> usize {
        // Betti number including v₀ and θ-edges
        let has_v0 = !self.theta_edges.is_empty();
        let nv = self.vertices.len() + has_v0 as usize;
        let ne = self.edges.len() + self.theta_edges.len();
        let mut dsu: Vec<usize> = (0..nv).collect();
        fn find(dsu: &mut Vec<usize>, x: usize) -> usize {
            if dsu[x] != x {
                let r = find(dsu, dsu[x]);
                dsu[x] = r;
            }
            dsu[x]
        }
        for (u, v) in &self.edges {
            let (a, b) = (self.vertex_index(u), self.vertex_index(v));
            let (ra, rb) = (find(&mut dsu, a), find(&mut dsu, b));
            dsu[ra] = rb;
        }
        for z in &self.theta_edges {
            let a = self.vertex_index(&z.target);
            let (ra, rb) = (find(&mut dsu, a), find(&mut dsu, self.vertices.len()));
            dsu[ra] = rb;
        }
        let comps = (0..nv).filter(|&x| find(&mut dsu, x) == x).count();
        ne + comps - nv
    }
}

/// 0-Laplacian of the reduced graph on its component vertices (v₀ and
/// modulus edges excluded): diagonal = vertex degree (loops contribute 0),
/// off-diagonal (v, v′) = −#edges between v and v′.
pub fn laplacian(g: &ReducedGraph) -> IntMatrix {
    let n = g.vertices.len();
    let mut m = IntMatrix::zero(n, n);
    for (u, v) in &g.edges {
        let (a, b) = (g.vertex_index(u), g.vertex_index(v));
        if a == b {
            continue;
        }
        m[(a, a)] += BigInt::one();
        m[(b, b)] += BigInt::one();
        m[(a, b)] -= BigInt::one();
        m[(b, a)] -= BigInt::one();
    }
    m
}

/// Contract each degree-2 A-vertex of the extended graph to a single edge
/// between its two C-neighbours; attach the Σ^reg modulus edges unchanged.
pub fn reduce_extended(
    g: &ExtendedGraph,
    modulus: &GraphWithModulus,
) -> Result<ReducedGraph, GraphError> {
    if !modulus.sigma_sing.is_empty() {
        return Err(GraphError::SingularModulus);
    }
    let mut branches_at: BTreeMap<&str, Vec<&Branch>> = BTreeMap::new();
    for v in &g.a {
        branches_at.insert(v.as_str(), Vec::new());
    }
    for e in &g.b {
        branches_at.get_mut(e.phi.as_str()).unwrap().push(e);
    }
    let mut edges = Vec::new();
    for (v, bs) in &branches_at {
        if bs.len() != 2 {
            return Err(GraphError::BadDegree(v.to_string(), bs.len()));
        }
        edges.push((bs[0].psi.clone(), bs[1].psi.clone()));
    }
    ReducedGraph::new(g.c.clone(), edges, modulus.sigma_reg.clone())
}

/// Betti-number preservation check for `reduce_extended`.
pub fn betti_preserved(g: &GraphWithModulus, r: &ReducedGraph) -> bool {
    h1(g).0 == r.b1()
}

// JSON schema: {"A": [...], "C": [...], "B": [{"id","phi","psi"}],
//               "sigma_sing": [{"id","lambda"}], "sigma_reg": [{"id","theta"}]}
#[derive(Serialize, Deserialize)]
pub struct GraphJson {
    #[serde(rename = "A")]
    pub a: Vec<String>,
    #[serde(rename = "C")]
    pub c: Vec<String>,
    #[serde(rename = "B")]
    pub b: Vec<Branch>,
    #[serde(default)]
    pub sigma_sing: Vec<SigmaSingJson>,
    #[serde(default)]
    pub sigma_reg: Vec<SigmaRegJson>,
}

#[derive(Serialize, Deserialize)]
pub struct SigmaSingJson {
    pub id: String,
    pub lambda: String,
}

#[derive(Serialize, Deserialize)]
pub struct SigmaRegJson {
    pub id: String,
    pub theta: String,
}

impl GraphJson {
    pub fn into_graph(self) -> Result<GraphWithModulus, GraphError> {
        let base = ExtendedGraph::new(self.a, self.c, self.b)?;
        GraphWithModulus::new(
            base,
            self.sigma_sing
                .into_iter()
                .map(|z| ModulusPoint { id: z.id, target: z.lambda })
                .collect(),
            self.sigma_reg
                .into_iter()
                .map(|z| ModulusPoint { id: z.id, target: z.theta })
                .collect(),
        )
    }

    pub fn from_graph(g: &GraphWithModulus) -> Self {
        GraphJson {
            a: g.base.a.clone(),
            c: g.base.c.clone(),
            b: g.base.b.clone(),
            sigma_sing: g
                .sigma_sing
                .iter()
                .map(|z| SigmaSingJson { id: z.id.clone(), lambda: z.target.clone() })
                .collect(),
            sigma_reg: g
                .sigma_reg
                .iter()
                .map(|z| SigmaRegJson { id: z.id.clone(), theta: z.target.clone() })
                .collect(),
        }
    }
}
