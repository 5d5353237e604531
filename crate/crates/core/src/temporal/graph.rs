use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub label: String,
    pub source: usize,
    pub target: usize,
}

/// A finite directed multigraph `E ⇉ V`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinGraph {
    vertices: Vec<String>,
    edges: Vec<Edge>,
    /// Outgoing edge indices per vertex.
    out: Vec<Vec<usize>>,
}

impl FinGraph {
    pub fn new(vertices: Vec<String>, edges: Vec<Edge>) -> Result<Self> {
        for (i, v) in vertices.iter().enumerate() {
            if vertices[..i].contains(v) {
                return Err(Error::Value(format!("vertex {v} declared twice")));
            }
        }
        let mut out = vec![Vec::new(); vertices.len()];
        for (i, e) in edges.iter().enumerate() {
            if e.source >= vertices.len() || e.target >= vertices.len() {
                return Err(Error::OutOfRange(format!("edge {} leaves the vertex set", e.label)));
            }
            if edges[..i].iter().any(|f| f.label == e.label) {
                return Err(Error::Value(format!("edge {} declared twice", e.label)));
            }
            out[e.source].push(i);
        }
        Ok(FinGraph { vertices, edges, out })
    }

    pub fn vertices(&self) -> &[String] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// All paths with `n` edges, in lexicographic order of their edge lists.
    pub fn sections(&self, n: usize) -> Vec<Section> {
        let mut acc = Vec::new();
        for v in 0..self.vertices.len() {
            self.extend(Section::vertex(v), n, &mut acc);
        }
        acc
    }

    fn extend(&self, s: Section, n: usize, acc: &mut Vec<Section>) {
        if s.len() == n {
            acc.push(s);
            return;
        }
        for &e in &self.out[s.last()] {
            let mut t = s.clone();
            t.edges.push(e);
            t.vertices.push(self.edges[e].target);
            self.extend(t, n, acc);
        }
    }
}

/// The graph with one vertex per element and one edge per ordered pair, so
/// that paths with `n` edges are exactly the `(n + 1)`-tuples of elements.
/// The edge from `a` to `b` has index `a · |A| + b`.
pub fn complete_graph(labels: &[String]) -> FinGraph {
    let n = labels.len();
    let edges = (0..n)
        .flat_map(|a| (0..n).map(move |b| (a, b)))
        .map(|(a, b)| Edge { label: format!("{}→{}", labels[a], labels[b]), source: a, target: b })
        .collect();
    FinGraph::new(labels.to_vec(), edges).expect("labels are distinct")
}

/// A path in a graph: data over the discrete interval `[0, n]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Section {
    vertices: Vec<usize>,
    edges: Vec<usize>,
}

impl Section {
    pub fn new(graph: &FinGraph, vertices: Vec<usize>, edges: Vec<usize>) -> Result<Self> {
        if vertices.len() != edges.len() + 1 {
            return Err(Error::Value(format!("{} vertices for {} edges", vertices.len(), edges.len())));
        }
        if let Some(&v) = vertices.iter().find(|&&v| v >= graph.vertex_count()) {
            return Err(Error::OutOfRange(format!("vertex {v}")));
        }
        for (i, &e) in edges.iter().enumerate() {
            let edge = graph.edges.get(e).ok_or_else(|| Error::OutOfRange(format!("edge {e}")))?;
            if edge.source != vertices[i] || edge.target != vertices[i + 1] {
                return Err(Error::Value(format!("edge {} does not join steps {i} and {}", edge.label, i + 1)));
            }
        }
        Ok(Section { vertices, edges })
    }

    /// The length-0 section sitting at one vertex.
    pub fn vertex(v: usize) -> Self {
        Section { vertices: vec![v], edges: Vec::new() }
    }

    /// A value sequence as a path in the complete graph on `carrier` elements.
    pub fn in_complete(values: &[usize], carrier: usize) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Value("a section has at least one vertex".into()));
        }
        if let Some(&v) = values.iter().find(|&&v| v >= carrier) {
            return Err(Error::OutOfRange(format!("value {v} of {carrier}")));
        }
        Ok(Section { vertices: values.to_vec(), edges: values.windows(2).map(|w| w[0] * carrier + w[1]).collect() })
    }

    /// Number of edges.
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn first(&self) -> usize {
        self.vertices[0]
    }

    pub fn last(&self) -> usize {
        *self.vertices.last().expect("non-empty")
    }
}

/// The sub-path starting at vertex `p` with `m` edges.
pub fn restrict_section(s: &Section, p: usize, m: usize) -> Result<Section> {
    if p + m > s.len() {
        return Err(Error::OutOfRange(format!("[{p}, {}] is not inside [0, {}]", p + m, s.len())));
    }
    Ok(Section { vertices: s.vertices[p..=p + m].to_vec(), edges: s.edges[p..p + m].to_vec() })
}

/// Concatenation along a shared endpoint.
pub fn glue_sections(x: &Section, y: &Section) -> Result<Section> {
    if x.last() != y.first() {
        return Err(Error::Value(format!(
            "cannot glue: first section ends at vertex {}, second starts at {}",
            x.last(),
            y.first()
        )));
    }
    let mut vertices = x.vertices.clone();
    vertices.extend_from_slice(&y.vertices[1..]);
    let mut edges = x.edges.clone();
    edges.extend_from_slice(&y.edges);
    Ok(Section { vertices, edges })
}
