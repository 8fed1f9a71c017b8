//! Lattice builders: Dirichlet square and triangular lattices, indicator-
//! restricted domains, the Sinai obstacle graph, 1D chains, and lead
//! attachment.
//!
//! The square and triangular builders share one normalization scheme driven
//! by the elementary cells of the tiling:
//!
//! * a cell is *present* when it lies inside the target domain;
//! * an edge is kept exactly when both of its flanking cells are present
//!   (edges on the boundary of the cell union are deleted);
//! * a vertex is interior when every cell around it is present, otherwise it
//!   is a Dirichlet wall vertex;
//! * a wall vertex left with several kept edges (a re-entrant corner) is
//!   duplicated into one disconnected copy per edge;
//! * vertices with no kept edge are dropped.
//!
//! The Sinai builder intentionally uses a simpler surgery (vertices strictly
//! inside the disc removed with their edges, exposed survivors re-marked as
//! wall vertices) and therefore keeps staircase wall-to-wall edges and
//! multi-edge wall vertices; see [`build_sinai_graph`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::{Edge, Lead, LeadDirection, MetricGraph, Potential, Vertex, VertexId, VertexKind};

/// Result of an indicator-domain build. When the kept edges fall apart into
/// several connected components only the largest is retained;
/// `dropped_components` reports how many were discarded.
#[derive(Debug)]
pub struct DomainBuild {
    pub graph: MetricGraph,
    pub dropped_components: usize,
}

/// Neighbor slots used to key split wall-vertex copies to their edges.
/// Square lattices use slots 0..4, triangular ones 0..6.
const SLOT_COUNT: usize = 6;

struct PointRec {
    /// Vertex id per neighbor slot; identical entries unless the point was
    /// split into per-edge copies.
    slot_ids: [usize; SLOT_COUNT],
}

const UNASSIGNED: usize = usize::MAX;

/// Shared assembly pass: candidate points with per-slot kept-edge flags go
/// in, a normalized `MetricGraph` comes out.
///
/// `points` maps lattice keys (row-major ordering) to
/// `(position, interior, kept_slots, neighbor_keys)`. Slot `s` of a point
/// must pair with `opposite(s)` of the neighbor it names.
fn assemble<F>(
    dimension: usize,
    spacing: f64,
    points: &BTreeMap<(i64, i64), (Vec<f64>, bool, Vec<(u8, (i64, i64))>)>,
    alpha: F,
) -> MetricGraph
where
    F: Fn(&[f64]) -> f64,
{
    let mut recs: BTreeMap<(i64, i64), PointRec> = BTreeMap::new();
    let mut vertices = Vec::new();

    for (key, (pos, interior, slots)) in points {
        if slots.is_empty() {
            continue; // isolated: dropped
        }
        let mut rec = PointRec {
            slot_ids: [UNASSIGNED; SLOT_COUNT],
        };
        let kind = if *interior {
            VertexKind::Interior
        } else {
            VertexKind::Boundary
        };
        if *interior || slots.len() == 1 {
            let id = vertices.len();
            vertices.push(Vertex {
                id,
                pos: pos.clone(),
                kind,
                alpha: if *interior { alpha(pos) } else { 0.0 },
            });
            for (s, _) in slots {
                rec.slot_ids[*s as usize] = id;
            }
        } else {
            // Re-entrant wall vertex: one disconnected Dirichlet copy per edge.
            for (s, _) in slots {
                let id = vertices.len();
                vertices.push(Vertex {
                    id,
                    pos: pos.clone(),
                    kind: VertexKind::Boundary,
                    alpha: 0.0,
                });
                rec.slot_ids[*s as usize] = id;
            }
        }
        recs.insert(*key, rec);
    }

    // Edges in deterministic key order; each undirected edge is emitted by
    // its lower-ordered endpoint. The `n` field (the x = 0 end) is the
    // lower-ordered endpoint, `j` the higher one.
    let mut edges = Vec::new();
    for (key, (_, _, slots)) in points {
        for (s, nkey) in slots {
            if nkey <= key {
                continue;
            }
            let n_id = recs[key].slot_ids[*s as usize];
            let other = &recs[nkey];
            let back = points[nkey]
                .2
                .iter()
                .find(|(_, k)| k == key)
                .map(|(bs, _)| *bs)
                .expect("kept edges must be symmetric");
            let j_id = other.slot_ids[back as usize];
            edges.push(Edge {
                j: j_id,
                n: n_id,
                length: spacing,
                potential: Potential::Zero,
            });
        }
    }

    MetricGraph {
        dimension,
        spacing: Some(spacing),
        vertices,
        edges,
        leads: Vec::new(),
    }
}

/// Square-family assembly from a cell predicate. Cell `(i, j)` spans lattice
/// points `(i..=i+1, j..=j+1)`; out-of-range cells are absent.
fn assemble_square_family<C, F>(
    origin: [f64; 2],
    nx: i64,
    ny: i64,
    spacing: f64,
    cell_present: C,
    alpha: F,
) -> MetricGraph
where
    C: Fn(i64, i64) -> bool,
    F: Fn(&[f64]) -> f64,
{
    let cell = |i: i64, j: i64| i >= 0 && j >= 0 && i < nx - 1 && j < ny - 1 && cell_present(i, j);
    // Slots: 0 = -x, 1 = +x, 2 = -y, 3 = +y.
    let mut points = BTreeMap::new();
    for j in 0..ny {
        for i in 0..nx {
            let mut slots: Vec<(u8, (i64, i64))> = Vec::new();
            // Horizontal edge (i-1,j)-(i,j): flanked by cells (i-1,j-1), (i-1,j).
            if cell(i - 1, j - 1) && cell(i - 1, j) {
                slots.push((0, (j, i - 1)));
            }
            if cell(i, j - 1) && cell(i, j) {
                slots.push((1, (j, i + 1)));
            }
            // Vertical edge (i,j-1)-(i,j): flanked by cells (i-1,j-1), (i,j-1).
            if cell(i - 1, j - 1) && cell(i, j - 1) {
                slots.push((2, (j - 1, i)));
            }
            if cell(i - 1, j) && cell(i, j) {
                slots.push((3, (j + 1, i)));
            }
            let interior =
                cell(i - 1, j - 1) && cell(i, j - 1) && cell(i - 1, j) && cell(i, j);
            let pos = vec![
                origin[0] + i as f64 * spacing,
                origin[1] + j as f64 * spacing,
            ];
            points.insert((j, i), (pos, interior, slots));
        }
    }
    assemble(2, spacing, &points, alpha)
}

/// Builds an `n_cols × n_rows` square Dirichlet lattice with vertex positions
/// `(i·ℓ, j·ℓ)`, `i < n_cols`, `j < n_rows`. Interior vertices have degree 4;
/// perimeter vertices are Dirichlet wall vertices with a single edge; the
/// four corners disappear entirely.
pub fn build_square_lattice<F>(
    n_rows: usize,
    n_cols: usize,
    spacing: f64,
    alpha: F,
) -> Result<MetricGraph>
where
    F: Fn(&[f64]) -> f64,
{
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidInput(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    if n_rows < 2 || n_cols < 2 {
        return Err(Error::InvalidInput(format!(
            "degenerate extent {n_rows}×{n_cols}; need at least 2 vertices per side"
        )));
    }
    Ok(assemble_square_family(
        [0.0, 0.0],
        n_cols as i64,
        n_rows as i64,
        spacing,
        |_, _| true,
        alpha,
    ))
}

/// Builds the square-lattice restriction to the domain described by
/// `indicator` inside `bbox = [(x0, x1), (y0, y1)]`.
///
/// `indicator` is evaluated at cell centers *and* cell corners and should
/// test membership in the closed domain; a cell belongs to the domain only
/// when its center and all four corners pass. Edges on the boundary of the
/// resulting cell union are deleted and re-entrant corner vertices are split
/// into per-edge Dirichlet copies.
pub fn build_domain_lattice<I, F>(
    indicator: I,
    bbox: [(f64, f64); 2],
    spacing: f64,
    alpha: F,
) -> Result<DomainBuild>
where
    I: Fn(&[f64]) -> bool,
    F: Fn(&[f64]) -> f64,
{
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidInput(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let (x0, x1) = bbox[0];
    let (y0, y1) = bbox[1];
    if !(x1 > x0 && y1 > y0) {
        return Err(Error::InvalidInput("degenerate bounding box".into()));
    }
    let nx = ((x1 - x0) / spacing * (1.0 + 1e-12)).floor() as i64 + 1;
    let ny = ((y1 - y0) / spacing * (1.0 + 1e-12)).floor() as i64 + 1;
    if nx < 2 || ny < 2 {
        return Err(Error::InvalidInput(
            "bounding box holds fewer than 2 lattice points per side".into(),
        ));
    }
    let pt = |i: i64, j: i64| [x0 + i as f64 * spacing, y0 + j as f64 * spacing];
    let graph = assemble_square_family(
        [x0, y0],
        nx,
        ny,
        spacing,
        |i, j| {
            let c = [
                x0 + (i as f64 + 0.5) * spacing,
                y0 + (j as f64 + 0.5) * spacing,
            ];
            indicator(&c)
                && indicator(&pt(i, j))
                && indicator(&pt(i + 1, j))
                && indicator(&pt(i, j + 1))
                && indicator(&pt(i + 1, j + 1))
        },
        alpha,
    );
    if !graph.vertices.iter().any(|v| v.kind == VertexKind::Interior) {
        return Err(Error::InvalidInput(
            "domain has no interior vertex at this spacing".into(),
        ));
    }
    let (graph, dropped_components) = retain_largest_component(graph);
    Ok(DomainBuild {
        graph,
        dropped_components,
    })
}

/// Builds the Sinai graph: an `n × n` square lattice of spacing `ℓ` with
/// every vertex strictly inside the disc removed. Edges with a removed
/// endpoint are deleted and surviving endpoints of deleted edges become
/// Dirichlet wall vertices.
///
/// Unlike [`build_domain_lattice`] this keeps staircase edges joining two
/// exposed wall vertices (both endpoints survive the disc), so wall vertices
/// near the disc may carry more than one edge. Such edges are spectrally
/// inert — a Dirichlet condition holds at both ends — and are retained to
/// mirror the obstacle's staircase outline in exports.
pub fn build_sinai_graph(
    n: usize,
    spacing: f64,
    disc_center: [f64; 2],
    disc_radius: f64,
) -> Result<MetricGraph> {
    let base = build_square_lattice(n, n, spacing, |_| 0.0)?;
    let side = (n - 1) as f64 * spacing;
    if !(disc_radius.is_finite() && disc_radius > 0.0) {
        return Err(Error::InvalidInput(format!(
            "disc radius must be positive, got {disc_radius}"
        )));
    }
    for axis in 0..2 {
        if disc_center[axis] - disc_radius <= 0.0 || disc_center[axis] + disc_radius >= side {
            return Err(Error::InvalidInput(format!(
                "disc (center {:?}, radius {}) is not strictly inside the {}×{} square",
                disc_center, disc_radius, side, side
            )));
        }
    }

    let inside = |pos: &[f64]| -> bool {
        let dx = pos[0] - disc_center[0];
        let dy = pos[1] - disc_center[1];
        dx * dx + dy * dy < disc_radius * disc_radius
    };

    let removed: Vec<bool> = base.vertices.iter().map(|v| inside(&v.pos)).collect();
    let mut vertices = base.vertices.clone();
    let mut edges = Vec::new();
    let mut exposed = vec![false; vertices.len()];
    for e in &base.edges {
        if removed[e.j] || removed[e.n] {
            if !removed[e.j] {
                exposed[e.j] = true;
            }
            if !removed[e.n] {
                exposed[e.n] = true;
            }
        } else {
            edges.push(e.clone());
        }
    }
    for v in &mut vertices {
        if exposed[v.id] {
            v.kind = VertexKind::Boundary;
            v.alpha = 0.0;
        }
    }

    let mut degree = vec![0usize; vertices.len()];
    for e in &edges {
        degree[e.j] += 1;
        degree[e.n] += 1;
    }
    let keep: Vec<bool> = vertices
        .iter()
        .map(|v| !removed[v.id] && degree[v.id] > 0)
        .collect();
    let graph = MetricGraph {
        dimension: 2,
        spacing: Some(spacing),
        vertices,
        edges,
        leads: Vec::new(),
    };
    Ok(retain_vertices(&graph, &keep))
}

/// Builds the equilateral-triangle lattice clipped to the box
/// `[0, extent.0] × [0, extent.1]`, spacing `ℓ`, lattice vectors
/// `(ℓ, 0)` and `(ℓ/2, ℓ√3/2)`. Interior vertices have degree 6.
pub fn build_triangular_lattice<F>(
    extent: (f64, f64),
    spacing: f64,
    alpha: F,
) -> Result<MetricGraph>
where
    F: Fn(&[f64]) -> f64,
{
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidInput(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    let (w, h) = extent;
    if !(w > 0.0 && h > 0.0) {
        return Err(Error::InvalidInput("degenerate extent".into()));
    }
    let row_h = spacing * 3f64.sqrt() / 2.0;
    let tol = 1e-9 * spacing;
    let jmax = ((h + tol) / row_h).floor() as i64;
    let pos_of = |i: i64, j: i64| {
        vec![
            (i as f64 + j as f64 / 2.0) * spacing,
            j as f64 * row_h,
        ]
    };
    let in_box = |i: i64, j: i64| {
        let p = pos_of(i, j);
        j >= 0 && j <= jmax && p[0] >= -tol && p[0] <= w + tol
    };
    // Up-triangle U(i,j) = {(i,j), (i+1,j), (i,j+1)};
    // down-triangle D(i,j) = {(i+1,j), (i,j+1), (i+1,j+1)}.
    let up = |i: i64, j: i64| in_box(i, j) && in_box(i + 1, j) && in_box(i, j + 1);
    let down = |i: i64, j: i64| in_box(i + 1, j) && in_box(i, j + 1) && in_box(i + 1, j + 1);

    // Slots: 0 = -a1, 1 = +a1, 2 = -a2, 3 = +a2, 4 = +a2-a1, 5 = a1-a2.
    let mut points = BTreeMap::new();
    for j in 0..=jmax {
        let i_lo = (-(j as f64) / 2.0 - tol / spacing).ceil() as i64;
        let i_hi = ((w + tol) / spacing - j as f64 / 2.0).floor() as i64;
        for i in i_lo..=i_hi {
            if !in_box(i, j) {
                continue;
            }
            let mut slots: Vec<(u8, (i64, i64))> = Vec::new();
            // Edge (i-1,j)-(i,j): flanks U(i-1,j), D(i-1,j-1).
            if up(i - 1, j) && down(i - 1, j - 1) {
                slots.push((0, (j, i - 1)));
            }
            if up(i, j) && down(i, j - 1) {
                slots.push((1, (j, i + 1)));
            }
            // Edge (i,j-1)-(i,j) along +a2: flanks U(i,j-1), D(i-1,j-1).
            if up(i, j - 1) && down(i - 1, j - 1) {
                slots.push((2, (j - 1, i)));
            }
            if up(i, j) && down(i - 1, j) {
                slots.push((3, (j + 1, i)));
            }
            // Edge (i,j)-(i-1,j+1) along a2-a1: flanks U(i-1,j), D(i-1,j).
            if up(i - 1, j) && down(i - 1, j) {
                slots.push((4, (j + 1, i - 1)));
            }
            if up(i, j - 1) && down(i, j - 1) {
                slots.push((5, (j - 1, i + 1)));
            }
            let interior = up(i, j)
                && up(i - 1, j)
                && up(i, j - 1)
                && down(i - 1, j - 1)
                && down(i - 1, j)
                && down(i, j - 1);
            points.insert((j, i), (pos_of(i, j), interior, slots));
        }
    }
    let graph = assemble(2, spacing, &points, alpha);
    if !graph.vertices.iter().any(|v| v.kind == VertexKind::Interior) {
        return Err(Error::InvalidInput(
            "triangular patch has no interior vertex at this spacing".into(),
        ));
    }
    Ok(retain_largest_component(graph).0)
}

/// Builds a 1D chain of `n` vertices at positions `i·ℓ` with Dirichlet ends.
pub fn build_chain<F>(n: usize, spacing: f64, alpha: F) -> Result<MetricGraph>
where
    F: Fn(&[f64]) -> f64,
{
    if !(spacing.is_finite() && spacing > 0.0) {
        return Err(Error::InvalidInput(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    if n < 3 {
        return Err(Error::InvalidInput(
            "a chain needs at least 3 vertices for one interior vertex".into(),
        ));
    }
    let vertices = (0..n)
        .map(|i| {
            let pos = vec![i as f64 * spacing];
            let interior = i > 0 && i < n - 1;
            Vertex {
                id: i,
                alpha: if interior { alpha(&pos) } else { 0.0 },
                pos,
                kind: if interior {
                    VertexKind::Interior
                } else {
                    VertexKind::Boundary
                },
            }
        })
        .collect();
    let edges = (0..n - 1)
        .map(|i| Edge {
            j: i + 1,
            n: i,
            length: spacing,
            potential: Potential::Zero,
        })
        .collect();
    Ok(MetricGraph {
        dimension: 1,
        spacing: Some(spacing),
        vertices,
        edges,
        leads: Vec::new(),
    })
}

/// Attaches a semi-infinite lead at the vertex with the given lattice
/// coordinates (position `spacing * coords`). The target must be an interior
/// vertex without an existing lead.
pub fn attach_lead(
    graph: &MetricGraph,
    coords: &[i64],
    direction: LeadDirection,
) -> Result<MetricGraph> {
    let v = graph.vertex_at_lattice(coords).ok_or_else(|| {
        Error::InvalidInput(format!("no vertex at lattice coordinates {coords:?}"))
    })?;
    attach_lead_at_vertex(graph, v, direction)
}

/// Attaches a lead directly by vertex id. See [`attach_lead`].
pub fn attach_lead_at_vertex(
    graph: &MetricGraph,
    vertex: VertexId,
    direction: LeadDirection,
) -> Result<MetricGraph> {
    let Some(v) = graph.vertices.get(vertex) else {
        return Err(Error::InvalidInput(format!("no vertex with id {vertex}")));
    };
    if v.kind == VertexKind::Boundary {
        return Err(Error::InvalidInput(format!(
            "vertex {vertex} is a Dirichlet wall vertex; leads attach to interior vertices"
        )));
    }
    if graph.leads.iter().any(|l| l.vertex == vertex) {
        return Err(Error::InvalidInput(format!(
            "vertex {vertex} already carries a lead"
        )));
    }
    let mut out = graph.clone();
    out.vertices[vertex].kind = VertexKind::LeadPort;
    out.leads.push(Lead { vertex, direction });
    Ok(out)
}

/// Removes the lead at `vertex`, restoring it to a plain interior vertex.
/// Inverse of [`attach_lead_at_vertex`].
pub fn detach_lead(graph: &MetricGraph, vertex: VertexId) -> Result<MetricGraph> {
    if !graph.leads.iter().any(|l| l.vertex == vertex) {
        return Err(Error::InvalidInput(format!(
            "vertex {vertex} carries no lead"
        )));
    }
    let mut out = graph.clone();
    out.leads.retain(|l| l.vertex != vertex);
    out.vertices[vertex].kind = VertexKind::Interior;
    Ok(out)
}

/// Keeps the flagged vertices, renumbering ids compactly in the original
/// order. Edges and leads touching dropped vertices are discarded.
pub(crate) fn retain_vertices(graph: &MetricGraph, keep: &[bool]) -> MetricGraph {
    let mut remap = vec![usize::MAX; graph.vertices.len()];
    let mut vertices = Vec::new();
    for v in &graph.vertices {
        if keep[v.id] {
            remap[v.id] = vertices.len();
            let mut nv = v.clone();
            nv.id = vertices.len();
            vertices.push(nv);
        }
    }
    let edges = graph
        .edges
        .iter()
        .filter(|e| keep[e.j] && keep[e.n])
        .map(|e| Edge {
            j: remap[e.j],
            n: remap[e.n],
            length: e.length,
            potential: e.potential.clone(),
        })
        .collect();
    let leads = graph
        .leads
        .iter()
        .filter(|l| keep[l.vertex])
        .map(|l| Lead {
            vertex: remap[l.vertex],
            direction: l.direction,
        })
        .collect();
    MetricGraph {
        dimension: graph.dimension,
        spacing: graph.spacing,
        vertices,
        edges,
        leads,
    }
}

/// Keeps only the connected component with the most interior vertices
/// (ties broken toward the component containing the smallest id).
/// Returns the reduced graph and the number of dropped components.
fn retain_largest_component(graph: MetricGraph) -> (MetricGraph, usize) {
    let n = graph.vertices.len();
    if n == 0 {
        return (graph, 0);
    }
    let inc = graph.incidence();
    let mut comp = vec![usize::MAX; n];
    let mut n_comps = 0;
    for start in 0..n {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = n_comps;
        while let Some(v) = stack.pop() {
            for &(_, w) in &inc.by_vertex[v] {
                if comp[w] == usize::MAX {
                    comp[w] = n_comps;
                    stack.push(w);
                }
            }
        }
        n_comps += 1;
    }
    if n_comps <= 1 {
        return (graph, 0);
    }
    let mut interior_count = vec![0usize; n_comps];
    for v in &graph.vertices {
        if v.kind != VertexKind::Boundary {
            interior_count[comp[v.id]] += 1;
        }
    }
    let best = (0..n_comps)
        .max_by_key(|&c| (interior_count[c], std::cmp::Reverse(c)))
        .unwrap();
    let keep: Vec<bool> = (0..n).map(|v| comp[v] == best).collect();
    (retain_vertices(&graph, &keep), n_comps - 1)
}
