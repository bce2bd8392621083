//! Cartesian domain `[0, L]²` split into a uniform grid of box subdomains.
//!
//! Every subdomain carries its own `cells_x × cells_y` grid of square cells.
//! Interfaces are stored once, oriented from the lower-index subdomain to the
//! higher one; each side sees the interface through an [`EdgeKind::Interface`]
//! entry carrying the orientation sign.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Relative tolerance used when comparing the cell widths in x and y.
const SQUARE_CELL_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Edge {
    West,
    East,
    South,
    North,
}

impl Edge {
    pub const ALL: [Edge; 4] = [Edge::West, Edge::East, Edge::South, Edge::North];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn opposite(self) -> Edge {
        match self {
            Edge::West => Edge::East,
            Edge::East => Edge::West,
            Edge::South => Edge::North,
            Edge::North => Edge::South,
        }
    }

    /// West and east edges are vertical segments.
    pub fn is_vertical(self) -> bool {
        matches!(self, Edge::West | Edge::East)
    }
}

/// Fixed-size map from the four box edges to values.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct EdgeMap<T>(pub [T; 4]);

impl<T> EdgeMap<T> {
    pub fn from_fn(mut f: impl FnMut(Edge) -> T) -> Self {
        EdgeMap(Edge::ALL.map(&mut f))
    }

    pub fn iter(&self) -> impl Iterator<Item = (Edge, &T)> {
        Edge::ALL.into_iter().zip(self.0.iter())
    }

    pub fn map<U>(&self, mut f: impl FnMut(Edge, &T) -> U) -> EdgeMap<U> {
        EdgeMap::from_fn(|e| f(e, &self.0[e.index()]))
    }
}

impl<T> Index<Edge> for EdgeMap<T> {
    type Output = T;
    fn index(&self, edge: Edge) -> &T {
        &self.0[edge.index()]
    }
}

impl<T> IndexMut<Edge> for EdgeMap<T> {
    fn index_mut(&mut self, edge: Edge) -> &mut T {
        &mut self.0[edge.index()]
    }
}

/// Size of the domain and of its decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct DecompositionSpec {
    pub domain_side: f64,
    pub subdomains_x: usize,
    pub subdomains_y: usize,
    pub cells_x: usize,
    pub cells_y: usize,
}

impl DecompositionSpec {
    /// `layout × layout` subdomains of `cells × cells` cells on `[0, 4]²`.
    pub fn square(layout: usize, cells: usize) -> Self {
        DecompositionSpec {
            domain_side: 4.0,
            subdomains_x: layout,
            subdomains_y: layout,
            cells_x: cells,
            cells_y: cells,
        }
    }

    pub fn with_side(mut self, side: f64) -> Self {
        self.domain_side = side;
        self
    }

    /// Cell width. Fails unless the cells are square.
    pub fn h(&self) -> Result<f64> {
        let counts = [
            ("subdomains_x", self.subdomains_x),
            ("subdomains_y", self.subdomains_y),
            ("cells_x", self.cells_x),
            ("cells_y", self.cells_y),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, n)| *n == 0) {
            return Err(Error::Decomposition(format!("{name} must be at least 1")));
        }
        if !(self.domain_side.is_finite() && self.domain_side > 0.0) {
            return Err(Error::Decomposition(format!(
                "domain side must be positive, got {}",
                self.domain_side
            )));
        }
        let hx = self.domain_side / (self.subdomains_x * self.cells_x) as f64;
        let hy = self.domain_side / (self.subdomains_y * self.cells_y) as f64;
        if (hx - hy).abs() > SQUARE_CELL_TOL * hx.max(hy) {
            return Err(Error::Decomposition(format!(
                "cells must be square, got h_x = {hx} and h_y = {hy}"
            )));
        }
        Ok(hx)
    }

    pub fn global_cells_x(&self) -> usize {
        self.subdomains_x * self.cells_x
    }

    pub fn global_cells_y(&self) -> usize {
        self.subdomains_y * self.cells_y
    }

    pub fn total_cells(&self) -> usize {
        self.global_cells_x() * self.global_cells_y()
    }

    pub fn subdomain_count(&self) -> usize {
        self.subdomains_x * self.subdomains_y
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubdomainId {
    pub ix: usize,
    pub iy: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EdgeKind {
    /// Part of `∂Ω`, homogeneous Dirichlet.
    Exterior,
    Interface {
        neighbor: usize,
        interface: usize,
        /// `+1` when the canonical interface normal is this side's outward
        /// normal (this side has the lower index), `-1` otherwise.
        sign: i8,
    },
}

impl EdgeKind {
    pub fn is_interface(&self) -> bool {
        matches!(self, EdgeKind::Interface { .. })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FaceCenter {
    pub x: f64,
    pub y: f64,
    /// Arclength from the start of the edge (lowest x or y coordinate).
    pub s: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubdomainTopology {
    pub id: SubdomainId,
    pub index: usize,
    /// Lower-left corner.
    pub origin: (f64, f64),
    pub cells_x: usize,
    pub cells_y: usize,
    pub h: f64,
    pub edges: EdgeMap<EdgeKind>,
}

impl SubdomainTopology {
    /// Number of faces along `edge`.
    pub fn face_count(&self, edge: Edge) -> usize {
        if edge.is_vertical() {
            self.cells_y
        } else {
            self.cells_x
        }
    }

    pub fn edge_length(&self, edge: Edge) -> f64 {
        self.face_count(edge) as f64 * self.h
    }

    pub fn cell_count(&self) -> usize {
        self.cells_x * self.cells_y
    }

    /// Neighbors `N(i)`, in edge order.
    pub fn neighbors(&self) -> impl Iterator<Item = usize> + '_ {
        self.edges.iter().filter_map(|(_, k)| match k {
            EdgeKind::Interface { neighbor, .. } => Some(*neighbor),
            EdgeKind::Exterior => None,
        })
    }

    pub fn interface_edges(&self) -> impl Iterator<Item = Edge> + '_ {
        self.edges
            .iter()
            .filter(|(_, k)| k.is_interface())
            .map(|(e, _)| e)
    }

    /// Cell adjacent to face `k` of `edge`, as `(column, row)`.
    pub fn boundary_cell(&self, edge: Edge, k: usize) -> (usize, usize) {
        match edge {
            Edge::West => (0, k),
            Edge::East => (self.cells_x - 1, k),
            Edge::South => (k, 0),
            Edge::North => (k, self.cells_y - 1),
        }
    }
}

/// Face centers along `edge`, ascending in `s`. Both sides of an interface
/// produce the same sequence, so paired faces share an index.
pub fn face_centers(topology: &SubdomainTopology, edge: Edge) -> Vec<FaceCenter> {
    let h = topology.h;
    let (x0, y0) = topology.origin;
    let lx = topology.cells_x as f64 * h;
    let ly = topology.cells_y as f64 * h;
    (0..topology.face_count(edge))
        .map(|k| {
            let s = (k as f64 + 0.5) * h;
            let (x, y) = match edge {
                Edge::West => (x0, y0 + s),
                Edge::East => (x0 + lx, y0 + s),
                Edge::South => (x0 + s, y0),
                Edge::North => (x0 + s, y0 + ly),
            };
            FaceCenter { x, y, s }
        })
        .collect()
}

/// One interface, stored with its canonical orientation `lower → upper`.
#[derive(Clone, Debug, PartialEq)]
pub struct Interface {
    pub id: usize,
    pub lower: usize,
    pub upper: usize,
    /// Edge of `lower` lying on the interface (`East` or `North`).
    pub lower_edge: Edge,
    pub faces: usize,
}

impl Interface {
    pub fn upper_edge(&self) -> Edge {
        self.lower_edge.opposite()
    }

    /// The `(subdomain, edge)` view of a side: `0` is lower, `1` is upper.
    pub fn side(&self, side: usize) -> (usize, Edge) {
        if side == 0 {
            (self.lower, self.lower_edge)
        } else {
            (self.upper, self.upper_edge())
        }
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub spec: DecompositionSpec,
    pub h: f64,
    pub subdomains: Vec<SubdomainTopology>,
    pub interfaces: Vec<Interface>,
}

impl Decomposition {
    pub fn build(spec: &DecompositionSpec) -> Result<Self> {
        let h = spec.h()?;
        let (sx, sy) = (spec.subdomains_x, spec.subdomains_y);
        let index = |ix: usize, iy: usize| ix + iy * sx;

        let mut subdomains: Vec<SubdomainTopology> = (0..sy)
            .flat_map(|iy| (0..sx).map(move |ix| (ix, iy)))
            .map(|(ix, iy)| SubdomainTopology {
                id: SubdomainId { ix, iy },
                index: index(ix, iy),
                origin: (
                    (ix * spec.cells_x) as f64 * h,
                    (iy * spec.cells_y) as f64 * h,
                ),
                cells_x: spec.cells_x,
                cells_y: spec.cells_y,
                h,
                edges: EdgeMap([EdgeKind::Exterior; 4]),
            })
            .collect();

        let mut interfaces = Vec::new();
        for iy in 0..sy {
            for ix in 0..sx {
                let lower = index(ix, iy);
                let mut link = |upper: usize, lower_edge: Edge, faces: usize| {
                    let id = interfaces.len();
                    interfaces.push(Interface {
                        id,
                        lower,
                        upper,
                        lower_edge,
                        faces,
                    });
                    subdomains[lower].edges[lower_edge] = EdgeKind::Interface {
                        neighbor: upper,
                        interface: id,
                        sign: 1,
                    };
                    subdomains[upper].edges[lower_edge.opposite()] = EdgeKind::Interface {
                        neighbor: lower,
                        interface: id,
                        sign: -1,
                    };
                };
                if ix + 1 < sx {
                    link(index(ix + 1, iy), Edge::East, spec.cells_y);
                }
                if iy + 1 < sy {
                    link(index(ix, iy + 1), Edge::North, spec.cells_x);
                }
            }
        }

        Ok(Decomposition {
            spec: spec.clone(),
            h,
            subdomains,
            interfaces,
        })
    }

    pub fn subdomain_count(&self) -> usize {
        self.subdomains.len()
    }

    pub fn interface_faces(&self) -> usize {
        self.interfaces.iter().map(|i| i.faces).sum()
    }

    /// Follow interface `edge` of subdomain `i` to the neighbor's view:
    /// returns `(neighbor, neighbor_edge, interface, neighbor_sign)`.
    pub fn across(&self, i: usize, edge: Edge) -> Option<(usize, Edge, usize, i8)> {
        match self.subdomains[i].edges[edge] {
            EdgeKind::Exterior => None,
            EdgeKind::Interface {
                neighbor,
                interface,
                ..
            } => match self.subdomains[neighbor].edges[edge.opposite()] {
                EdgeKind::Interface { sign, .. } => {
                    Some((neighbor, edge.opposite(), interface, sign))
                }
                EdgeKind::Exterior => None,
            },
        }
    }

    /// Row layout of the ordered-pair jump vectors: interface `k` occupies two
    /// consecutive blocks, `(lower, upper)` then `(upper, lower)`.
    pub fn jump_blocks(&self) -> Vec<JumpBlock> {
        let mut offset = 0;
        let mut blocks = Vec::with_capacity(2 * self.interfaces.len());
        for iface in &self.interfaces {
            for side in 0..2 {
                let (this, this_edge) = iface.side(side);
                let (other, other_edge) = iface.side(1 - side);
                blocks.push(JumpBlock {
                    interface: iface.id,
                    this,
                    this_edge,
                    other,
                    other_edge,
                    offset,
                    len: iface.faces,
                });
                offset += iface.faces;
            }
        }
        blocks
    }

    pub fn jump_rows(&self) -> usize {
        2 * self.interface_faces()
    }
}

/// Rows of an ordered pair `(this, other)` in a jump vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpBlock {
    pub interface: usize,
    pub this: usize,
    pub this_edge: Edge,
    pub other: usize,
    pub other_edge: Edge,
    pub offset: usize,
    pub len: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interface_counts() {
        let d = Decomposition::build(&DecompositionSpec::square(2, 20)).unwrap();
        assert_eq!(d.interfaces.len(), 4);
        let vertical = d.interfaces.iter().filter(|i| i.lower_edge == Edge::East).count();
        assert_eq!(vertical, 2);

        let d = Decomposition::build(&DecompositionSpec::square(1, 5)).unwrap();
        assert!(d.interfaces.is_empty());
        assert!(d.subdomains[0].edges.iter().all(|(_, k)| *k == EdgeKind::Exterior));

        let d = Decomposition::build(&DecompositionSpec::square(4, 3)).unwrap();
        assert_eq!(d.interfaces.len(), 24);
    }

    #[test]
    fn interface_ids_are_dense_and_paired() {
        let spec = DecompositionSpec {
            domain_side: 3.0,
            subdomains_x: 3,
            subdomains_y: 2,
            cells_x: 4,
            cells_y: 8,
        };
        // h_x = 3/12, h_y = 3/16: not square
        assert!(Decomposition::build(&spec).is_err());

        let spec = DecompositionSpec {
            domain_side: 2.0,
            subdomains_x: 2,
            subdomains_y: 4,
            cells_x: 6,
            cells_y: 3,
        };
        let d = Decomposition::build(&spec).unwrap();
        let mut seen = vec![0; d.interfaces.len()];
        for sub in &d.subdomains {
            for edge in sub.interface_edges() {
                let (nb, nb_edge, id, nb_sign) = d.across(sub.index, edge).unwrap();
                seen[id] += 1;
                let EdgeKind::Interface { sign, interface, .. } = sub.edges[edge] else {
                    unreachable!()
                };
                assert_eq!(interface, id);
                assert_eq!(sign, -nb_sign);
                assert!(d.subdomains[nb].neighbors().any(|j| j == sub.index));
                let (back, back_edge, back_id, back_sign) = d.across(nb, nb_edge).unwrap();
                assert_eq!((back, back_edge, back_id, back_sign), (sub.index, edge, id, sign));
                assert_eq!(sub.face_count(edge), d.subdomains[nb].face_count(nb_edge));
            }
        }
        assert!(seen.iter().all(|&n| n == 2));

        let per_side: usize = d
            .subdomains
            .iter()
            .flat_map(|s| s.interface_edges().map(move |e| s.face_count(e)))
            .sum();
        assert_eq!(per_side, 2 * d.interface_faces());
        assert_eq!(d.jump_rows(), per_side);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(DecompositionSpec::square(0, 20).h().is_err());
        assert!(DecompositionSpec::square(2, 0).h().is_err());
        assert!(DecompositionSpec::square(2, 2).with_side(-1.0).h().is_err());
        let spec = DecompositionSpec::square(4, 20);
        assert_eq!(spec.total_cells(), 6400);
        assert!((spec.h().unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn face_centers_midpoints() {
        let d = Decomposition::build(&DecompositionSpec::square(1, 20)).unwrap();
        let sub = &d.subdomains[0];
        let fc = face_centers(sub, Edge::South);
        assert_eq!(fc.len(), 20);
        for (k, f) in fc.iter().enumerate() {
            let expected = 0.1 + 0.2 * k as f64;
            assert!((f.s - expected).abs() < 1e-12);
            assert!((f.x - expected).abs() < 1e-12);
            assert_eq!(f.y, 0.0);
        }
        assert!((fc[19].s - 3.9).abs() < 1e-12);

        let one = Decomposition::build(&DecompositionSpec::square(1, 1).with_side(0.5)).unwrap();
        let fc = face_centers(&one.subdomains[0], Edge::East);
        assert_eq!(fc.len(), 1);
        assert!((fc[0].s - 0.25).abs() < 1e-15);
        assert!((fc[0].x - 0.5).abs() < 1e-15);
    }

    #[test]
    fn mirrored_edges_align() {
        let d = Decomposition::build(&DecompositionSpec::square(3, 7)).unwrap();
        for iface in &d.interfaces {
            let a = face_centers(&d.subdomains[iface.lower], iface.lower_edge);
            let b = face_centers(&d.subdomains[iface.upper], iface.upper_edge());
            assert_eq!(a.len(), b.len());
            for (fa, fb) in a.iter().zip(&b) {
                assert!((fa.s - fb.s).abs() < 1e-12);
                assert!((fa.x - fb.x).abs() < 1e-12);
                assert!((fa.y - fb.y).abs() < 1e-12);
            }
        }
    }
}
