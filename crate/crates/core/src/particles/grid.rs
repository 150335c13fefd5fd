//! Uniform hash grid for radius queries over points.

use std::collections::HashMap;

use crate::geometry::Point;

type Cell = (i64, i64, i64);

#[derive(Debug, Clone)]
pub struct PointGrid {
    cell: f64,
    cells: HashMap<Cell, Vec<(Point, u32)>>,
}

impl PointGrid {
    pub fn new(cell: f64) -> Self {
        PointGrid {
            cell,
            cells: HashMap::new(),
        }
    }

    fn key(&self, p: &Point) -> Cell {
        let f = |x: f64| (x / self.cell).floor() as i64;
        (f(p.x), f(p.y), f(p.z))
    }

    pub fn insert(&mut self, p: &Point, id: u32) {
        let k = self.key(p);
        self.cells.entry(k).or_default().push((*p, id));
    }

    fn visit(&self, p: &Point, radius: f64, mut f: impl FnMut(&Point, u32) -> bool) {
        let reach = (radius / self.cell).ceil() as i64;
        let (cx, cy, cz) = self.key(p);
        for x in cx - reach..=cx + reach {
            for y in cy - reach..=cy + reach {
                for z in cz - reach..=cz + reach {
                    if let Some(items) = self.cells.get(&(x, y, z)) {
                        for (q, id) in items {
                            if !f(q, *id) {
                                return;
                            }
                        }
                    }
                }
            }
        }
    }

    /// Ids of points at distance at most `radius`, in no particular order.
    pub fn within(&self, p: &Point, radius: f64) -> Vec<u32> {
        let mut out = Vec::new();
        self.visit(p, radius, |q, id| {
            if (q - p).norm() <= radius {
                out.push(id);
            }
            true
        });
        out
    }

    /// Is any point strictly closer than `radius`?
    pub fn any_closer(&self, p: &Point, radius: f64) -> bool {
        let mut hit = false;
        self.visit(p, radius, |q, _| {
            hit = (q - p).norm() < radius;
            !hit
        });
        hit
    }
}
