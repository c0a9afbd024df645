//! Uniform bucket grid over a toroidal world, used to narrow neighbor
//! queries down to the cells around a point.
//!
//! Boid indices are bucketed with a counting sort, so every cell holds its
//! members in ascending index order and the layout is a pure function of
//! the positions.

use crate::flock::Bounds;
use crate::vec2::Vec2;

/// Upper bound on cells per axis; tiny radii fall back to coarser cells.
const MAX_CELLS_PER_AXIS: usize = 1024;

#[derive(Debug, Clone)]
pub struct SpatialGrid {
    cols: usize,
    rows: usize,
    cell_w: f64,
    cell_h: f64,
    /// `cell_start[c]..cell_start[c + 1]` indexes into `entries` for cell `c`.
    cell_start: Vec<usize>,
    entries: Vec<usize>,
}

impl SpatialGrid {
    /// Buckets `positions` into cells at least `cell_size` wide.
    ///
    /// A non-positive `cell_size` produces a single cell covering the world.
    pub fn build(positions: &[Vec2], bounds: Bounds, cell_size: f64) -> Self {
        let axis = |extent: f64| -> usize {
            if cell_size > 0.0 && cell_size.is_finite() {
                ((extent / cell_size).floor() as usize).clamp(1, MAX_CELLS_PER_AXIS)
            } else {
                1
            }
        };
        let cols = axis(bounds.width);
        let rows = axis(bounds.height);
        let cell_w = bounds.width / cols as f64;
        let cell_h = bounds.height / rows as f64;

        let mut grid = Self {
            cols,
            rows,
            cell_w,
            cell_h,
            cell_start: vec![0; cols * rows + 1],
            entries: vec![0; positions.len()],
        };

        let cells: Vec<usize> = positions.iter().map(|&p| grid.cell_of(p)).collect();
        for &c in &cells {
            grid.cell_start[c + 1] += 1;
        }
        for c in 0..cols * rows {
            grid.cell_start[c + 1] += grid.cell_start[c];
        }
        let mut cursor = grid.cell_start.clone();
        for (i, &c) in cells.iter().enumerate() {
            grid.entries[cursor[c]] = i;
            cursor[c] += 1;
        }
        grid
    }

    pub fn dimensions(&self) -> (usize, usize) {
        (self.cols, self.rows)
    }

    fn cell_of(&self, p: Vec2) -> usize {
        let cx = ((p.x / self.cell_w) as usize).min(self.cols - 1);
        let cy = ((p.y / self.cell_h) as usize).min(self.rows - 1);
        cy * self.cols + cx
    }

    /// Calls `visit` with every index bucketed in a cell that may hold a
    /// point within `radius` of `center` (toroidally). Each index is
    /// reported at most once; callers still apply the exact distance test.
    pub fn for_each_candidate(&self, center: Vec2, radius: f64, mut visit: impl FnMut(usize)) {
        let cx = ((center.x / self.cell_w) as usize).min(self.cols - 1);
        let cy = ((center.y / self.cell_h) as usize).min(self.rows - 1);
        let (xs, x_all) = axis_span(cx, self.cols, radius, self.cell_w);
        let (ys, y_all) = axis_span(cy, self.rows, radius, self.cell_h);

        let x_cells = if x_all { 0..self.cols } else { 0..xs.len() };
        let y_cells = if y_all { 0..self.rows } else { 0..ys.len() };

        for yi in y_cells {
            let row = if y_all { yi } else { ys[yi] };
            for xi in x_cells.clone() {
                let col = if x_all { xi } else { xs[xi] };
                let c = row * self.cols + col;
                for &i in &self.entries[self.cell_start[c]..self.cell_start[c + 1]] {
                    visit(i);
                }
            }
        }
    }
}

/// Cells along one axis within `radius` of cell `center`, wrapping around.
/// The flag is set when the span covers the whole axis.
fn axis_span(center: usize, count: usize, radius: f64, cell: f64) -> (Vec<usize>, bool) {
    let reach = (radius / cell).ceil() as usize;
    if 2 * reach + 1 >= count {
        return (Vec::new(), true);
    }
    let span = (0..=2 * reach).map(|k| (center + count + k - reach) % count).collect();
    (span, false)
}
