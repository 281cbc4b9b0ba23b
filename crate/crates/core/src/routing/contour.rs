//! Boundary extraction for a binary occupancy grid.
//!
//! Boundaries follow cell edges, so every vertex is a cell corner. Each
//! occupied cell side that faces an empty cell becomes a directed unit edge
//! with the occupied cell on its left; linking those edges yields
//! counter-clockwise outer rings and clockwise hole rings. Where two occupied
//! cells touch only at a corner the tracer turns left, which keeps them in
//! separate rings.

/// Dense occupancy grid; cell `(c, r)` spans corners `(c, r)`..`(c + 1, r + 1)`.
#[derive(Debug, Clone)]
pub(crate) struct Bitmap {
    width: usize,
    height: usize,
    cells: Vec<bool>,
}

impl Bitmap {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            cells: vec![false; width * height],
        }
    }

    pub fn set(&mut self, c: usize, r: usize) {
        self.cells[r * self.width + c] = true;
    }

    pub fn get(&self, c: i64, r: i64) -> bool {
        c >= 0
            && r >= 0
            && (c as usize) < self.width
            && (r as usize) < self.height
            && self.cells[r as usize * self.width + c as usize]
    }

    /// Chebyshev dilation by `radius` cells (8-neighbourhood applied `radius` times).
    pub fn dilate(&self, radius: usize) -> Bitmap {
        if radius == 0 {
            return self.clone();
        }
        let r = radius as i64;
        let mut horiz = Bitmap::new(self.width, self.height);
        for row in 0..self.height as i64 {
            for col in 0..self.width as i64 {
                if (col - r..=col + r).any(|c| self.get(c, row)) {
                    horiz.set(col as usize, row as usize);
                }
            }
        }
        let mut out = Bitmap::new(self.width, self.height);
        for row in 0..self.height as i64 {
            for col in 0..self.width as i64 {
                if (row - r..=row + r).any(|rr| horiz.get(col, rr)) {
                    out.set(col as usize, row as usize);
                }
            }
        }
        out
    }

    pub fn occupied(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.cells
            .iter()
            .enumerate()
            .filter(|(_, &v)| v)
            .map(|(i, _)| (i % self.width, i / self.width))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dir {
    East = 0,
    North = 1,
    West = 2,
    South = 3,
}

impl Dir {
    const ALL: [Dir; 4] = [Dir::East, Dir::North, Dir::West, Dir::South];

    fn bit(self) -> u8 {
        1 << self as u8
    }

    fn step(self) -> (i64, i64) {
        match self {
            Dir::East => (1, 0),
            Dir::North => (0, 1),
            Dir::West => (-1, 0),
            Dir::South => (0, -1),
        }
    }

    fn left(self) -> Dir {
        Dir::ALL[(self as usize + 1) % 4]
    }

    fn right(self) -> Dir {
        Dir::ALL[(self as usize + 3) % 4]
    }
}

/// A closed ring of corner coordinates; first vertex repeated at the end.
pub(crate) type CornerRing = Vec<(i64, i64)>;

/// Outer ring plus the holes it encloses, in corner coordinates.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct CornerPolygon {
    pub exterior: CornerRing,
    pub holes: Vec<CornerRing>,
}

fn twice_signed_area(ring: &CornerRing) -> i64 {
    ring.windows(2)
        .map(|w| w[0].0 * w[1].1 - w[1].0 * w[0].1)
        .sum()
}

/// Even-odd test for a point at half-integer coordinates (never on an edge).
fn contains_half_point(ring: &CornerRing, (px2, py2): (i64, i64)) -> bool {
    // coordinates doubled to stay in integers
    let mut inside = false;
    for w in ring.windows(2) {
        let (ax, ay) = (w[0].0 * 2, w[0].1 * 2);
        let (bx, by) = (w[1].0 * 2, w[1].1 * 2);
        if (ay > py2) != (by > py2) {
            // only vertical edges can straddle a half-integer y
            if ax > px2 {
                inside = !inside;
            }
            debug_assert_eq!(ax, bx);
        }
    }
    inside
}

pub(crate) fn trace(grid: &Bitmap) -> Vec<CornerPolygon> {
    let vw = grid.width + 1;
    let vh = grid.height + 1;
    let mut out = vec![0u8; vw * vh];
    let vid = |x: i64, y: i64| y as usize * vw + x as usize;

    for (c, r) in grid.occupied() {
        let (c, r) = (c as i64, r as i64);
        if !grid.get(c, r - 1) {
            out[vid(c, r)] |= Dir::East.bit();
        }
        if !grid.get(c + 1, r) {
            out[vid(c + 1, r)] |= Dir::North.bit();
        }
        if !grid.get(c, r + 1) {
            out[vid(c + 1, r + 1)] |= Dir::West.bit();
        }
        if !grid.get(c - 1, r) {
            out[vid(c, r + 1)] |= Dir::South.bit();
        }
    }

    let mut outers: Vec<CornerRing> = Vec::new();
    let mut holes: Vec<CornerRing> = Vec::new();
    for start in 0..out.len() {
        while out[start] != 0 {
            let (sx, sy) = ((start % vw) as i64, (start / vw) as i64);
            let start_dir = Dir::ALL.into_iter().find(|d| out[start] & d.bit() != 0).unwrap();
            out[start] &= !start_dir.bit();

            let mut ring = Vec::new();
            let (mut x, mut y, mut dir) = (sx, sy, start_dir);
            loop {
                ring.push(((x, y), dir));
                let (dx, dy) = dir.step();
                x += dx;
                y += dy;
                let v = vid(x, y);
                let available = |d: Dir| out[v] & d.bit() != 0 || (v == start && d == start_dir);
                let next = [dir.left(), dir, dir.right()]
                    .into_iter()
                    .find(|&d| available(d))
                    .expect("boundary edges always link into closed rings");
                if v == start && next == start_dir {
                    break;
                }
                out[v] &= !next.bit();
                dir = next;
            }

            // keep only corners where the direction changes
            let n = ring.len();
            let mut corners: CornerRing = (0..n)
                .filter(|&i| ring[i].1 != ring[(i + n - 1) % n].1)
                .map(|i| ring[i].0)
                .collect();
            corners.push(corners[0]);
            if twice_signed_area(&corners) > 0 {
                outers.push(corners);
            } else {
                holes.push(corners);
            }
        }
    }

    let mut polygons: Vec<CornerPolygon> = outers
        .into_iter()
        .map(|exterior| CornerPolygon {
            exterior,
            holes: Vec::new(),
        })
        .collect();
    for hole in holes {
        // an empty cell just to the right of the hole's first edge
        let (a, b) = (hole[0], hole[1]);
        let (dx, dy) = ((b.0 - a.0).signum(), (b.1 - a.1).signum());
        let probe = (2 * a.0 + dx + dy, 2 * a.1 + dy - dx);
        let owner = polygons
            .iter()
            .enumerate()
            .filter(|(_, p)| contains_half_point(&p.exterior, probe))
            .min_by_key(|(i, p)| (twice_signed_area(&p.exterior), *i))
            .map(|(i, _)| i)
            .expect("every hole lies inside some outer ring");
        polygons[owner].holes.push(hole);
    }
    polygons
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bitmap(rows: &[&str]) -> Bitmap {
        // first string is the top row
        let h = rows.len();
        let w = rows[0].len();
        let mut b = Bitmap::new(w, h);
        for (i, row) in rows.iter().enumerate() {
            for (c, ch) in row.chars().enumerate() {
                if ch == '#' {
                    b.set(c, h - 1 - i);
                }
            }
        }
        b
    }

    #[test]
    fn single_cell_is_one_square() {
        let polys = trace(&bitmap(&["...", ".#.", "..."]));
        assert_eq!(polys.len(), 1);
        assert_eq!(polys[0].exterior, vec![(1, 1), (2, 1), (2, 2), (1, 2), (1, 1)]);
        assert!(polys[0].holes.is_empty());
    }

    #[test]
    fn rectangle_merges_collinear_edges() {
        let polys = trace(&bitmap(&["....", ".##.", ".##.", "...."]));
        assert_eq!(polys.len(), 1);
        assert_eq!(polys[0].exterior.len(), 5);
        assert_eq!(twice_signed_area(&polys[0].exterior), 8);
    }

    #[test]
    fn ring_with_hole() {
        let polys = trace(&bitmap(&[".....", ".###.", ".#.#.", ".###.", "....."]));
        assert_eq!(polys.len(), 1);
        assert_eq!(polys[0].holes.len(), 1);
        assert_eq!(twice_signed_area(&polys[0].holes[0]), -2);
    }

    #[test]
    fn diagonal_cells_stay_separate() {
        let polys = trace(&bitmap(&["....", "..#.", ".#..", "...."]));
        assert_eq!(polys.len(), 2);
        for p in &polys {
            assert_eq!(twice_signed_area(&p.exterior), 2);
        }
    }

    #[test]
    fn nested_island_inside_hole() {
        let polys = trace(&bitmap(&[
            ".......", ".#####.", ".#...#.", ".#.#.#.", ".#...#.", ".#####.", ".......",
        ]));
        assert_eq!(polys.len(), 2);
        let with_hole: Vec<_> = polys.iter().filter(|p| !p.holes.is_empty()).collect();
        assert_eq!(with_hole.len(), 1);
        assert_eq!(twice_signed_area(&with_hole[0].exterior), 50);
    }

    #[test]
    fn all_corners_pinched() {
        // centre cell touches four diagonal neighbours only at corners
        let polys = trace(&bitmap(&[".....", ".#.#.", "..#..", ".#.#.", "....."]));
        assert_eq!(polys.len(), 5);
        assert!(polys.iter().all(|p| p.exterior.len() == 5));
    }

    #[test]
    fn dilation_grows_by_chebyshev_radius() {
        let b = bitmap(&[".....", ".....", "..#..", ".....", "....."]);
        assert_eq!(b.dilate(1).occupied().count(), 9);
        assert_eq!(b.dilate(2).occupied().count(), 25);
        assert_eq!(b.dilate(0).occupied().count(), 1);
    }
}
