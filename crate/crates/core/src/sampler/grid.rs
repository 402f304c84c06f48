//! Occupancy grids in the Moving-AI text format.
//!
//! Cell `(x, y)` is column `x` of row `y`, counting rows from the first map
//! line. A continuous point `(x, y)` lies in the cell whose center is nearest,
//! so cell centers sit on integer coordinates and each cell spans
//! `[x - 0.5, x + 0.5] × [y - 0.5, y + 0.5]`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MapError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("map has zero width or height")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
}

impl Cell {
    pub fn new(x: usize, y: usize) -> Self {
        Self { x, y }
    }

    pub fn center(self) -> [f64; 2] {
        [self.x as f64, self.y as f64]
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

const PASSABLE: &[u8] = b".GS";
const BLOCKED: &[u8] = b"@OTW";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridMap {
    width: usize,
    height: usize,
    kind: String,
    terrain: Vec<u8>,
}

impl GridMap {
    /// All-free map.
    pub fn new(width: usize, height: usize) -> Result<Self, MapError> {
        if width == 0 || height == 0 {
            return Err(MapError::Empty);
        }
        Ok(Self {
            width,
            height,
            kind: "octile".into(),
            terrain: vec![b'.'; width * height],
        })
    }

    /// Builds a map from character rows, top row first.
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self, MapError> {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        let mut map = Self::new(width, height)?;
        for (y, row) in rows.iter().enumerate() {
            map.fill_row(y, row.as_ref(), y + 1)?;
        }
        Ok(map)
    }

    fn fill_row(&mut self, y: usize, row: &str, line: usize) -> Result<(), MapError> {
        let bytes = row.as_bytes();
        if bytes.len() != self.width {
            return Err(MapError::Parse {
                line,
                msg: format!("row has {} cells, expected {}", bytes.len(), self.width),
            });
        }
        for (x, &c) in bytes.iter().enumerate() {
            if !PASSABLE.contains(&c) && !BLOCKED.contains(&c) {
                return Err(MapError::Parse {
                    line,
                    msg: format!("unknown terrain '{}'", c as char),
                });
            }
            self.terrain[y * self.width + x] = c;
        }
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn terrain(&self, c: Cell) -> u8 {
        self.terrain[c.y * self.width + c.x]
    }

    pub fn set_blocked(&mut self, c: Cell, blocked: bool) {
        self.terrain[c.y * self.width + c.x] = if blocked { b'@' } else { b'.' };
    }

    pub fn in_bounds(&self, x: i64, y: i64) -> bool {
        x >= 0 && y >= 0 && (x as usize) < self.width && (y as usize) < self.height
    }

    pub fn is_free(&self, c: Cell) -> bool {
        c.x < self.width && c.y < self.height && PASSABLE.contains(&self.terrain(c))
    }

    fn free_at(&self, x: i64, y: i64) -> bool {
        self.in_bounds(x, y) && self.is_free(Cell::new(x as usize, y as usize))
    }

    /// Cell containing a continuous point, if it lies on the map.
    pub fn cell_of(&self, p: [f64; 2]) -> Option<Cell> {
        let (x, y) = (p[0].round(), p[1].round());
        if !x.is_finite() || !y.is_finite() || !self.in_bounds(x as i64, y as i64) {
            return None;
        }
        Some(Cell::new(x as usize, y as usize))
    }

    /// 8-connected neighbours; a diagonal move needs both orthogonal cells free.
    pub fn neighbors(&self, c: Cell) -> impl Iterator<Item = (Cell, f64)> + '_ {
        const STEPS: [(i64, i64); 8] = [
            (1, 0),
            (-1, 0),
            (0, 1),
            (0, -1),
            (1, 1),
            (1, -1),
            (-1, 1),
            (-1, -1),
        ];
        let (x, y) = (c.x as i64, c.y as i64);
        STEPS.iter().filter_map(move |&(dx, dy)| {
            let (nx, ny) = (x + dx, y + dy);
            if !self.free_at(nx, ny) {
                return None;
            }
            if dx != 0 && dy != 0 {
                if !self.free_at(x + dx, y) || !self.free_at(x, y + dy) {
                    return None;
                }
                Some((
                    Cell::new(nx as usize, ny as usize),
                    std::f64::consts::SQRT_2,
                ))
            } else {
                Some((Cell::new(nx as usize, ny as usize), 1.0))
            }
        })
    }

    /// A* over the 8-connected grid with the octile heuristic.
    pub fn shortest_path(&self, start: Cell, goal: Cell) -> Option<(Vec<Cell>, f64)> {
        if !self.is_free(start) || !self.is_free(goal) {
            return None;
        }
        let idx = |c: Cell| c.y * self.width + c.x;
        let h = |c: Cell| {
            let dx = c.x.abs_diff(goal.x) as f64;
            let dy = c.y.abs_diff(goal.y) as f64;
            dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
        };
        let mut g = vec![f64::INFINITY; self.width * self.height];
        let mut came = vec![usize::MAX; self.width * self.height];
        let mut closed = vec![false; self.width * self.height];
        let mut open = BinaryHeap::new();
        g[idx(start)] = 0.0;
        open.push(Open {
            f: h(start),
            g: 0.0,
            cell: start,
        });
        while let Some(Open { g: gc, cell, .. }) = open.pop() {
            let i = idx(cell);
            if closed[i] {
                continue;
            }
            closed[i] = true;
            if cell == goal {
                let mut path = vec![cell];
                let mut cur = i;
                while came[cur] != usize::MAX {
                    cur = came[cur];
                    path.push(Cell::new(cur % self.width, cur / self.width));
                }
                path.reverse();
                return Some((path, gc));
            }
            for (n, w) in self.neighbors(cell) {
                let j = idx(n);
                let cand = gc + w;
                if !closed[j] && cand < g[j] {
                    g[j] = cand;
                    came[j] = i;
                    open.push(Open {
                        f: cand + h(n),
                        g: cand,
                        cell: n,
                    });
                }
            }
        }
        None
    }

    /// True when the segment touches no blocked or off-map cell.
    ///
    /// Touching a cell corner counts as entering it, which matches the
    /// no-corner-cutting rule of [`GridMap::neighbors`].
    pub fn line_of_sight(&self, a: [f64; 2], b: [f64; 2]) -> bool {
        let (x0, x1) = (a[0].min(b[0]), a[0].max(b[0]));
        let first = (x0 - 0.5).ceil() as i64;
        let last = (x1 + 0.5).floor() as i64;
        for cx in first..=last {
            let lo = (cx as f64 - 0.5).max(x0);
            let hi = (cx as f64 + 0.5).min(x1);
            if lo > hi {
                continue;
            }
            let (ya, yb) = if a[0] == b[0] {
                (a[1], b[1])
            } else {
                let y_at = |x: f64| a[1] + (b[1] - a[1]) * (x - a[0]) / (b[0] - a[0]);
                (y_at(lo), y_at(hi))
            };
            let (ylo, yhi) = (ya.min(yb), ya.max(yb));
            let ry0 = (ylo - 0.5).ceil() as i64;
            let ry1 = (yhi + 0.5).floor() as i64;
            for cy in ry0..=ry1 {
                if !self.free_at(cx, cy) {
                    return false;
                }
            }
        }
        true
    }

    /// Parses the Moving-AI grid text format.
    pub fn parse_movingai(text: &str) -> Result<Self, MapError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut kind = None;
        let mut height = None;
        let mut width = None;
        for (ln, line) in lines.by_ref() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                ["type", t] => kind = Some(t.to_string()),
                ["height", h] => height = Some(parse_dim(ln, h)?),
                ["width", w] => width = Some(parse_dim(ln, w)?),
                ["map"] => break,
                _ => {
                    return Err(MapError::Parse {
                        line: ln,
                        msg: format!("unexpected header line '{line}'"),
                    })
                }
            }
        }
        let (Some(height), Some(width)) = (height, width) else {
            return Err(MapError::Parse {
                line: 1,
                msg: "missing height or width".into(),
            });
        };
        let mut map = Self::new(width, height)?;
        map.kind = kind.unwrap_or_else(|| "octile".into());
        let mut y = 0;
        for (ln, line) in lines {
            let row = line.trim_end_matches('\r');
            if y == height {
                if row.trim().is_empty() {
                    continue;
                }
                return Err(MapError::Parse {
                    line: ln,
                    msg: "more rows than the declared height".into(),
                });
            }
            map.fill_row(y, row, ln)?;
            y += 1;
        }
        if y != height {
            return Err(MapError::Parse {
                line: text.lines().count(),
                msg: format!("found {y} rows, expected {height}"),
            });
        }
        Ok(map)
    }

    pub fn to_movingai(&self) -> String {
        let mut s = format!(
            "type {}\nheight {}\nwidth {}\nmap\n",
            self.kind, self.height, self.width
        );
        for row in self.terrain.chunks(self.width) {
            s.push_str(std::str::from_utf8(row).expect("terrain is ascii"));
            s.push('\n');
        }
        s
    }
}

fn parse_dim(line: usize, s: &str) -> Result<usize, MapError> {
    s.parse().map_err(|_| MapError::Parse {
        line,
        msg: format!("bad size '{s}'"),
    })
}

#[derive(Debug, PartialEq)]
struct Open {
    f: f64,
    g: f64,
    cell: Cell,
}

impl Eq for Open {}

impl Ord for Open {
    // min-heap on f, then deeper g, then cell for determinism
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
