//! 17-value geometric and structural feature extraction.
//!
//! Features 1-8 measure directed line segments traced along the skeleton:
//! per-direction counts and total lengths for horizontal, vertical,
//! right-diagonal and left-diagonal strokes. Features 9-17 are region
//! properties of the filled glyph: Euler number, convex area, filled area,
//! solidity, perimeter, area, eccentricity, extent and orientation.

use crate::error::{Error, Result};
use crate::imaging::{label_components, BinaryImage, Connectivity, PreprocessedNumeral};

/// Minimum number of same-direction chain-code steps for a run to count
/// as a line segment.
pub const DEFAULT_MIN_RUN: usize = 3;

/// Ring of 8 neighbors in clockwise order: N, NE, E, SE, S, SW, W, NW.
const RING: [(isize, isize); 8] = [
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
];

/// Stroke direction of a unit chain-code step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum StepDir {
    Horizontal,
    Vertical,
    RightDiag,
    LeftDiag,
}

fn step_dir(dr: isize, dc: isize) -> StepDir {
    match (dr, dc) {
        (0, _) => StepDir::Horizontal,
        (_, 0) => StepDir::Vertical,
        _ if dr * dc < 0 => StepDir::RightDiag, // NE / SW, like "/"
        _ => StepDir::LeftDiag,                 // SE / NW, like "\"
    }
}

/// Per-direction line segment lengths traced from a skeleton.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct LineSegments {
    pub horizontal: Vec<usize>,
    pub vertical: Vec<usize>,
    pub right_diag: Vec<usize>,
    pub left_diag: Vec<usize>,
}

impl LineSegments {
    fn push(&mut self, dir: StepDir, length: usize) {
        match dir {
            StepDir::Horizontal => self.horizontal.push(length),
            StepDir::Vertical => self.vertical.push(length),
            StepDir::RightDiag => self.right_diag.push(length),
            StepDir::LeftDiag => self.left_diag.push(length),
        }
    }
}

/// The skeleton as a traversal graph: ink pixels classified by crossing
/// number (0->1 transitions around the neighbor ring). 1 = endpoint,
/// 2 = path pixel, >= 3 = junction.
struct SkeletonWalker<'a> {
    img: &'a BinaryImage,
}

impl<'a> SkeletonWalker<'a> {
    fn ink(&self, p: (isize, isize)) -> bool {
        self.img.at(p.0, p.1) == 1
    }

    fn ring_mask(&self, p: (isize, isize)) -> [bool; 8] {
        let mut m = [false; 8];
        for (i, &(dr, dc)) in RING.iter().enumerate() {
            m[i] = self.ink((p.0 + dr, p.1 + dc));
        }
        m
    }

    fn crossing(&self, p: (isize, isize)) -> u32 {
        let m = self.ring_mask(p);
        (0..8).filter(|&i| !m[i] && m[(i + 1) % 8]).count() as u32
    }

    fn degree(&self, p: (isize, isize)) -> u32 {
        self.ring_mask(p).iter().filter(|&&b| b).count() as u32
    }

    /// Contiguous circular runs of ink neighbors, each a list of ring
    /// indices. One run per branch leaving the pixel.
    fn runs(&self, p: (isize, isize)) -> Vec<Vec<usize>> {
        let m = self.ring_mask(p);
        if m.iter().all(|&b| b) {
            return vec![(0..8).collect()];
        }
        // rotate so the scan starts on a background cell
        let start = (0..8).find(|&i| !m[i]).unwrap();
        let mut out: Vec<Vec<usize>> = Vec::new();
        let mut cur: Vec<usize> = Vec::new();
        for k in 0..8 {
            let i = (start + k) % 8;
            if m[i] {
                cur.push(i);
            } else if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    }

    /// Representative neighbor of a run: orthogonal if available, else the
    /// first ring index of the run.
    fn run_rep(&self, p: (isize, isize), run: &[usize]) -> (isize, isize) {
        let idx = run
            .iter()
            .copied()
            .find(|i| i % 2 == 0)
            .unwrap_or(run[0]);
        (p.0 + RING[idx].0, p.1 + RING[idx].1)
    }

    /// Index (within `runs`) of the run containing neighbor `q` of `p`.
    fn run_of(&self, p: (isize, isize), runs: &[Vec<usize>], q: (isize, isize)) -> usize {
        for (k, run) in runs.iter().enumerate() {
            for &i in run {
                if (p.0 + RING[i].0, p.1 + RING[i].1) == q {
                    return k;
                }
            }
        }
        unreachable!("neighbor not adjacent");
    }

    /// Continue a walk through a path pixel: pick the run not containing
    /// `prev` and step to its representative.
    fn next_through(&self, cur: (isize, isize), prev: (isize, isize)) -> (isize, isize) {
        let runs = self.runs(cur);
        debug_assert_eq!(runs.len(), 2);
        let from = self.run_of(cur, &runs, prev);
        self.run_rep(cur, &runs[1 - from])
    }
}

/// Traces the skeleton branch by branch and collects maximal same-direction
/// chain-code runs of at least `min_run` steps as line segments.
///
/// Branches start and end at endpoints (crossing number 1) and junctions
/// (crossing number >= 3); junction pixels are excluded from segment
/// lengths. Closed curves with no terminal pixel are walked once around.
pub fn extract_line_features(skeleton: &BinaryImage, min_run: usize) -> Result<LineSegments> {
    if skeleton.ink_count() == 0 {
        return Err(Error::BlankInput);
    }
    let walker = SkeletonWalker { img: skeleton };
    let (w, h) = (skeleton.width() as isize, skeleton.height() as isize);

    let mut segments = LineSegments::default();
    let mut visited = vec![false; (w * h) as usize];
    let idx = |p: (isize, isize)| (p.0 * w + p.1) as usize;
    // (terminal pixel index, run index) pairs already walked
    let mut used_runs = std::collections::HashSet::new();

    let mut record_path = |path: &[(isize, isize)], walker: &SkeletonWalker| {
        if path.len() < 2 {
            return;
        }
        let is_junction: Vec<bool> = path.iter().map(|&p| walker.crossing(p) >= 3).collect();
        let dirs: Vec<StepDir> = path
            .windows(2)
            .map(|s| step_dir(s[1].0 - s[0].0, s[1].1 - s[0].1))
            .collect();
        let mut a = 0;
        while a < dirs.len() {
            let mut b = a;
            while b + 1 < dirs.len() && dirs[b + 1] == dirs[a] {
                b += 1;
            }
            let steps = b - a + 1;
            if steps >= min_run {
                let junctions = is_junction[a..=b + 1].iter().filter(|&&j| j).count();
                let length = steps + 1 - junctions;
                if length >= min_run {
                    segments.push(dirs[a], length);
                }
            }
            a = b + 1;
        }
    };

    // branch walks from every terminal pixel
    for r in 0..h {
        for c in 0..w {
            let p = (r, c);
            if !walker.ink(p) || walker.degree(p) == 0 {
                continue;
            }
            let cross = walker.crossing(p);
            if cross == 2 {
                continue;
            }
            visited[idx(p)] = true;
            let runs = walker.runs(p);
            for (k, run) in runs.iter().enumerate() {
                if !used_runs.insert((idx(p), k)) {
                    continue;
                }
                let mut path = vec![p];
                let mut prev = p;
                let mut cur = walker.run_rep(p, run);
                let cap = 4 * (w * h) as usize;
                for _ in 0..cap {
                    path.push(cur);
                    visited[idx(cur)] = true;
                    if walker.crossing(cur) != 2 {
                        // mark the arrival run on the far terminal
                        let cruns = walker.runs(cur);
                        let from = walker.run_of(cur, &cruns, prev);
                        used_runs.insert((idx(cur), from));
                        break;
                    }
                    let next = walker.next_through(cur, prev);
                    prev = cur;
                    cur = next;
                }
                record_path(&path, &walker);
            }
        }
    }

    // closed curves: every pixel has crossing number 2 and none was reached
    for r in 0..h {
        for c in 0..w {
            let start = (r, c);
            if !walker.ink(start) || visited[idx(start)] || walker.crossing(start) != 2 {
                continue;
            }
            let mut path = vec![start];
            visited[idx(start)] = true;
            let runs = walker.runs(start);
            let mut prev = start;
            let mut cur = walker.run_rep(start, &runs[0]);
            while cur != start {
                path.push(cur);
                visited[idx(cur)] = true;
                let next = walker.next_through(cur, prev);
                prev = cur;
                cur = next;
            }
            path.push(start);
            record_path(&path, &walker);
        }
    }

    Ok(segments)
}

/// Region properties of the filled glyph, feature order 9-17.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionProperties {
    pub euler_number: i64,
    pub convex_area: usize,
    pub filled_area: usize,
    pub solidity: f64,
    pub perimeter: f64,
    pub area: usize,
    pub eccentricity: f64,
    pub extent: f64,
    pub orientation: f64,
}

/// Number of 4-connected background components that do not touch the
/// image border.
fn count_holes(img: &BinaryImage) -> usize {
    let (labels, count) = label_components(img, 0, Connectivity::Four);
    let (w, h) = (img.width(), img.height());
    let mut touches_border = vec![false; count as usize + 1];
    for r in 0..h {
        for c in 0..w {
            if r == 0 || c == 0 || r == h - 1 || c == w - 1 {
                touches_border[labels[r * w + c] as usize] = true;
            }
        }
    }
    (1..=count as usize).filter(|&l| !touches_border[l]).count()
}

/// Ink count after flood-filling every hole.
fn filled_area(img: &BinaryImage) -> usize {
    let (labels, count) = label_components(img, 0, Connectivity::Four);
    let (w, h) = (img.width(), img.height());
    let mut touches_border = vec![false; count as usize + 1];
    for r in 0..h {
        for c in 0..w {
            if r == 0 || c == 0 || r == h - 1 || c == w - 1 {
                touches_border[labels[r * w + c] as usize] = true;
            }
        }
    }
    let mut area = 0;
    for (i, &l) in labels.iter().enumerate() {
        if img.pixels()[i] == 1 || (l != 0 && !touches_border[l as usize]) {
            area += 1;
        }
    }
    area
}

fn cross(o: (i64, i64), a: (i64, i64), b: (i64, i64)) -> i64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Convex hull by monotone chain; returns CCW vertices (x = col, y = row).
fn convex_hull(mut points: Vec<(i64, i64)>) -> Vec<(i64, i64)> {
    points.sort_unstable();
    points.dedup();
    if points.len() <= 2 {
        return points;
    }
    let mut lower: Vec<(i64, i64)> = Vec::new();
    for &p in &points {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<(i64, i64)> = Vec::new();
    for &p in points.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn point_in_hull(hull: &[(i64, i64)], p: (i64, i64)) -> bool {
    match hull.len() {
        0 => false,
        1 => hull[0] == p,
        2 => {
            let (a, b) = (hull[0], hull[1]);
            cross(a, b, p) == 0
                && p.0 >= a.0.min(b.0)
                && p.0 <= a.0.max(b.0)
                && p.1 >= a.1.min(b.1)
                && p.1 <= a.1.max(b.1)
        }
        _ => (0..hull.len()).all(|i| cross(hull[i], hull[(i + 1) % hull.len()], p) >= 0),
    }
}

/// Pixel count of the rasterized convex hull of ink pixel centers.
fn convex_area(img: &BinaryImage, bbox: (usize, usize, usize, usize)) -> usize {
    let mut points = Vec::new();
    for r in 0..img.height() {
        for c in 0..img.width() {
            if img.get(r, c) == 1 {
                points.push((c as i64, r as i64));
            }
        }
    }
    let hull = convex_hull(points);
    let (min_r, max_r, min_c, max_c) = bbox;
    let mut count = 0;
    for r in min_r..=max_r {
        for c in min_c..=max_c {
            if point_in_hull(&hull, (c as i64, r as i64)) {
                count += 1;
            }
        }
    }
    count
}

/// Traces the outer boundary of one component (Moore neighbor tracing,
/// clockwise) and sums step lengths: 1 per orthogonal step, sqrt(2) per
/// diagonal step.
fn trace_perimeter(img: &BinaryImage, labels: &[u32], label: u32, start: (isize, isize)) -> f64 {
    let w = img.width() as isize;
    let ink = |p: (isize, isize)| -> bool {
        p.0 >= 0
            && p.1 >= 0
            && (p.0 as usize) < img.height()
            && (p.1 as usize) < img.width()
            && labels[(p.0 * w + p.1) as usize] == label
    };
    // start is the raster-first pixel of the component, so its W neighbor
    // is background
    let mut b_dir = 6usize;
    if !(0..8).any(|d| ink((start.0 + RING[d].0, start.1 + RING[d].1))) {
        return 0.0; // single isolated pixel
    }
    let mut cur = start;
    let mut perimeter = 0.0;
    let mut first_move: Option<(usize, (isize, isize))> = None;
    let cap = 8 * img.pixels().len() + 8;
    for _ in 0..cap {
        let mut moved = false;
        for k in 0..8 {
            let d = (b_dir + 1 + k) % 8;
            let next = (cur.0 + RING[d].0, cur.1 + RING[d].1);
            if ink(next) {
                if cur == start {
                    match first_move {
                        None => first_move = Some((d, next)),
                        Some(fm) => {
                            if fm == (d, next) {
                                return perimeter; // Jacob's stopping criterion
                            }
                        }
                    }
                }
                let step = if d % 2 == 0 { 1.0 } else { std::f64::consts::SQRT_2 };
                perimeter += step;
                // backtrack: the last background cell scanned before `next`
                let back_dir = if k == 0 { b_dir } else { (d + 7) % 8 };
                let back = (cur.0 + RING[back_dir].0, cur.1 + RING[back_dir].1);
                let (dr, dc) = (back.0 - next.0, back.1 - next.1);
                b_dir = RING
                    .iter()
                    .position(|&o| o == (dr, dc))
                    .expect("backtrack is adjacent to next");
                cur = next;
                moved = true;
                break;
            }
        }
        if !moved {
            return perimeter;
        }
    }
    perimeter
}

/// Computes the nine region property features on the filled image.
pub fn region_properties(filled: &BinaryImage) -> Result<RegionProperties> {
    let area = filled.ink_count();
    if area == 0 {
        return Err(Error::BlankInput);
    }
    let (w, h) = (filled.width(), filled.height());

    let (labels, objects) = label_components(filled, 1, Connectivity::Eight);
    let holes = count_holes(filled);
    let euler_number = objects as i64 - holes as i64;

    let filled_area = filled_area(filled);

    let mut min_r = usize::MAX;
    let mut max_r = 0;
    let mut min_c = usize::MAX;
    let mut max_c = 0;
    for r in 0..h {
        for c in 0..w {
            if filled.get(r, c) == 1 {
                min_r = min_r.min(r);
                max_r = max_r.max(r);
                min_c = min_c.min(c);
                max_c = max_c.max(c);
            }
        }
    }
    let bbox_area = (max_r - min_r + 1) * (max_c - min_c + 1);
    let extent = area as f64 / bbox_area as f64;

    let convex_area = convex_area(filled, (min_r, max_r, min_c, max_c));
    let solidity = area as f64 / convex_area as f64;

    // outer boundary of every component
    let mut perimeter = 0.0;
    let mut seen = vec![false; objects as usize + 1];
    for r in 0..h {
        for c in 0..w {
            let l = labels[r * w + c];
            if l != 0 && !seen[l as usize] {
                seen[l as usize] = true;
                perimeter += trace_perimeter(filled, &labels, l, (r as isize, c as isize));
            }
        }
    }

    // moments of the ink region; y axis points up so that orientation is
    // counterclockwise-positive as seen on the page
    let n = area as f64;
    let mut sx = 0.0;
    let mut sy = 0.0;
    for r in 0..h {
        for c in 0..w {
            if filled.get(r, c) == 1 {
                sx += c as f64;
                sy -= r as f64;
            }
        }
    }
    let (mx, my) = (sx / n, sy / n);
    let mut mu20 = 0.0;
    let mut mu02 = 0.0;
    let mut mu11 = 0.0;
    for r in 0..h {
        for c in 0..w {
            if filled.get(r, c) == 1 {
                let dx = c as f64 - mx;
                let dy = -(r as f64) - my;
                mu20 += dx * dx;
                mu02 += dy * dy;
                mu11 += dx * dy;
            }
        }
    }
    // per-pixel variance correction of 1/12 on each axis
    mu20 = mu20 / n + 1.0 / 12.0;
    mu02 = mu02 / n + 1.0 / 12.0;
    mu11 /= n;

    let common = (((mu20 - mu02) / 2.0).powi(2) + mu11 * mu11).sqrt();
    let l1 = (mu20 + mu02) / 2.0 + common;
    let l2 = (mu20 + mu02) / 2.0 - common;
    let eccentricity = (1.0 - l2 / l1).max(0.0).sqrt();
    let mut orientation = 0.5 * (2.0 * mu11).atan2(mu20 - mu02) * 180.0 / std::f64::consts::PI;
    if orientation < -90.0 {
        orientation += 180.0;
    } else if orientation > 90.0 {
        orientation -= 180.0;
    }

    Ok(RegionProperties {
        euler_number,
        convex_area,
        filled_area,
        solidity,
        perimeter,
        area,
        eccentricity,
        extent,
        orientation,
    })
}

/// The 17 features in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureVector {
    pub n_horiz_lines: f64,
    pub n_vert_lines: f64,
    pub n_rdiag_lines: f64,
    pub n_ldiag_lines: f64,
    pub len_horiz: f64,
    pub len_vert: f64,
    pub len_rdiag: f64,
    pub len_ldiag: f64,
    pub euler_number: f64,
    pub convex_area: f64,
    pub filled_area: f64,
    pub solidity: f64,
    pub perimeter: f64,
    pub area: f64,
    pub eccentricity: f64,
    pub extent: f64,
    pub orientation: f64,
}

impl FeatureVector {
    pub const NAMES: [&'static str; 17] = [
        "n_horiz_lines",
        "n_vert_lines",
        "n_rdiag_lines",
        "n_ldiag_lines",
        "len_horiz",
        "len_vert",
        "len_rdiag",
        "len_ldiag",
        "euler_number",
        "convex_area",
        "filled_area",
        "solidity",
        "perimeter",
        "area",
        "eccentricity",
        "extent",
        "orientation",
    ];

    pub fn to_array(self) -> [f64; 17] {
        [
            self.n_horiz_lines,
            self.n_vert_lines,
            self.n_rdiag_lines,
            self.n_ldiag_lines,
            self.len_horiz,
            self.len_vert,
            self.len_rdiag,
            self.len_ldiag,
            self.euler_number,
            self.convex_area,
            self.filled_area,
            self.solidity,
            self.perimeter,
            self.area,
            self.eccentricity,
            self.extent,
            self.orientation,
        ]
    }
}

/// Assembles the full feature vector: line features from the skeleton,
/// region properties from the filled image.
pub fn extract_features(p: &PreprocessedNumeral) -> Result<FeatureVector> {
    extract_features_with(p, DEFAULT_MIN_RUN)
}

pub fn extract_features_with(p: &PreprocessedNumeral, min_run: usize) -> Result<FeatureVector> {
    let lines = extract_line_features(&p.skeleton, min_run)?;
    let props = region_properties(&p.filled)?;
    Ok(FeatureVector {
        n_horiz_lines: lines.horizontal.len() as f64,
        n_vert_lines: lines.vertical.len() as f64,
        n_rdiag_lines: lines.right_diag.len() as f64,
        n_ldiag_lines: lines.left_diag.len() as f64,
        len_horiz: lines.horizontal.iter().sum::<usize>() as f64,
        len_vert: lines.vertical.iter().sum::<usize>() as f64,
        len_rdiag: lines.right_diag.iter().sum::<usize>() as f64,
        len_ldiag: lines.left_diag.iter().sum::<usize>() as f64,
        euler_number: props.euler_number as f64,
        convex_area: props.convex_area as f64,
        filled_area: props.filled_area as f64,
        solidity: props.solidity,
        perimeter: props.perimeter,
        area: props.area as f64,
        eccentricity: props.eccentricity,
        extent: props.extent,
        orientation: props.orientation,
    })
}
