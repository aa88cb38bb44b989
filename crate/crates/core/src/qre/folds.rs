use std::collections::HashMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::dynamics::fmt_float;

use super::surface::{neighbours4, SurfaceScan};

/// Which pair of equilibria merges and disappears across a fold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldKind {
    /// The two largest equilibria (by `x`) vanish; the low branch survives.
    Upper,
    /// The two smallest vanish; the high branch survives.
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldCell {
    pub i: usize,
    pub j: usize,
    pub kind: FoldKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldComponent {
    pub kind: FoldKind,
    pub cells: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polyline {
    pub component: usize,
    pub points: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FoldReport {
    pub cells: Vec<FoldCell>,
    pub components: Vec<FoldComponent>,
    pub polylines: Vec<Polyline>,
    pub warnings: Vec<String>,
}

impl FoldReport {
    pub fn num_components(&self) -> usize {
        self.components.len()
    }

    pub fn count_of(&self, kind: FoldKind) -> usize {
        self.components.iter().filter(|c| c.kind == kind).count()
    }

    /// Columns `component_id, delta_x, delta_y`; chains belonging to the same
    /// component follow each other.
    pub fn polyline_csv(&self) -> String {
        let mut out = String::from("component_id,delta_x,delta_y\n");
        for line in &self.polylines {
            for &(x, y) in &line.points {
                let _ = writeln!(out, "{},{},{}", line.component, fmt_float(x), fmt_float(y));
            }
        }
        out
    }
}

/// Locates saddle-node boundaries in a scan.
///
/// Fold cells are cells with three equilibria next to a cell with one. Each
/// is typed by which branch survives across the boundary: the single
/// neighbouring equilibrium lies close to either the lowest or the highest of
/// the three. Cells of one type are grouped into 8-connected components, so
/// two fold branches meeting at a cusp count as two components even though
/// the three-equilibrium region they bound is connected.
pub fn detect_folds(scan: &SurfaceScan) -> FoldReport {
    let (nx, ny) = scan.shape();
    let mut report = FoldReport::default();
    let mut kinds: HashMap<(usize, usize), Vec<FoldKind>> = HashMap::new();
    for i in 0..nx {
        for j in 0..ny {
            if scan.count(i, j) != 3 {
                continue;
            }
            let pts = &scan.points[scan.index(i, j)];
            let lo = pts[0].profile.first_action_probs();
            let hi = pts[2].profile.first_action_probs();
            let mut here = Vec::new();
            for (a, b) in neighbours4(i, j, nx, ny) {
                if scan.count(a, b) != 1 {
                    continue;
                }
                let p = scan.points[scan.index(a, b)][0].profile.first_action_probs();
                let dist = |q: &[f64]| (p[0] - q[0]).abs().max((p[1] - q[1]).abs());
                let kind = if dist(&lo) <= dist(&hi) {
                    FoldKind::Upper
                } else {
                    FoldKind::Lower
                };
                if !here.contains(&kind) {
                    here.push(kind);
                }
            }
            for &kind in &here {
                report.cells.push(FoldCell { i, j, kind });
            }
            if !here.is_empty() {
                kinds.insert((i, j), here);
            }
        }
    }

    let mut label: HashMap<((usize, usize), FoldKind), usize> = HashMap::new();
    for cell in &report.cells {
        let key = ((cell.i, cell.j), cell.kind);
        if label.contains_key(&key) {
            continue;
        }
        let id = report.components.len();
        let mut members = Vec::new();
        let mut stack = vec![(cell.i, cell.j)];
        label.insert(key, id);
        while let Some((a, b)) = stack.pop() {
            members.push((a, b));
            for da in -1isize..=1 {
                for db in -1isize..=1 {
                    let (na, nb) = (a as isize + da, b as isize + db);
                    if na < 0 || nb < 0 || na as usize >= nx || nb as usize >= ny {
                        continue;
                    }
                    let n = (na as usize, nb as usize);
                    let same_kind = kinds.get(&n).is_some_and(|k| k.contains(&cell.kind));
                    if same_kind && !label.contains_key(&(n, cell.kind)) {
                        label.insert((n, cell.kind), id);
                        stack.push(n);
                    }
                }
            }
        }
        members.sort_unstable();
        if members.len() == 1 {
            report.warnings.push(format!(
                "fold component {id} is a single cell at ({}, {}); the grid may be too coarse",
                cell.i, cell.j
            ));
        }
        report.components.push(FoldComponent {
            kind: cell.kind,
            cells: members,
        });
    }

    report.polylines = contour(scan, &label);
    report
}

/// Grid edge between two adjacent cells, used as a segment endpoint key.
type EdgeKey = (usize, usize, bool);

/// Marching squares on the indicator "three equilibria", with each segment
/// assigned to a fold component found among its square's corners.
fn contour(scan: &SurfaceScan, label: &HashMap<((usize, usize), FoldKind), usize>) -> Vec<Polyline> {
    let (nx, ny) = scan.shape();
    if nx < 2 || ny < 2 {
        return Vec::new();
    }
    let inside = |i: usize, j: usize| scan.count(i, j) >= 3;
    let midpoint = |e: EdgeKey| -> (f64, f64) {
        let (i, j, along_x) = e;
        if along_x {
            (0.5 * (scan.delta_x[i] + scan.delta_x[i + 1]), scan.delta_y[j])
        } else {
            (scan.delta_x[i], 0.5 * (scan.delta_y[j] + scan.delta_y[j + 1]))
        }
    };
    let mut segments: HashMap<usize, Vec<(EdgeKey, EdgeKey)>> = HashMap::new();
    for i in 0..nx - 1 {
        for j in 0..ny - 1 {
            // corners counter-clockwise from (i, j)
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let edges: [EdgeKey; 4] = [(i, j, true), (i + 1, j, false), (i, j + 1, true), (i, j, false)];
            let crossed: Vec<EdgeKey> = (0..4)
                .filter(|&e| {
                    let (a, b) = (corners[e], corners[(e + 1) % 4]);
                    inside(a.0, a.1) != inside(b.0, b.1)
                })
                .map(|e| edges[e])
                .collect();
            if crossed.is_empty() {
                continue;
            }
            let component = corners.iter().find_map(|&c| {
                [FoldKind::Upper, FoldKind::Lower]
                    .iter()
                    .find_map(|&k| label.get(&(c, k)).copied())
            });
            let Some(component) = component else {
                continue;
            };
            let entry = segments.entry(component).or_default();
            // two or four crossings; saddles pair consecutive edges
            for pair in crossed.chunks(2) {
                if let [a, b] = pair {
                    entry.push((*a, *b));
                }
            }
        }
    }

    let mut ids: Vec<usize> = segments.keys().copied().collect();
    ids.sort_unstable();
    let mut out = Vec::new();
    for id in ids {
        for chain in chain_segments(&segments[&id]) {
            out.push(Polyline {
                component: id,
                points: chain.into_iter().map(midpoint).collect(),
            });
        }
    }
    out
}

fn chain_segments(segs: &[(EdgeKey, EdgeKey)]) -> Vec<Vec<EdgeKey>> {
    let mut at: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (s, &(a, b)) in segs.iter().enumerate() {
        at.entry(a).or_default().push(s);
        at.entry(b).or_default().push(s);
    }
    let mut used = vec![false; segs.len()];
    let mut starts: Vec<EdgeKey> = at.iter().filter(|(_, v)| v.len() == 1).map(|(k, _)| *k).collect();
    starts.sort_unstable();
    let mut chains = Vec::new();
    let walk = |start: EdgeKey, used: &mut Vec<bool>| {
        let mut chain = vec![start];
        let mut cur = start;
        while let Some(&s) = at[&cur].iter().find(|&&s| !used[s]) {
            used[s] = true;
            let (a, b) = segs[s];
            cur = if a == cur { b } else { a };
            chain.push(cur);
        }
        chain
    };
    for start in starts {
        if at[&start].iter().any(|&s| !used[s]) {
            chains.push(walk(start, &mut used));
        }
    }
    // closed loops
    for s in 0..segs.len() {
        if !used[s] {
            chains.push(walk(segs[s].0, &mut used));
        }
    }
    chains
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::game::NormalFormGame;
    use crate::qre::sweep_surface;

    #[test]
    fn single_equilibrium_scan_has_no_folds() {
        let g = NormalFormGame::new(vec![2, 2], vec![vec![0.0; 4]; 2]).unwrap();
        let scan = sweep_surface(&g, (0.05, 5.0), (0.05, 5.0), 30).unwrap();
        let report = detect_folds(&scan);
        assert!(report.cells.is_empty() && report.components.is_empty() && report.polylines.is_empty());
    }

    #[test]
    fn coarse_topology_of_the_three_games() {
        let count = |g: NormalFormGame| {
            let scan = sweep_surface(&g, (0.05, 5.0), (0.05, 5.0), 80).unwrap();
            detect_folds(&scan).num_components()
        };
        assert_eq!(count(builtins::stag_hunt()), 1);
        assert_eq!(count(builtins::pareto_coordination()), 1);
        assert_eq!(count(builtins::battle_of_sexes()), 2);
    }

    #[test]
    fn polyline_follows_the_boundary() {
        let scan = sweep_surface(&builtins::stag_hunt(), (0.05, 5.0), (0.05, 5.0), 60).unwrap();
        let report = detect_folds(&scan);
        assert_eq!(report.polylines.len(), 1);
        let line = &report.polylines[0];
        assert!(line.points.len() > 10);
        // the symmetric fold crossing sits near delta = 0.35
        let diag = line
            .points
            .iter()
            .min_by(|a, b| (a.0 - a.1).abs().total_cmp(&(b.0 - b.1).abs()))
            .unwrap();
        assert!((diag.0 - 0.35).abs() < 0.1, "{diag:?}");
        let csv = report.polyline_csv();
        assert!(csv.starts_with("component_id,delta_x,delta_y\n"));
        assert_eq!(csv.lines().count(), line.points.len() + 1);
    }

    #[test]
    fn single_cell_components_warn() {
        let scan = sweep_surface(&builtins::stag_hunt(), (0.05, 5.0), (0.05, 5.0), 3).unwrap();
        let report = detect_folds(&scan);
        assert_eq!(report.num_components(), 1);
        assert!(!report.warnings.is_empty());
    }
}
