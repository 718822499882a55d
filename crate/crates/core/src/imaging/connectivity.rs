//! Connectivity enforcement for label maps.
//!
//! SLIC assignment can leave a label spatially fragmented. This pass first
//! splits every label into its 4-connected components, then absorbs
//! components smaller than `min_size` into their largest 4-adjacent
//! neighbor, and finally renumbers labels contiguously in scan order.

use super::slic::relabel_contiguous;
use super::Segmentation;

/// Split labels into 4-connected components and merge the small ones away.
///
/// Components with fewer than `min_size` pixels are merged into their
/// largest 4-adjacent neighboring component (ties broken by lowest
/// component id); a component with no neighbor (a single-component image)
/// is kept regardless of size. The result is a partition in which every
/// label is 4-connected and labels are contiguous from 0 in scan order.
/// Idempotent: applying it to an already conforming segmentation only
/// renumbers labels.
pub fn enforce_connectivity(seg: &Segmentation, min_size: f64) -> Segmentation {
    let (w, h) = (seg.width, seg.height);
    let n = w * h;

    // Flood-fill 4-connected components of equal original label.
    let mut comp: Vec<u32> = vec![u32::MAX; n];
    let mut sizes: Vec<usize> = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    for start in 0..n {
        if comp[start] != u32::MAX {
            continue;
        }
        let id = sizes.len() as u32;
        let label = seg.labels[start];
        let mut size = 0usize;
        comp[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            size += 1;
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if comp[j] == u32::MAX && seg.labels[j] == label {
                    comp[j] = id;
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
        sizes.push(size);
    }

    // Union-find over components with incrementally maintained adjacency;
    // merging a small component redirects it to a neighbor's root.
    let n_comp = sizes.len();
    let mut parent: Vec<u32> = (0..n_comp as u32).collect();
    fn find(parent: &mut [u32], mut i: u32) -> u32 {
        while parent[i as usize] != i {
            parent[i as usize] = parent[parent[i as usize] as usize];
            i = parent[i as usize];
        }
        i
    }

    let mut adj: Vec<std::collections::BTreeSet<u32>> = vec![Default::default(); n_comp];
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let a = comp[i];
            if x + 1 < w && comp[i + 1] != a {
                adj[a as usize].insert(comp[i + 1]);
                adj[comp[i + 1] as usize].insert(a);
            }
            if y + 1 < h && comp[i + w] != a {
                adj[a as usize].insert(comp[i + w]);
                adj[comp[i + w] as usize].insert(a);
            }
        }
    }
    let mut root_size = sizes.clone();

    // Repeated passes in component-id (scan) order until stable; merging
    // grows the target, so later passes see updated sizes.
    loop {
        let mut merged_any = false;
        for c in 0..n_comp as u32 {
            if find(&mut parent, c) != c {
                continue;
            }
            if (root_size[c as usize] as f64) >= min_size || adj[c as usize].is_empty() {
                continue;
            }
            let target = adj[c as usize]
                .iter()
                .copied()
                .max_by_key(|&nb| (root_size[nb as usize], std::cmp::Reverse(nb)))
                .expect("undersized component has a neighbor");
            parent[c as usize] = target;
            root_size[target as usize] += root_size[c as usize];
            let neighbors: Vec<u32> = adj[c as usize].iter().copied().collect();
            for nb in neighbors {
                adj[nb as usize].remove(&c);
                if nb != target {
                    adj[nb as usize].insert(target);
                    adj[target as usize].insert(nb);
                }
            }
            adj[c as usize].clear();
            merged_any = true;
        }
        if !merged_any {
            break;
        }
    }

    let mut roots: Vec<u32> = vec![0; n];
    for i in 0..n {
        roots[i] = find(&mut parent, comp[i]);
    }
    let (labels, n_actual) = relabel_contiguous(&roots, w, h);
    Segmentation {
        width: w,
        height: h,
        labels,
        n_segments_requested: seg.n_segments_requested,
        n_segments_actual: n_actual,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg_from(labels: Vec<u32>, w: usize, h: usize) -> Segmentation {
        let n_actual = labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0);
        Segmentation {
            width: w,
            height: h,
            labels,
            n_segments_requested: n_actual,
            n_segments_actual: n_actual,
        }
    }

    /// Reference flood fill used to verify connectivity of each label.
    fn assert_all_labels_connected(seg: &Segmentation) {
        let (w, h) = (seg.width, seg.height);
        let mut seen_root: std::collections::BTreeMap<u32, bool> = Default::default();
        let mut visited = vec![false; w * h];
        for start in 0..w * h {
            if visited[start] {
                continue;
            }
            let label = seg.labels[start];
            if *seen_root.get(&label).unwrap_or(&false) {
                panic!("label {label} has more than one 4-connected component");
            }
            seen_root.insert(label, true);
            let mut stack = vec![start];
            visited[start] = true;
            while let Some(i) = stack.pop() {
                let (x, y) = (i % w, i / w);
                let visit = |j: usize, visited: &mut Vec<bool>, stack: &mut Vec<usize>| {
                    if !visited[j] && seg.labels[j] == label {
                        visited[j] = true;
                        stack.push(j);
                    }
                };
                if x > 0 {
                    visit(i - 1, &mut visited, &mut stack);
                }
                if x + 1 < w {
                    visit(i + 1, &mut visited, &mut stack);
                }
                if y > 0 {
                    visit(i - w, &mut visited, &mut stack);
                }
                if y + 1 < h {
                    visit(i + w, &mut visited, &mut stack);
                }
            }
        }
    }

    #[test]
    fn orphan_pixel_is_absorbed() {
        // A single label-1 pixel stranded inside label 0, plus a genuine
        // label-1 block elsewhere.
        let mut labels = vec![0u32; 36];
        labels[2 * 6 + 2] = 1; // stranded pixel at (2,2)
        for y in 4..6 {
            for x in 4..6 {
                labels[y * 6 + x] = 1;
            }
        }
        let seg = seg_from(labels, 6, 6);
        let out = enforce_connectivity(&seg, 2.0);
        assert_all_labels_connected(&out);
        assert_eq!(out.n_segments_actual, 2);
        // The stranded pixel joined the surrounding component.
        assert_eq!(out.label(2, 2), out.label(0, 0));
    }

    #[test]
    fn checkerboard_splits_to_cells_with_min_size_one() {
        // 4x4 checkerboard of two labels: every cell is its own component;
        // min_size = 1 merges nothing, so each cell gets its own label.
        let mut labels = Vec::with_capacity(16);
        for y in 0..4 {
            for x in 0..4 {
                labels.push(((x + y) % 2) as u32);
            }
        }
        let seg = seg_from(labels, 4, 4);
        let out = enforce_connectivity(&seg, 1.0);
        assert_eq!(out.n_segments_actual, 16);
        assert_all_labels_connected(&out);
    }

    #[test]
    fn idempotent_on_conforming_segmentation() {
        let mut labels = vec![0u32; 64];
        for y in 0..8 {
            for x in 4..8 {
                labels[y * 8 + x] = 1;
            }
        }
        let seg = seg_from(labels, 8, 8);
        let once = enforce_connectivity(&seg, 4.0);
        let twice = enforce_connectivity(&once, 4.0);
        assert_eq!(once.labels, twice.labels);
    }

    #[test]
    fn single_component_survives_any_min_size() {
        let seg = seg_from(vec![0u32; 25], 5, 5);
        let out = enforce_connectivity(&seg, 1e9);
        assert_eq!(out.n_segments_actual, 1);
        assert!(out.labels.iter().all(|&l| l == 0));
    }

    #[test]
    fn merge_prefers_largest_neighbor() {
        // Row layout: [1, 1, 0, 2, 2, 2]; the middle singleton must merge
        // into label 2's component (3 pixels) rather than label 1's (2).
        let labels = vec![1, 1, 0, 2, 2, 2];
        let seg = seg_from(labels, 6, 1);
        let out = enforce_connectivity(&seg, 2.0);
        assert_eq!(out.n_segments_actual, 2);
        assert_eq!(out.label(2, 0), out.label(3, 0));
        assert_ne!(out.label(2, 0), out.label(0, 0));
    }

    #[test]
    fn partition_and_connectivity_on_noise_labels() {
        // Pseudo-random label map: output must remain a partition with
        // 4-connected labels for a range of min_size values.
        let w = 24;
        let h = 18;
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut labels = Vec::with_capacity(w * h);
        for _ in 0..w * h {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            labels.push((state % 5) as u32);
        }
        let seg = seg_from(labels, w, h);
        for min_size in [1.0, 2.0, 5.0, 12.0] {
            let out = enforce_connectivity(&seg, min_size);
            assert_all_labels_connected(&out);
            let mut areas = vec![0usize; out.n_segments_actual];
            for &l in &out.labels {
                areas[l as usize] += 1;
            }
            assert!(areas.iter().all(|&a| a > 0));
            // No undersized label may survive (the map is never a single
            // component here, so every small component has a neighbor).
            if out.n_segments_actual > 1 {
                assert!(
                    areas.iter().all(|&a| (a as f64) >= min_size),
                    "min_size={min_size} left area {:?}",
                    areas
                );
            }
        }
    }
}
