use std::collections::HashMap;

use crate::raster::SuperpixelMap;

struct Component {
    label: u32,
    pixels: Vec<usize>,
}

fn components(sp: &SuperpixelMap) -> (Vec<usize>, Vec<Component>) {
    let (w, h) = (sp.width(), sp.height());
    let labels = sp.labels();
    let mut comp = vec![usize::MAX; w * h];
    let mut comps = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if comp[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let label = labels[start];
        let mut pixels = Vec::new();
        comp[start] = id;
        stack.push(start);
        while let Some(i) = stack.pop() {
            pixels.push(i);
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if comp[j] == usize::MAX && labels[j] == label {
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
        comps.push(Component { label, pixels });
    }
    (comp, comps)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Makes every label a single 4-connected region.
///
/// The largest fragment of each label keeps it. Remaining fragments are
/// processed smallest first and merged into the adjacent region sharing the
/// most boundary edges (ties go to the lower label). Labels are compacted
/// afterwards, preserving their order.
pub fn enforce_connectivity(sp: &SuperpixelMap) -> SuperpixelMap {
    let (w, h) = (sp.width(), sp.height());
    let (comp_of, comps) = components(sp);

    let mut kept = vec![usize::MAX; sp.count()];
    for (id, c) in comps.iter().enumerate() {
        let k = &mut kept[c.label as usize];
        if *k == usize::MAX || comps[*k].pixels.len() < c.pixels.len() {
            *k = id;
        }
    }
    let is_kept = |id: usize| kept[comps[id].label as usize] == id;

    let mut orphans: Vec<usize> = (0..comps.len()).filter(|&id| !is_kept(id)).collect();
    if orphans.is_empty() {
        return sp.clone();
    }
    orphans.sort_by_key(|&id| (comps[id].pixels.len(), id));

    let mut parent: Vec<usize> = (0..comps.len()).collect();
    let mut group_label: Vec<u32> = comps.iter().map(|c| c.label).collect();
    let mut members: Vec<Vec<usize>> = (0..comps.len()).map(|id| vec![id]).collect();

    for &o in &orphans {
        let root = find(&mut parent, o);
        let mut boundary: HashMap<usize, usize> = HashMap::new();
        for &cid in &members[root] {
            for &i in &comps[cid].pixels {
                let (x, y) = (i % w, i / w);
                let mut neighbors = [usize::MAX; 4];
                if x > 0 {
                    neighbors[0] = i - 1;
                }
                if x + 1 < w {
                    neighbors[1] = i + 1;
                }
                if y > 0 {
                    neighbors[2] = i - w;
                }
                if y + 1 < h {
                    neighbors[3] = i + w;
                }
                for j in neighbors.into_iter().filter(|&j| j != usize::MAX) {
                    let g = find(&mut parent, comp_of[j]);
                    if g != root {
                        *boundary.entry(g).or_default() += 1;
                    }
                }
            }
        }
        let Some(target) = boundary
            .into_iter()
            .max_by(|a, b| a.1.cmp(&b.1).then(group_label[b.0].cmp(&group_label[a.0])).then(b.0.cmp(&a.0)))
            .map(|(g, _)| g)
        else {
            continue;
        };
        parent[root] = target;
        let moved = std::mem::take(&mut members[root]);
        members[target].extend(moved);
        group_label[root] = group_label[target];
    }

    let mut labels = vec![0u32; w * h];
    for (i, l) in labels.iter_mut().enumerate() {
        let g = find(&mut parent, comp_of[i]);
        *l = group_label[g];
    }
    SuperpixelMap::compacted(w, h, &labels).expect("dimensions unchanged")
}

/// Number of 4-connected components of each label.
pub fn component_counts(sp: &SuperpixelMap) -> Vec<usize> {
    let (_, comps) = components(sp);
    let mut counts = vec![0; sp.count()];
    for c in comps {
        counts[c.label as usize] += 1;
    }
    counts
}
