//! 26-connected component labeling on binary masks.

use super::BinaryMask;

/// Label 26-connected components. Returns (labels, sizes); label 0 is
/// background, components are numbered 1.. in scan order.
pub fn connected_components(m: &BinaryMask) -> (Vec<u32>, Vec<usize>) {
    let [nx, ny, nz] = m.geom.dims;
    let mut labels = vec![0u32; m.values.len()];
    let mut sizes = Vec::new();
    let mut stack = Vec::new();
    let mut next = 1u32;

    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let idx = m.geom.index(x, y, z);
                if !m.values[idx] || labels[idx] != 0 {
                    continue;
                }
                let label = next;
                next += 1;
                let mut size = 0usize;
                labels[idx] = label;
                stack.push((x, y, z));
                while let Some((cx, cy, cz)) = stack.pop() {
                    size += 1;
                    for dz in -1i64..=1 {
                        for dy in -1i64..=1 {
                            for dx in -1i64..=1 {
                                if dx == 0 && dy == 0 && dz == 0 {
                                    continue;
                                }
                                let (xx, yy, zz) = (cx as i64 + dx, cy as i64 + dy, cz as i64 + dz);
                                if xx < 0
                                    || yy < 0
                                    || zz < 0
                                    || xx as usize >= nx
                                    || yy as usize >= ny
                                    || zz as usize >= nz
                                {
                                    continue;
                                }
                                let nidx = m.geom.index(xx as usize, yy as usize, zz as usize);
                                if m.values[nidx] && labels[nidx] == 0 {
                                    labels[nidx] = label;
                                    stack.push((xx as usize, yy as usize, zz as usize));
                                }
                            }
                        }
                    }
                }
                sizes.push(size);
            }
        }
    }
    (labels, sizes)
}

/// Clear 26-connected components smaller than `min_voxels`. The largest
/// component is always retained, even when it is below the threshold.
/// An empty mask is returned unchanged.
pub fn remove_small_components(m: &BinaryMask, min_voxels: usize) -> BinaryMask {
    let (labels, sizes) = connected_components(m);
    if sizes.is_empty() {
        return m.clone();
    }
    let largest = sizes
        .iter()
        .enumerate()
        .max_by_key(|(i, &s)| (s, std::cmp::Reverse(*i)))
        .map(|(i, _)| i as u32 + 1)
        .unwrap();
    let keep: Vec<bool> = sizes
        .iter()
        .enumerate()
        .map(|(i, &s)| s >= min_voxels || (i as u32 + 1) == largest)
        .collect();
    let values = labels
        .iter()
        .map(|&l| l != 0 && keep[(l - 1) as usize])
        .collect();
    BinaryMask {
        geom: m.geom,
        values,
    }
}

/// Keep only the largest 26-connected component (empty masks stay empty).
pub fn largest_component(m: &BinaryMask) -> BinaryMask {
    let (labels, sizes) = connected_components(m);
    if sizes.is_empty() {
        return m.clone();
    }
    let largest = sizes
        .iter()
        .enumerate()
        .max_by_key(|(i, &s)| (s, std::cmp::Reverse(*i)))
        .map(|(i, _)| i as u32 + 1)
        .unwrap();
    let values = labels.iter().map(|&l| l == largest).collect();
    BinaryMask {
        geom: m.geom,
        values,
    }
}
