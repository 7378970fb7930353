//! Brute-force references for d-separation and conditional independence.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Random DAG on `n` nodes: edges only go from lower to higher index.
pub fn random_dag(rng: &mut ChaCha8Rng, n: usize, density: f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen::<f64>() < density {
                edges.push((i, j));
            }
        }
    }
    edges
}

fn descendants(n: usize, edges: &[(usize, usize)], v: usize) -> Vec<bool> {
    let mut seen = vec![false; n];
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        if seen[u] {
            continue;
        }
        seen[u] = true;
        stack.extend(edges.iter().filter(|e| e.0 == u).map(|e| e.1));
    }
    seen
}

/// d-separation by enumerating every simple path of the skeleton.
pub fn dsep_by_paths(n: usize, edges: &[(usize, usize)], xs: &[usize], ys: &[usize], zs: &[usize]) -> bool {
    let z = |v: usize| zs.contains(&v);
    let collider_open = |v: usize| {
        let d = descendants(n, edges, v);
        (0..n).any(|u| d[u] && z(u))
    };
    let adjacent = |u: usize| -> Vec<usize> {
        edges
            .iter()
            .filter_map(|&(a, b)| if a == u { Some(b) } else if b == u { Some(a) } else { None })
            .collect()
    };
    let arrow_into = |from: usize, to: usize| edges.contains(&(from, to));

    fn walk(
        path: &mut Vec<usize>,
        ys: &[usize],
        adjacent: &dyn Fn(usize) -> Vec<usize>,
        active: &dyn Fn(&[usize]) -> bool,
    ) -> bool {
        let last = *path.last().unwrap();
        if ys.contains(&last) && path.len() > 1 {
            return active(path);
        }
        for next in adjacent(last) {
            if path.contains(&next) {
                continue;
            }
            path.push(next);
            let hit = walk(path, ys, adjacent, active);
            path.pop();
            if hit {
                return true;
            }
        }
        false
    }

    let active = |p: &[usize]| {
        for k in 1..p.len() - 1 {
            let (a, v, b) = (p[k - 1], p[k], p[k + 1]);
            let collider = arrow_into(a, v) && arrow_into(b, v);
            if collider {
                if !collider_open(v) {
                    return false;
                }
            } else if z(v) {
                return false;
            }
        }
        true
    };
    for &x in xs {
        let mut path = vec![x];
        if walk(&mut path, ys, &adjacent, &active) {
            return false;
        }
    }
    true
}

/// Joint pmf of binary variables Markov to the DAG, with random
/// conditional tables; index bit `i` (most significant first) is node `i`.
pub fn markov_joint(rng: &mut ChaCha8Rng, n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let parents: Vec<Vec<usize>> = (0..n)
        .map(|v| edges.iter().filter(|e| e.1 == v).map(|e| e.0).collect())
        .collect();
    let cpts: Vec<Vec<f64>> = parents
        .iter()
        .map(|ps| (0..1usize << ps.len()).map(|_| rng.gen_range(0.05..0.95)).collect())
        .collect();
    (0..1usize << n)
        .map(|k| {
            let bit = |v: usize| (k >> (n - 1 - v)) & 1;
            (0..n)
                .map(|v| {
                    let pk = parents[v].iter().fold(0, |a, &p| a * 2 + bit(p));
                    let p1 = cpts[v][pk];
                    if bit(v) == 1 { p1 } else { 1.0 - p1 }
                })
                .product()
        })
        .collect()
}

/// `max |P(x,y,z) P(z) - P(x,z) P(y,z)|` over all cells.
pub fn ci_gap(joint: &[f64], n: usize, xs: &[usize], ys: &[usize], zs: &[usize]) -> f64 {
    let key = |k: usize, vs: &[usize]| vs.iter().fold(0, |a, &v| a * 2 + ((k >> (n - 1 - v)) & 1));
    let size = |vs: &[usize]| 1usize << vs.len();
    let (nx, ny, nz) = (size(xs), size(ys), size(zs));
    let mut pxyz = vec![0.0; nx * ny * nz];
    for (k, &p) in joint.iter().enumerate() {
        pxyz[(key(k, xs) * ny + key(k, ys)) * nz + key(k, zs)] += p;
    }
    let mut worst: f64 = 0.0;
    for z in 0..nz {
        let pz: f64 = (0..nx * ny).map(|xy| pxyz[xy * nz + z]).sum();
        for x in 0..nx {
            let pxz: f64 = (0..ny).map(|y| pxyz[(x * ny + y) * nz + z]).sum();
            for y in 0..ny {
                let pyz: f64 = (0..nx).map(|x2| pxyz[(x2 * ny + y) * nz + z]).sum();
                worst = worst.max((pxyz[(x * ny + y) * nz + z] * pz - pxz * pyz).abs());
            }
        }
    }
    worst
}

/// Three disjoint node sets with non-empty X and Y.
pub fn random_query(rng: &mut ChaCha8Rng, n: usize) -> (Vec<usize>, Vec<usize>, Vec<usize>) {
    loop {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut zs = Vec::new();
        for v in 0..n {
            match rng.gen_range(0..5) {
                0 => xs.push(v),
                1 => ys.push(v),
                2 => zs.push(v),
                _ => {}
            }
        }
        if !xs.is_empty() && !ys.is_empty() {
            return (xs, ys, zs);
        }
    }
}
