//! Balanced k-means of phase shifts mapped to the unit circle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::num::{wrap_cycles, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState<T: Real> {
    /// `[cos 2 pi beta, sin 2 pi beta]`, sorted by phase.
    pub points: Vec<[T; 2]>,
    /// Phase of each point, same order as `points`.
    pub phases: Vec<T>,
    pub assignment: Vec<usize>,
    /// Mean vector of each cluster; only its direction carries the phase.
    pub centroids: Vec<[T; 2]>,
    /// Objective after initialisation and after every sweep.
    pub objective_history: Vec<T>,
}

impl<T: Real> ClusterState<T> {
    pub fn sizes(&self) -> Vec<usize> {
        let mut out = vec![0; self.centroids.len()];
        for &a in &self.assignment {
            out[a] += 1;
        }
        out
    }

    pub fn objective(&self) -> T {
        objective(&self.points, &self.assignment, &self.centroids)
    }

    /// Cluster heads as phase shifts.
    pub fn head_phases(&self) -> Result<Vec<T>> {
        self.centroids.iter().map(|c| centroid_to_phase(*c)).collect()
    }
}

/// `atan2(y, x) / 2 pi`, wrapped to `[-1/2, 1/2)`.
pub fn centroid_to_phase<T: Real>(c: [T; 2]) -> Result<T> {
    if c[0] == T::zero() && c[1] == T::zero() {
        return Err(Error::UndefinedDirection);
    }
    Ok(wrap_cycles(c[1].atan2(c[0]) / T::two_pi()))
}

fn dist2<T: Real>(a: &[T; 2], b: &[T; 2]) -> T {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy
}

fn objective<T: Real>(points: &[[T; 2]], assignment: &[usize], centroids: &[[T; 2]]) -> T {
    points
        .iter()
        .zip(assignment)
        .fold(T::zero(), |acc, (p, &k)| acc + dist2(p, &centroids[k]))
}

fn means<T: Real>(points: &[[T; 2]], assignment: &[usize], s: usize, prev: &[[T; 2]]) -> Vec<[T; 2]> {
    let mut acc = vec![[T::zero(); 2]; s];
    let mut count = vec![0usize; s];
    for (p, &k) in points.iter().zip(assignment) {
        acc[k][0] += p[0];
        acc[k][1] += p[1];
        count[k] += 1;
    }
    (0..s)
        .map(|k| {
            if count[k] == 0 {
                prev[k]
            } else {
                let c = T::lit(count[k] as f64);
                [acc[k][0] / c, acc[k][1] / c]
            }
        })
        .collect()
}

/// k-means++ seeding; the draw walks the cumulative weights in point
/// order, so ties fall to the lowest index.
fn kmeanspp<T: Real, R: Rng + ?Sized>(points: &[[T; 2]], s: usize, rng: &mut R) -> Vec<[T; 2]> {
    let m = points.len();
    let mut centroids = Vec::with_capacity(s);
    centroids.push(points[rng.random_range(0..m)]);
    while centroids.len() < s {
        let d: Vec<f64> = points
            .iter()
            .map(|p| centroids.iter().map(|c| dist2(p, c)).fold(T::max_value().unwrap_or_else(T::one), |a, b| a.min(b)).as_f64())
            .collect();
        let total: f64 = d.iter().sum();
        let pick = if total > 0.0 {
            let u = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut idx = m - 1;
            for (i, w) in d.iter().enumerate() {
                acc += w;
                if u < acc && *w > 0.0 {
                    idx = i;
                    break;
                }
            }
            idx
        } else {
            // every point coincides with a centroid already
            centroids.len() % m
        };
        centroids.push(points[pick]);
    }
    centroids
}

/// Greedy cost-sorted fill: pairs `(point, cluster)` are visited by
/// increasing distance and accepted while the cluster has room. Sizes end
/// up at `q` or `q + 1` with exactly `M mod S` clusters at `q + 1`.
fn balanced_assign<T: Real>(points: &[[T; 2]], centroids: &[[T; 2]]) -> Vec<usize> {
    let m = points.len();
    let s = centroids.len();
    let q = m / s;
    let rem = m % s;
    let mut pairs: Vec<(T, usize, usize)> = Vec::with_capacity(m * s);
    for (i, p) in points.iter().enumerate() {
        for (k, c) in centroids.iter().enumerate() {
            pairs.push((dist2(p, c), i, k));
        }
    }
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.1.cmp(&b.1))
            .then(a.2.cmp(&b.2))
    });
    let mut assignment = vec![usize::MAX; m];
    let mut size = vec![0usize; s];
    let mut big = 0usize;
    let mut left = m;
    for (_, i, k) in pairs {
        if left == 0 {
            break;
        }
        if assignment[i] != usize::MAX {
            continue;
        }
        let room = size[k] < q || (size[k] == q && big < rem);
        if !room {
            continue;
        }
        if size[k] == q {
            big += 1;
        }
        size[k] += 1;
        assignment[i] = k;
        left -= 1;
    }
    assignment
}

/// Improving exchanges: swap two points of different clusters, or move a
/// point from a `q + 1` cluster into a `q` cluster, while that lowers the
/// objective for the current centroids.
fn local_exchange<T: Real>(points: &[[T; 2]], assignment: &mut [usize], centroids: &[[T; 2]]) {
    let m = points.len();
    let s = centroids.len();
    let q = m / s;
    let mut size = vec![0usize; s];
    for &a in assignment.iter() {
        size[a] += 1;
    }
    let tol = T::lit(1e-14);
    for _ in 0..(m * m + 10) {
        let mut improved = false;
        for i in 0..m {
            for j in (i + 1)..m {
                let (a, b) = (assignment[i], assignment[j]);
                if a == b {
                    continue;
                }
                let now = dist2(&points[i], &centroids[a]) + dist2(&points[j], &centroids[b]);
                let swapped = dist2(&points[i], &centroids[b]) + dist2(&points[j], &centroids[a]);
                if swapped < now - tol {
                    assignment[i] = b;
                    assignment[j] = a;
                    improved = true;
                }
            }
            for k in 0..s {
                let a = assignment[i];
                if k == a || size[a] != q + 1 || size[k] != q {
                    continue;
                }
                if dist2(&points[i], &centroids[k]) < dist2(&points[i], &centroids[a]) - tol {
                    assignment[i] = k;
                    size[a] -= 1;
                    size[k] += 1;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
}

/// Balanced clustering with a fixed internal seed.
pub fn cluster_phases<T: Real>(phases: &[T], s: usize) -> Result<ClusterState<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x6b6d_6561_6e73);
    cluster_phases_with(phases, s, &mut rng)
}

/// Balanced clustering of phase shifts (cycles) into `s` clusters whose
/// sizes differ by at most one.
///
/// Points are sorted by phase before seeding, which makes the result
/// independent of input order for a given RNG state.
pub fn cluster_phases_with<T: Real, R: Rng + ?Sized>(phases: &[T], s: usize, rng: &mut R) -> Result<ClusterState<T>> {
    if s == 0 {
        return Err(Error::invalid("S must be positive"));
    }
    if phases.len() < s {
        return Err(Error::invalid(format!("{} points cannot fill {s} clusters", phases.len())));
    }
    let mut sorted: Vec<T> = phases.iter().map(|&b| wrap_cycles(b)).collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let points: Vec<[T; 2]> = sorted
        .iter()
        .map(|&b| {
            let w = T::two_pi() * b;
            [w.cos(), w.sin()]
        })
        .collect();

    let mut centroids = kmeanspp(&points, s, rng);
    let mut assignment = balanced_assign(&points, &centroids);
    local_exchange(&points, &mut assignment, &centroids);
    centroids = means(&points, &assignment, s, &centroids);
    let mut history = vec![objective(&points, &assignment, &centroids)];

    for _ in 0..100 {
        let mut next = balanced_assign(&points, &centroids);
        // the greedy fill is not optimal; never accept a worse assignment
        if objective(&points, &next, &centroids) > objective(&points, &assignment, &centroids) {
            next = assignment.clone();
        }
        local_exchange(&points, &mut next, &centroids);
        let new_centroids = means(&points, &next, s, &centroids);
        let obj = objective(&points, &next, &new_centroids);
        let stable = next == assignment;
        assignment = next;
        centroids = new_centroids;
        history.push(obj);
        if stable {
            break;
        }
    }
    Ok(ClusterState {
        points,
        phases: sorted,
        assignment,
        centroids,
        objective_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::cyclic_distance;

    #[test]
    fn centroid_to_phase_examples() {
        assert!((centroid_to_phase([0.0f64, 1.0]).unwrap() - 0.25).abs() < 1e-15);
        assert_eq!(centroid_to_phase([1.0f64, 0.0]).unwrap(), 0.0);
        assert_eq!(centroid_to_phase([-1.0f64, 0.0]).unwrap(), -0.5);
        assert_eq!(centroid_to_phase([0.0f64, 0.0]), Err(Error::UndefinedDirection));
    }

    #[test]
    fn two_obvious_pairs() {
        let st = cluster_phases(&[0.1f64, 0.1, 0.5, 0.5], 2).unwrap();
        let mut heads = st.head_phases().unwrap();
        heads.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert!(cyclic_distance(heads[0], -0.5) < 1e-12);
        assert!(cyclic_distance(heads[1], 0.1) < 1e-12);
        assert_eq!(st.sizes(), vec![2, 2]);
    }

    #[test]
    fn wrap_around_pair_averages_across_the_boundary() {
        let st = cluster_phases(&[0.49f64, -0.49], 1).unwrap();
        let h = st.head_phases().unwrap()[0];
        assert!(cyclic_distance(h, 0.5) < 1e-12, "{h}");
    }

    #[test]
    fn rejects_zero_clusters_and_short_input() {
        assert!(cluster_phases(&[0.1f64], 0).is_err());
        assert!(cluster_phases(&[0.1f64], 2).is_err());
    }

    #[test]
    fn one_point_per_cluster_is_identity() {
        let pts = [0.31f64, -0.2, 0.05];
        let st = cluster_phases(&pts, 3).unwrap();
        let mut heads = st.head_phases().unwrap();
        heads.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (h, p) in heads.iter().zip([-0.2, 0.05, 0.31]) {
            assert!((h - p).abs() < 1e-12);
        }
    }

    fn brute_force_best(points: &[[f64; 2]], s: usize, size: usize) -> f64 {
        // all balanced partitions, canonical labelling to skip permutations
        fn rec(i: usize, points: &[[f64; 2]], s: usize, size: usize, asg: &mut Vec<usize>, count: &mut Vec<usize>, best: &mut f64) {
            if i == points.len() {
                let c = means(points, asg, s, &vec![[0.0; 2]; s]);
                *best = best.min(objective(points, asg, &c));
                return;
            }
            let used = asg.iter().copied().max().map_or(0, |m| m + 1);
            for k in 0..s.min(used + 1) {
                if count[k] < size {
                    asg.push(k);
                    count[k] += 1;
                    rec(i + 1, points, s, size, asg, count, best);
                    count[k] -= 1;
                    asg.pop();
                }
            }
        }
        let mut best = f64::MAX;
        rec(0, points, s, size, &mut Vec::new(), &mut vec![0; s], &mut best);
        best
    }

    #[test]
    fn three_tight_groups_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let centres = [-0.4, 0.05, 0.3];
        let mut pts = Vec::new();
        for c in centres {
            for _ in 0..4 {
                pts.push(c + (rng.random::<f64>() - 0.5) * 0.04);
            }
        }
        let st = cluster_phases(&pts, 3).unwrap();
        assert_eq!(st.sizes(), vec![4, 4, 4]);
        let best = brute_force_best(&st.points, 3, 4);
        assert!((st.objective() - best).abs() < 1e-12, "{} vs {}", st.objective(), best);
    }

    #[test]
    fn objective_history_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..50 {
            let m = 5 + trial % 20;
            let s = 1 + trial % 4;
            let pts: Vec<f64> = (0..m).map(|_| rng.random::<f64>() - 0.5).collect();
            let st = cluster_phases_with(&pts, s, &mut rng).unwrap();
            for w in st.objective_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", st.objective_history);
            }
            let sizes = st.sizes();
            assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
            assert_eq!(sizes.iter().sum::<usize>(), m);
        }
    }

    #[test]
    fn input_order_does_not_matter() {
        let pts = [0.3f64, -0.1, 0.31, -0.12, 0.45, -0.45, 0.0, 0.02];
        let mut rev = pts;
        rev.reverse();
        let a = cluster_phases(&pts, 3).unwrap();
        let b = cluster_phases(&rev, 3).unwrap();
        assert_eq!(a, b);
    }
}
