/// Perfect matching of a bipartite graph with `adj.len()` left vertices and as
/// many right vertices, by Kuhn's augmenting-path algorithm. Returns
/// `left -> right` or `None` if no perfect matching exists.
pub fn perfect_matching(adj: &[Vec<usize>]) -> Option<Vec<usize>> {
    let n = adj.len();
    let mut right_to_left: Vec<Option<usize>> = vec![None; n];
    let mut visited = vec![false; n];
    for left in 0..n {
        visited.iter_mut().for_each(|v| *v = false);
        if !augment(left, adj, &mut visited, &mut right_to_left) {
            return None;
        }
    }
    let mut left_to_right = vec![0; n];
    for (r, l) in right_to_left.iter().enumerate() {
        left_to_right[l.expect("perfect matching covers every vertex")] = r;
    }
    Some(left_to_right)
}

fn augment(
    left: usize,
    adj: &[Vec<usize>],
    visited: &mut [bool],
    right_to_left: &mut [Option<usize>],
) -> bool {
    for &r in &adj[left] {
        if visited[r] {
            continue;
        }
        visited[r] = true;
        let free = match right_to_left[r] {
            None => true,
            Some(other) => augment(other, adj, visited, right_to_left),
        };
        if free {
            right_to_left[r] = Some(left);
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_matching_requiring_augmentation() {
        // greedy 0->0 must be undone for 1, whose only edge is 0
        let adj = vec![vec![0, 1], vec![0], vec![1, 2]];
        let m = perfect_matching(&adj).unwrap();
        assert_eq!(m[1], 0);
        assert_eq!(m[0], 1);
        assert_eq!(m[2], 2);
    }

    #[test]
    fn reports_missing_matching() {
        assert!(perfect_matching(&[vec![0], vec![0]]).is_none());
        assert_eq!(perfect_matching(&[]), Some(vec![]));
    }
}
