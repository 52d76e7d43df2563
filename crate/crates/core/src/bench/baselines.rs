use rand::Rng;

use super::BenchError;
use crate::guidance::{Coords, ImportanceScores};
use crate::pddl::GroundTask;

/// Independent uniform scores in [0, 1).
pub fn baseline_random_scores(task: &GroundTask, rng: &mut impl Rng) -> ImportanceScores {
    ImportanceScores::objects_only((0..task.objects.len()).map(|_| rng.gen::<f64>()).collect())
}

/// 1 for goal objects and for the `k` non-goal objects nearest (Manhattan
/// distance, ties by index) to each goal object; 0 otherwise.
pub fn baseline_knn_scores(task: &GroundTask, coords: &Coords, k: usize) -> Result<ImportanceScores, BenchError> {
    let pos: Vec<(i64, i64)> = task
        .objects
        .iter()
        .map(|o| coords.get(&o.name).copied().ok_or_else(|| BenchError::MissingCoords(o.name.clone())))
        .collect::<Result<_, _>>()?;
    let goal = task.goal_objects();
    let mut scores = vec![0.0; task.objects.len()];
    let others: Vec<usize> = (0..scores.len()).filter(|i| goal.binary_search(i).is_err()).collect();
    for &g in &goal {
        scores[g] = 1.0;
        let dist = |i: usize| (pos[i].0 - pos[g].0).abs() + (pos[i].1 - pos[g].1).abs();
        let mut near = others.clone();
        near.sort_by_key(|&i| (dist(i), i));
        for &i in near.iter().take(k) {
            scores[i] = 1.0;
        }
    }
    Ok(ImportanceScores::objects_only(scores))
}
