//! Vote screening (half-path double voting) and kernel-density aggregation.

use serde::{Deserialize, Serialize};

use crate::imaging::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    /// First vote `c`.
    pub position: Point2,
    /// Second vote cast from the half-path patch, when screening applies.
    pub half: Option<Point2>,
    pub valid: bool,
}

impl Candidate {
    /// Unscreened vote, valid by default.
    pub fn single(position: Point2) -> Self {
        Candidate {
            position,
            half: None,
            valid: true,
        }
    }

    pub fn with_half(position: Point2, half: Point2) -> Self {
        Candidate {
            position,
            half: Some(half),
            valid: true,
        }
    }

    /// Position that counts in aggregation: the half-path vote when present.
    pub fn vote(&self) -> Point2 {
        self.half.unwrap_or(self.position)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct VoteSet {
    pub candidates: Vec<Candidate>,
}

impl VoteSet {
    pub fn new(candidates: Vec<Candidate>) -> Self {
        VoteSet { candidates }
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.candidates.iter().filter(|c| c.valid).count()
    }

    /// Voting positions of valid candidates.
    pub fn valid_votes(&self) -> Vec<Point2> {
        self.candidates
            .iter()
            .filter(|c| c.valid)
            .map(Candidate::vote)
            .collect()
    }

    /// First votes of every candidate, ignoring screening.
    pub fn first_votes(&self) -> Vec<Point2> {
        self.candidates.iter().map(|c| c.position).collect()
    }
}

/// Keeps candidates whose two votes agree: `‖c_half − c‖ < threshold`.
/// Candidates without a half-path vote are rejected.
pub fn hpdv_filter(votes: &VoteSet, threshold: f64) -> VoteSet {
    VoteSet::new(
        votes
            .candidates
            .iter()
            .map(|c| Candidate {
                valid: c.half.is_some_and(|h| h.distance(c.position) < threshold),
                ..*c
            })
            .collect(),
    )
}

/// Isotropic Gaussian bandwidth: Silverman's rule for two dimensions on the
/// pooled per-axis variance, floored at 1 px.
pub fn silverman_bandwidth(points: &[Point2]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return 1.0;
    }
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;
    let var = points
        .iter()
        .map(|p| (p.x - mx).powi(2) + (p.y - my).powi(2))
        .sum::<f64>()
        / (2.0 * n);
    (var.sqrt() * n.powf(-1.0 / 6.0)).max(1.0)
}

/// The point of maximal Gaussian kernel density among `points`. Ties go to
/// the lexicographically smallest point, so the result does not depend on
/// input order.
pub fn density_mode(points: &[Point2]) -> Option<Point2> {
    if points.is_empty() {
        return None;
    }
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    let h = silverman_bandwidth(&sorted);
    let inv = 1.0 / (2.0 * h * h);
    let mut best = f64::NEG_INFINITY;
    let mut at = sorted[0];
    for p in &sorted {
        let density: f64 = sorted
            .iter()
            .map(|q| {
                let d2 = (p.x - q.x).powi(2) + (p.y - q.y).powi(2);
                (-d2 * inv).exp()
            })
            .sum();
        if density > best {
            best = density;
            at = *p;
        }
    }
    Some(at)
}

/// Kernel-density vote over the valid candidates; `None` when none is valid.
pub fn kde_vote(votes: &VoteSet) -> Option<Point2> {
    density_mode(&votes.valid_votes())
}

/// Root-mean-square distance of points from their centroid.
pub fn spread(points: &[Point2]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let my = points.iter().map(|p| p.y).sum::<f64>() / n;
    (points
        .iter()
        .map(|p| (p.x - mx).powi(2) + (p.y - my).powi(2))
        .sum::<f64>()
        / n)
        .sqrt()
}
