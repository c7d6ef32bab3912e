//! Inter-annotator agreement on 1 to 3 quality ratings and paired
//! significance tests between two summarizers.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::stats::student_t_two_sided_p;
use crate::error::{Error, Result};

/// Ratings use a three-point scale.
pub const RATING_LEVELS: usize = 3;

/// One row per item, one column per rater; ratings are in `1..=3`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RatingsTable {
    pub items: Vec<String>,
    pub raters: Vec<String>,
    pub ratings: Vec<Vec<u8>>,
}

impl RatingsTable {
    pub fn new(items: Vec<String>, raters: Vec<String>, ratings: Vec<Vec<u8>>) -> Result<Self> {
        if ratings.len() != items.len() {
            return Err(Error::InvalidArgument(format!(
                "{} rating rows for {} items",
                ratings.len(),
                items.len()
            )));
        }
        for (item, row) in items.iter().zip(&ratings) {
            if row.len() != raters.len() {
                return Err(Error::InvalidArgument(format!(
                    "item `{item}` has {} ratings, expected {}",
                    row.len(),
                    raters.len()
                )));
            }
            if let Some(bad) = row.iter().find(|r| !(1..=RATING_LEVELS as u8).contains(r)) {
                return Err(Error::InvalidArgument(format!("item `{item}`: rating {bad} outside 1..=3")));
            }
        }
        Ok(RatingsTable { items, raters, ratings })
    }

    /// Mean rating per item across raters.
    pub fn item_means(&self) -> Vec<f64> {
        self.ratings
            .iter()
            .map(|row| row.iter().map(|&r| r as f64).sum::<f64>() / row.len().max(1) as f64)
            .collect()
    }
}

#[derive(Debug, Deserialize)]
struct RatingRow {
    item_id: String,
    rater_id: String,
    dimension: String,
    rating: u8,
}

/// Reads long-format ratings (`item_id,rater_id,dimension,rating`) into one
/// table per dimension. Every item must be rated by every rater exactly once.
pub fn read_ratings_csv(path: &Path) -> Result<BTreeMap<String, RatingsTable>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let mut reader = csv::Reader::from_path(path)?;
    let mut cells: BTreeMap<String, BTreeMap<String, BTreeMap<String, u8>>> = BTreeMap::new();
    for row in reader.deserialize() {
        let row: RatingRow = row?;
        let slot = cells
            .entry(row.dimension.trim().to_string())
            .or_default()
            .entry(row.item_id.trim().to_string())
            .or_default();
        if slot.insert(row.rater_id.trim().to_string(), row.rating).is_some() {
            return Err(Error::InvalidArgument(format!(
                "duplicate rating for item `{}` by rater `{}`",
                row.item_id, row.rater_id
            )));
        }
    }
    cells
        .into_iter()
        .map(|(dimension, by_item)| {
            let raters: Vec<String> = by_item
                .values()
                .flat_map(|r| r.keys().cloned())
                .collect::<std::collections::BTreeSet<_>>()
                .into_iter()
                .collect();
            let mut items = Vec::with_capacity(by_item.len());
            let mut ratings = Vec::with_capacity(by_item.len());
            for (item, by_rater) in by_item {
                let row = raters
                    .iter()
                    .map(|r| {
                        by_rater.get(r).copied().ok_or_else(|| {
                            Error::InvalidArgument(format!("{dimension}: item `{item}` lacks a rating from `{r}`"))
                        })
                    })
                    .collect::<Result<Vec<u8>>>()?;
                items.push(item);
                ratings.push(row);
            }
            Ok((dimension, RatingsTable::new(items, raters, ratings)?))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FleissComponents {
    /// Mean observed agreement.
    pub p_bar: f64,
    /// Chance agreement from pooled category proportions.
    pub p_e: f64,
    pub kappa: f64,
}

pub fn fleiss_components(table: &RatingsTable) -> Result<FleissComponents> {
    let n_items = table.ratings.len();
    let n_raters = table.raters.len();
    if n_items == 0 || n_raters < 2 {
        return Err(Error::Degenerate("Fleiss kappa needs at least one item and two raters".into()));
    }
    let n = n_raters as f64;
    let mut pooled = [0usize; RATING_LEVELS];
    let mut p_sum = 0.0;
    for row in &table.ratings {
        let mut counts = [0usize; RATING_LEVELS];
        for &r in row {
            counts[(r - 1) as usize] += 1;
        }
        let agree: usize = counts.iter().map(|&c| c * c.saturating_sub(1)).sum();
        p_sum += agree as f64 / (n * (n - 1.0));
        for (p, c) in pooled.iter_mut().zip(counts) {
            *p += c;
        }
    }
    let total = (n_items * n_raters) as f64;
    let p_bar = p_sum / n_items as f64;
    let p_e: f64 = pooled.iter().map(|&c| (c as f64 / total).powi(2)).sum();
    if (1.0 - p_e).abs() < 1e-12 {
        return Err(Error::Degenerate("every rating falls in one category".into()));
    }
    Ok(FleissComponents {
        p_bar,
        p_e,
        kappa: (p_bar - p_e) / (1.0 - p_e),
    })
}

pub fn fleiss_kappa(table: &RatingsTable) -> Result<f64> {
    fleiss_components(table).map(|c| c.kappa)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTest {
    pub t: f64,
    pub p_value: f64,
    pub df: usize,
    /// Mean of `b - a`.
    pub mean_difference: f64,
}

/// Paired two-sided t-test on `b - a`.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() != b.len() {
        return Err(Error::InvalidArgument(format!("paired samples differ in length: {} vs {}", a.len(), b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Degenerate("paired t-test needs at least two pairs".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| y - x).collect();
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    if var <= 0.0 {
        return Err(Error::Degenerate("paired differences have zero variance".into()));
    }
    let t = mean / (var / n as f64).sqrt();
    let df = n - 1;
    Ok(TTest {
        t,
        p_value: student_t_two_sided_p(t, df as f64),
        df,
        mean_difference: mean,
    })
}

/// Paired test on per-item mean ratings; both tables must list the same
/// items in the same order.
pub fn compare_tables(a: &RatingsTable, b: &RatingsTable) -> Result<TTest> {
    if a.items != b.items {
        return Err(Error::IdMismatch("rating tables cover different items".into()));
    }
    paired_t_test(&a.item_means(), &b.item_means())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[u8]]) -> RatingsTable {
        let raters = (0..rows[0].len()).map(|i| format!("r{i}")).collect();
        let items = (0..rows.len()).map(|i| format!("i{i}")).collect();
        RatingsTable::new(items, raters, rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn perfect_agreement_is_one() {
        let t = table(&[&[1, 1, 1], &[2, 2, 2], &[3, 3, 3]]);
        assert!((fleiss_kappa(&t).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_category_is_degenerate() {
        let t = table(&[&[2, 2], &[2, 2]]);
        assert!(matches!(fleiss_kappa(&t), Err(Error::Degenerate(_))));
    }

    #[test]
    fn hand_computed_kappa() {
        // rows: (1,1,2) (2,2,2) (3,1,3) (1,2,3)
        // P_i: 1/3, 1, 1/3, 0 -> P̄ = 5/12
        // pooled: 1 x4, 2 x5, 3 x3 of 12 -> Pe = (16+25+9)/144 = 50/144
        let t = table(&[&[1, 1, 2], &[2, 2, 2], &[3, 1, 3], &[1, 2, 3]]);
        let c = fleiss_components(&t).unwrap();
        assert!((c.p_bar - 5.0 / 12.0).abs() < 1e-12);
        assert!((c.p_e - 50.0 / 144.0).abs() < 1e-12);
        let expected = (5.0 / 12.0 - 50.0 / 144.0) / (1.0 - 50.0 / 144.0);
        assert!((c.kappa - expected).abs() < 1e-12);
    }

    #[test]
    fn rejects_out_of_scale() {
        assert!(RatingsTable::new(vec!["a".into()], vec!["r".into()], vec![vec![4]]).is_err());
    }

    #[test]
    fn t_test_zero_variance() {
        assert!(matches!(
            paired_t_test(&[1.0, 2.0, 3.0], &[2.0, 3.0, 4.0]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn t_test_hand_value() {
        // diffs 1, 2, 3: mean 2, sd 1, t = 2 / (1/sqrt 3) = 2 sqrt 3
        let r = paired_t_test(&[0.0, 0.0, 0.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!((r.t - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(r.df, 2);
        // df = 2 closed form: p = 1 - t / sqrt(2 + t^2)
        let expected = 1.0 - r.t / (2.0 + r.t * r.t).sqrt();
        assert!((r.p_value - expected).abs() < 1e-10);
    }

    #[test]
    fn csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        std::fs::write(
            &path,
            "item_id,rater_id,dimension,rating\n\
             a,x,coherence,1\na,y,coherence,2\nb,x,coherence,3\nb,y,coherence,3\n\
             a,x,relevance,2\na,y,relevance,2\nb,x,relevance,1\nb,y,relevance,1\n",
        )
        .unwrap();
        let tables = read_ratings_csv(&path).unwrap();
        assert_eq!(tables.len(), 2);
        assert_eq!(tables["coherence"].ratings, vec![vec![1, 2], vec![3, 3]]);
        std::fs::write(&path, "item_id,rater_id,dimension,rating\na,x,c,1\na,y,c,2\nb,x,c,3\n").unwrap();
        assert!(read_ratings_csv(&path).is_err());
    }
}
