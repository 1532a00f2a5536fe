//! Ratings data: the ML-100K `u.data` / `u.item` files and a synthetic
//! stand-in with known ground truth.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// The 18 ML-100K genres, in `u.item` flag order (after the leading
/// "unknown" flag).
pub const GENRES: [&str; 18] = [
    "Action",
    "Adventure",
    "Animation",
    "Children's",
    "Comedy",
    "Crime",
    "Documentary",
    "Drama",
    "Fantasy",
    "Film-Noir",
    "Horror",
    "Musical",
    "Mystery",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "War",
    "Western",
];

/// Rating marginals of the full ML-100K file, used to seed synthetic items.
pub const ML100K_RATING_MARGINALS: [f64; 5] = [0.06110, 0.11370, 0.27145, 0.34174, 0.21201];

const FLAG_FIELDS: usize = 19;

/// Defaults of the synthetic stand-in: 18 genres of 40 items, 60 ratings per
/// item (about 6 survive a 10% subsample), Dirichlet concentration 4.
pub const SYNTHETIC_ITEMS_PER_GENRE: usize = 40;
pub const SYNTHETIC_RATINGS_PER_ITEM: usize = 60;
pub const SYNTHETIC_CONCENTRATION: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rating {
    pub user: u32,
    pub item: u32,
    pub rating: u8,
    pub timestamp: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingsDataset {
    pub ratings: Vec<Rating>,
    /// Genre indices into `genre_names` for each item.
    pub item_genres: BTreeMap<u32, Vec<usize>>,
    pub genre_names: Vec<String>,
    /// Ratings take values `1..=levels`.
    pub levels: usize,
}

impl RatingsDataset {
    pub fn genre_index(&self, genre: &str) -> Option<usize> {
        self.genre_names
            .iter()
            .position(|g| g.eq_ignore_ascii_case(genre))
            .or_else(|| {
                genre
                    .parse()
                    .ok()
                    .filter(|&i: &usize| i < self.genre_names.len())
            })
    }

    /// Items of a genre that have at least one rating, in id order.
    pub fn rated_items_in_genre(&self, genre: usize) -> Vec<u32> {
        let rated: std::collections::BTreeSet<u32> = self.ratings.iter().map(|r| r.item).collect();
        self.item_genres
            .iter()
            .filter(|(item, genres)| genres.contains(&genre) && rated.contains(item))
            .map(|(&item, _)| item)
            .collect()
    }

    /// Empirical frequency of each rating level over the whole dataset.
    pub fn rating_marginals(&self) -> Vec<f64> {
        let mut counts = vec![0u64; self.levels];
        for r in &self.ratings {
            counts[(r.rating - 1) as usize] += 1;
        }
        let total = self.ratings.len().max(1) as f64;
        counts.into_iter().map(|c| c as f64 / total).collect()
    }
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Parses `u.data`: whitespace-separated `user item rating timestamp`.
pub fn parse_ratings(text: &str, path: &Path, levels: usize) -> Result<Vec<Rating>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(parse_error(
                path,
                lineno,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let num = |i: usize, what: &str| {
            fields[i]
                .parse::<u64>()
                .map_err(|e| parse_error(path, lineno, format!("bad {what} `{}`: {e}", fields[i])))
        };
        let user = num(0, "user id")? as u32;
        let item = num(1, "item id")? as u32;
        let rating = num(2, "rating")?;
        if rating < 1 || rating > levels as u64 {
            return Err(parse_error(
                path,
                lineno,
                format!("rating {rating} outside 1..={levels}"),
            ));
        }
        let timestamp = num(3, "timestamp")?;
        out.push(Rating {
            user,
            item,
            rating: rating as u8,
            timestamp,
        });
    }
    if out.is_empty() {
        return Err(parse_error(path, 1, "no ratings"));
    }
    Ok(out)
}

/// Parses `u.item`: `id|title|release|video release|url|19 genre flags`.
/// Flag 0 ("unknown") is dropped; flags 1..=18 map onto [`GENRES`].
pub fn parse_items(text: &str, path: &Path) -> Result<BTreeMap<u32, Vec<usize>>> {
    let mut out = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('|').collect();
        if fields.len() != 5 + FLAG_FIELDS {
            return Err(parse_error(
                path,
                lineno,
                format!(
                    "expected {} genre flags, found {}",
                    FLAG_FIELDS,
                    fields.len().saturating_sub(5)
                ),
            ));
        }
        let id = fields[0]
            .trim()
            .parse::<u32>()
            .map_err(|e| parse_error(path, lineno, format!("bad item id `{}`: {e}", fields[0])))?;
        let mut genres = Vec::new();
        for (g, flag) in fields[6..].iter().enumerate() {
            match flag.trim() {
                "1" => genres.push(g),
                "0" => {}
                other => {
                    return Err(parse_error(
                        path,
                        lineno,
                        format!("bad genre flag `{other}`"),
                    ));
                }
            }
        }
        out.insert(id, genres);
    }
    if out.is_empty() {
        return Err(parse_error(path, 1, "no items"));
    }
    Ok(out)
}

pub fn load_movielens(ratings_path: &Path, items_path: &Path) -> Result<RatingsDataset> {
    let ratings_text = fs::read(ratings_path)?;
    let ratings = parse_ratings(&String::from_utf8_lossy(&ratings_text), ratings_path, 5)?;
    // u.item is Latin-1; only ASCII fields are interpreted
    let items_text = fs::read(items_path)?;
    let item_genres = parse_items(&String::from_utf8_lossy(&items_text), items_path)?;
    Ok(RatingsDataset {
        ratings,
        item_genres,
        genre_names: GENRES.iter().map(|s| s.to_string()).collect(),
        levels: 5,
    })
}

/// Loads `u.data` and `u.item` from an ML-100K directory.
pub fn load_movielens_dir(dir: &Path) -> Result<RatingsDataset> {
    let ratings: PathBuf = dir.join("u.data");
    let items: PathBuf = dir.join("u.item");
    load_movielens(&ratings, &items)
}

/// A synthetic item: its true rating distribution and genre memberships.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticItem {
    pub params: Vec<f64>,
    pub genres: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub dataset: RatingsDataset,
    /// True mean rating `sum_r r p_r` per item id.
    pub true_merits: BTreeMap<u32, f64>,
}

/// Draws `ratings_per_item` i.i.d. ratings for every item (item ids start at
/// 1) from its true multinomial parameters.
pub fn synthesize_ratings(
    items: &[SyntheticItem],
    genre_names: &[String],
    ratings_per_item: usize,
    seed: u64,
) -> Result<SyntheticDataset> {
    let levels = items
        .first()
        .map(|i| i.params.len())
        .ok_or_else(|| Error::Dataset("no synthetic items".into()))?;
    let mut rng = seed::rng(seed);
    let mut ratings = Vec::with_capacity(items.len() * ratings_per_item);
    let mut item_genres = BTreeMap::new();
    let mut true_merits = BTreeMap::new();
    for (i, item) in items.iter().enumerate() {
        let id = i as u32 + 1;
        if item.params.len() != levels {
            return Err(Error::DimensionMismatch {
                context: "synthetic item parameters",
                expected: levels,
                found: item.params.len(),
            });
        }
        let total: f64 = item.params.iter().sum();
        if item.params.iter().any(|p| !(*p >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidDistribution(format!(
                "item {id} parameters are not a probability vector"
            )));
        }
        if let Some(&g) = item.genres.iter().find(|&&g| g >= genre_names.len()) {
            return Err(Error::Dataset(format!(
                "item {id} has unknown genre index {g}"
            )));
        }
        for _ in 0..ratings_per_item {
            let u: f64 = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut level = levels;
            for (r, p) in item.params.iter().enumerate() {
                acc += p;
                if u < acc {
                    level = r + 1;
                    break;
                }
            }
            ratings.push(Rating {
                user: rng.random_range(1..=943),
                item: id,
                rating: level as u8,
                timestamp: ratings.len() as u64,
            });
        }
        item_genres.insert(id, item.genres.clone());
        true_merits.insert(
            id,
            item.params
                .iter()
                .enumerate()
                .map(|(r, p)| (r + 1) as f64 * p)
                .sum(),
        );
    }
    Ok(SyntheticDataset {
        dataset: RatingsDataset {
            ratings,
            item_genres,
            genre_names: genre_names.to_vec(),
            levels,
        },
        true_merits,
    })
}

/// A desk-scale ML-100K stand-in: `items_per_genre` single-genre items for
/// each of the 18 genres, true parameters drawn around the ML-100K rating
/// marginals with Dirichlet concentration `concentration`.
pub fn synthetic_movielens(
    items_per_genre: usize,
    ratings_per_item: usize,
    concentration: f64,
    seed: u64,
) -> Result<SyntheticDataset> {
    if !(concentration > 0.0) {
        return Err(Error::param(
            "concentration",
            concentration,
            "must be positive",
        ));
    }
    let gammas: Vec<Gamma<f64>> = ML100K_RATING_MARGINALS
        .iter()
        .map(|p| Gamma::new(concentration * p, 1.0).expect("positive shape"))
        .collect();
    let mut rng = seed::rng_for(seed, 0);
    let mut items = Vec::with_capacity(GENRES.len() * items_per_genre);
    for g in 0..GENRES.len() {
        for _ in 0..items_per_genre {
            let draws: Vec<f64> = gammas
                .iter()
                .map(|d| d.sample(&mut rng).max(1e-300))
                .collect();
            let total: f64 = draws.iter().sum();
            items.push(SyntheticItem {
                params: draws.iter().map(|d| d / total).collect(),
                genres: vec![g],
            });
        }
    }
    let names: Vec<String> = GENRES.iter().map(|s| s.to_string()).collect();
    synthesize_ratings(&items, &names, ratings_per_item, seed::derive_seed(seed, 1))
}

/// [`synthetic_movielens`] with the default shape.
pub fn default_synthetic_movielens(seed: u64) -> Result<SyntheticDataset> {
    synthetic_movielens(
        SYNTHETIC_ITEMS_PER_GENRE,
        SYNTHETIC_RATINGS_PER_ITEM,
        SYNTHETIC_CONCENTRATION,
        seed,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_ratings_line() {
        let r = parse_ratings("196\t242\t3\t881250949\n", Path::new("u.data"), 5).unwrap();
        assert_eq!(
            r,
            vec![Rating {
                user: 196,
                item: 242,
                rating: 3,
                timestamp: 881250949
            }]
        );
    }

    #[test]
    fn rating_errors_carry_line_numbers() {
        let err = parse_ratings("1\t2\t3\t4\n1\t2\tx\t4\n", Path::new("u.data"), 5).unwrap_err();
        assert!(err.to_string().contains("u.data:2"), "{err}");
        assert!(parse_ratings("1\t2\t9\t4\n", Path::new("u.data"), 5).is_err());
        assert!(parse_ratings("", Path::new("u.data"), 5).is_err());
    }

    #[test]
    fn parses_item_genre_flags() {
        let line =
            "1|Toy Story (1995)|01-Jan-1995||http://x|0|0|0|1|1|1|0|0|0|0|0|0|0|0|0|0|0|0|0\n";
        let items = parse_items(line, Path::new("u.item")).unwrap();
        assert_eq!(items[&1], vec![2, 3, 4]);
        assert_eq!(GENRES[4], "Comedy");
        let short = "1|T|d||u|0|1\n";
        assert!(parse_items(short, Path::new("u.item")).is_err());
        assert!(parse_items("", Path::new("u.item")).is_err());
    }

    #[test]
    fn point_mass_items_always_rate_five() {
        let items = vec![SyntheticItem {
            params: vec![0.0, 0.0, 0.0, 0.0, 1.0],
            genres: vec![0],
        }];
        let d = synthesize_ratings(&items, &["x".to_string()], 200, 4).unwrap();
        assert!(d.dataset.ratings.iter().all(|r| r.rating == 5));
        assert_eq!(d.true_merits[&1], 5.0);
    }

    #[test]
    fn uniform_items_have_uniform_marginals() {
        let items = vec![SyntheticItem {
            params: vec![0.2; 5],
            genres: vec![0],
        }];
        let d = synthesize_ratings(&items, &["x".to_string()], 10_000, 8).unwrap();
        for p in d.dataset.rating_marginals() {
            assert!((p - 0.2).abs() < 0.02, "{p}");
        }
        assert!((d.true_merits[&1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn synthetic_movielens_shape() {
        let d = synthetic_movielens(40, 10, 4.0, 1).unwrap();
        assert_eq!(d.dataset.item_genres.len(), 720);
        let comedy = d.dataset.genre_index("comedy").unwrap();
        assert_eq!(d.dataset.rated_items_in_genre(comedy).len(), 40);
        assert_eq!(d.dataset.ratings.len(), 7200);
    }
}
