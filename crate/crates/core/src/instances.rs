//! Ground-truth generators: clustered and grid-valued synthetic instances,
//! and preference models built from restaurant-like item attributes.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::matrix::{Matrix, TOL};
use crate::metric::{floyd_warshall_in_place, hemimetric_closure, DistanceMatrix};

/// Items with strictly more reviews than this are popular.
pub const POPULARITY_THRESHOLD: u32 = 25;

const EARTH_RADIUS_KM: f64 = 6371.0;

/// Balanced cluster labels `0..k` for `n` items in seeded random order.
fn balanced_assignment(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(rng);
    labels
}

/// Random `(r_in, k)`-clustered hemimetric and its cluster labels.
///
/// Intra-cluster weights are drawn from `[0, r_in]` and inter-cluster
/// weights from `[r_in, r]` before closure. Closure keeps both properties:
/// any path between clusters uses at least one inter-cluster edge.
pub fn gen_clustered(n: usize, k: usize, r: f64, r_in: f64, seed: u64) -> Result<(DistanceMatrix, Vec<usize>)> {
    if k < 1 || k > n {
        return Err(invalid(format!("cluster count must lie in [1, {n}], got {k}")));
    }
    if !(r.is_finite() && r > 0.0) || !(0.0..=r).contains(&r_in) {
        return Err(invalid(format!("need 0 <= r_in <= r with r > 0, got r_in={r_in}, r={r}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = balanced_assignment(n, k, &mut rng);
    let w = Matrix::from_fn(n, |i, j| {
        if i == j {
            0.0
        } else if labels[i] == labels[j] {
            rng.gen::<f64>() * r_in
        } else {
            r_in + rng.gen::<f64>() * (r - r_in)
        }
    });
    Ok((hemimetric_closure(&w, r)?, labels))
}

/// True when intra-cluster entries are at most `r_in` and inter-cluster
/// entries at least `r_in`.
pub fn is_clustered(d: &DistanceMatrix, labels: &[usize], r_in: f64) -> bool {
    d.entries().off_diagonal_pairs().all(|(i, j)| {
        let v = d.get(i, j);
        if labels[i] == labels[j] {
            v <= r_in + TOL
        } else {
            v >= r_in - TOL
        }
    })
}

/// Hemimetric on the grid `{step, 2 step, ..., r}` between `k` clusters,
/// lifted to `n` items with zero distance inside each cluster.
pub fn gen_quantized_clustered(n: usize, k: usize, r: f64, step: f64, seed: u64) -> Result<(DistanceMatrix, Vec<usize>)> {
    if k < 1 || k > n {
        return Err(invalid(format!("cluster count must lie in [1, {n}], got {k}")));
    }
    if !(step > 0.0 && r > 0.0) {
        return Err(invalid("grid step and r must be positive"));
    }
    let levels = (r / step).round();
    if (levels * step - r).abs() > TOL || levels < 1.0 {
        return Err(invalid(format!("r = {r} is not a multiple of the grid step {step}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels = balanced_assignment(n, k, &mut rng);
    let top = levels as u64;
    // Integer-valued closure stays exact; scale afterwards.
    let mut units = Matrix::from_fn(k, |a, b| if a == b { 0.0 } else { rng.gen_range(1..=top) as f64 });
    floyd_warshall_in_place(&mut units);
    let entries = Matrix::from_fn(n, |i, j| units[(labels[i], labels[j])] * step);
    Ok((DistanceMatrix::new(entries, r)?, labels))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Cuisine {
    Mexican,
    Thai,
    Chinese,
    Mediterranean,
    Italian,
}

impl Cuisine {
    pub const ALL: [Cuisine; 5] = [
        Cuisine::Mexican,
        Cuisine::Thai,
        Cuisine::Chinese,
        Cuisine::Mediterranean,
        Cuisine::Italian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Cuisine::Mexican => "Mexican",
            Cuisine::Thai => "Thai",
            Cuisine::Chinese => "Chinese",
            Cuisine::Mediterranean => "Mediterranean",
            Cuisine::Italian => "Italian",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name().eq_ignore_ascii_case(s.trim()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Popularity {
    High,
    Low,
}

impl Popularity {
    pub fn from_reviews(review_count: u32) -> Self {
        if review_count > POPULARITY_THRESHOLD {
            Popularity::High
        } else {
            Popularity::Low
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ItemRecord {
    pub id: String,
    pub cuisine: Cuisine,
    pub review_count: u32,
    pub lat: f64,
    pub lon: f64,
}

impl ItemRecord {
    pub fn popularity(&self) -> Popularity {
        Popularity::from_reviews(self.review_count)
    }
}

/// Mixing weights of the attribute-based preference model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttributeWeights {
    pub cuisine: f64,
    pub review: f64,
    pub geo: f64,
    pub random: f64,
}

impl AttributeWeights {
    pub fn new(cuisine: f64, review: f64, geo: f64, random: f64) -> Result<Self> {
        let w = [cuisine, review, geo, random];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(invalid("attribute weights must be nonnegative"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("attribute weights must sum to 1, got {sum}")));
        }
        Ok(Self { cuisine, review, geo, random })
    }

    /// Cuisine-dominated model: clusters by cuisine with small random
    /// within-cluster variation.
    pub fn cuisine_clustered() -> Self {
        Self {
            cuisine: 0.9,
            review: 0.0,
            geo: 0.0,
            random: 0.1,
        }
    }

    /// Mixed model with popularity and location terms.
    pub fn mixed() -> Self {
        Self {
            cuisine: 0.5,
            review: 0.2,
            geo: 0.2,
            random: 0.1,
        }
    }
}

/// Great-circle distance in kilometres (haversine).
pub fn great_circle_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> Result<f64> {
    for (lat, lon) in [(lat1, lon1), (lat2, lon2)] {
        if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
            return Err(invalid(format!("coordinates ({lat}, {lon}) out of range")));
        }
    }
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    Ok(2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin())
}

/// Closure of the weighted attribute dissimilarity
/// `w_c r [cuisines differ] + w_r r [i popular, j not] + w_g geo + w_u U(0, r)`,
/// where `geo` is the great-circle distance rescaled to `[0, r]` over all
/// pairs.
pub fn gen_attribute_instance(items: &[ItemRecord], weights: &AttributeWeights, r: f64, seed: u64) -> Result<DistanceMatrix> {
    let n = items.len();
    if n < 2 {
        return Err(invalid("need at least two items"));
    }
    AttributeWeights::new(weights.cuisine, weights.review, weights.geo, weights.random)?;
    let mut geo = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                geo[(i, j)] = great_circle_km(items[i].lat, items[i].lon, items[j].lat, items[j].lon)?;
            }
        }
    }
    let pairs = || (0..n).flat_map(move |i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)));
    let (lo, hi) = pairs().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (i, j)| {
        (lo.min(geo[(i, j)]), hi.max(geo[(i, j)]))
    });
    let span = hi - lo;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let w = Matrix::from_fn(n, |i, j| {
        if i == j {
            return 0.0;
        }
        let cuisine = if items[i].cuisine != items[j].cuisine { r } else { 0.0 };
        let review = if items[i].popularity() == Popularity::High && items[j].popularity() == Popularity::Low {
            r
        } else {
            0.0
        };
        let g = if span > 0.0 { r * (geo[(i, j)] - lo) / span } else { 0.0 };
        let noise = rng.gen::<f64>() * r;
        weights.cuisine * cuisine + weights.review * review + weights.geo * g + weights.random * noise
    });
    hemimetric_closure(&w, r)
}

const CUISINE_COUNTS: [(Cuisine, usize); 5] = [
    (Cuisine::Mexican, 50),
    (Cuisine::Thai, 26),
    (Cuisine::Chinese, 53),
    (Cuisine::Mediterranean, 75),
    (Cuisine::Italian, 86),
];
const POPULAR_COUNT: usize = 166;

/// 290 synthetic restaurants: fixed cuisine counts, 166 popular, random
/// locations in a city-sized box, in shuffled order.
pub fn gen_synthetic_restaurants(seed: u64) -> Vec<ItemRecord> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cuisines: Vec<Cuisine> = CUISINE_COUNTS
        .iter()
        .flat_map(|&(c, count)| std::iter::repeat_n(c, count))
        .collect();
    let total = cuisines.len();
    let mut popular: Vec<bool> = (0..total).map(|i| i < POPULAR_COUNT).collect();
    popular.shuffle(&mut rng);
    cuisines.shuffle(&mut rng);
    (0..total)
        .map(|idx| {
            let review_count = if popular[idx] {
                rng.gen_range(POPULARITY_THRESHOLD + 1..=500)
            } else {
                rng.gen_range(0..=POPULARITY_THRESHOLD)
            };
            ItemRecord {
                id: format!("r{idx:03}"),
                cuisine: cuisines[idx],
                review_count,
                lat: rng.gen_range(40.36..=40.50),
                lon: rng.gen_range(-80.10..=-79.85),
            }
        })
        .collect()
}

const ITEM_HEADER: [&str; 5] = ["id", "cuisine", "review_count", "lat", "lon"];

pub fn save_items_csv(path: impl AsRef<Path>, items: &[ItemRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path.as_ref())?;
    w.write_record(ITEM_HEADER)?;
    for it in items {
        w.write_record([
            it.id.clone(),
            it.cuisine.name().to_string(),
            it.review_count.to_string(),
            format!("{}", it.lat),
            format!("{}", it.lon),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads items with header `id,cuisine,review_count,lat,lon`.
pub fn load_items_csv(path: impl AsRef<Path>) -> Result<Vec<ItemRecord>> {
    let path = path.as_ref();
    let text = fs::read(path)?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(&text[..]);
    let parse_err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ITEM_HEADER {
        return Err(parse_err(1, format!("expected header `{}`", ITEM_HEADER.join(","))));
    }
    let mut items = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |k: usize| record.get(k).unwrap_or("");
        let cuisine = Cuisine::parse(field(1)).ok_or_else(|| parse_err(line, format!("unknown cuisine `{}`", field(1))))?;
        let review_count = field(2)
            .parse::<u32>()
            .map_err(|e| parse_err(line, format!("bad review_count: {e}")))?;
        let lat = field(3).parse::<f64>().map_err(|e| parse_err(line, format!("bad lat: {e}")))?;
        let lon = field(4).parse::<f64>().map_err(|e| parse_err(line, format!("bad lon: {e}")))?;
        if !(-90.0..=90.0).contains(&lat) {
            return Err(parse_err(line, format!("lat {lat} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lon) {
            return Err(parse_err(line, format!("lon {lon} outside [-180, 180]")));
        }
        items.push(ItemRecord {
            id: field(0).to_string(),
            cuisine,
            review_count,
            lat,
            lon,
        });
    }
    Ok(items)
}
