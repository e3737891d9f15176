//! Balanced factorial ANOVA with main effects and optional pairwise
//! interactions.

use std::collections::BTreeMap;

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// One response value with its level label for each factor.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub levels: Vec<String>,
    pub value: f64,
}

impl Observation {
    pub fn new<S: Into<String>>(levels: impl IntoIterator<Item = S>, value: f64) -> Self {
        Self {
            levels: levels.into_iter().map(Into::into).collect(),
            value,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaEffect {
    /// Factor name, or `"A:B"` for an interaction.
    pub name: String,
    pub sum_squares: f64,
    pub df: usize,
    pub mean_square: f64,
    pub f: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnovaResult {
    pub effects: Vec<AnovaEffect>,
    pub residual_sum_squares: f64,
    pub residual_df: usize,
    pub total_sum_squares: f64,
    pub grand_mean: f64,
}

impl AnovaResult {
    pub fn effect(&self, name: &str) -> Option<&AnovaEffect> {
        self.effects.iter().find(|e| e.name == name)
    }
}

struct Coded {
    /// Level names per factor, sorted.
    levels: Vec<Vec<String>>,
    /// Level index per observation per factor.
    codes: Vec<Vec<usize>>,
}

fn code(factors: &[&str], obs: &[Observation]) -> Result<Coded> {
    let k = factors.len();
    let mut sets: Vec<BTreeMap<&str, usize>> = vec![BTreeMap::new(); k];
    for (i, o) in obs.iter().enumerate() {
        if o.levels.len() != k {
            return Err(Error::Design(format!(
                "observation {i} has {} levels, expected {k}",
                o.levels.len()
            )));
        }
        if !o.value.is_finite() {
            return Err(Error::Design(format!("observation {i} is not finite")));
        }
        for (f, l) in o.levels.iter().enumerate() {
            sets[f].insert(l, 0);
        }
    }
    for (f, s) in sets.iter_mut().enumerate() {
        if s.len() < 2 {
            return Err(Error::Design(format!(
                "factor {} needs at least 2 levels, found {}",
                factors[f],
                s.len()
            )));
        }
        for (i, v) in s.values_mut().enumerate() {
            *v = i;
        }
    }
    let codes = obs
        .iter()
        .map(|o| o.levels.iter().enumerate().map(|(f, l)| sets[f][l.as_str()]).collect())
        .collect();
    let levels = sets
        .into_iter()
        .map(|s| s.into_keys().map(str::to_owned).collect())
        .collect();
    Ok(Coded { levels, codes })
}

/// Checks that every combination of levels has the same replicate count.
fn check_balanced(factors: &[&str], coded: &Coded) -> Result<usize> {
    let mut cells: BTreeMap<&[usize], usize> = BTreeMap::new();
    for c in &coded.codes {
        *cells.entry(c.as_slice()).or_default() += 1;
    }
    let expected: usize = coded.levels.iter().map(Vec::len).product();
    let reps = *cells.values().next().unwrap_or(&0);
    if cells.len() < expected {
        // name the first missing combination
        let mut idx = vec![0usize; factors.len()];
        loop {
            if !cells.contains_key(idx.as_slice()) {
                let names: Vec<String> = idx
                    .iter()
                    .enumerate()
                    .map(|(f, &l)| format!("{}={}", factors[f], coded.levels[f][l]))
                    .collect();
                return Err(Error::Design(format!("empty cell {}", names.join(", "))));
            }
            let mut f = factors.len() - 1;
            loop {
                idx[f] += 1;
                if idx[f] < coded.levels[f].len() {
                    break;
                }
                idx[f] = 0;
                f -= 1;
            }
        }
    }
    if cells.values().any(|&n| n != reps) {
        return Err(Error::Design("unbalanced design: replicate counts differ between cells".into()));
    }
    Ok(reps)
}

/// Means over groups defined by `key`.
fn group_means<K: Ord>(obs: &[Observation], coded: &Coded, key: impl Fn(&[usize]) -> K) -> BTreeMap<K, f64> {
    let mut acc: BTreeMap<K, (f64, usize)> = BTreeMap::new();
    for (o, c) in obs.iter().zip(&coded.codes) {
        let e = acc.entry(key(c)).or_default();
        e.0 += o.value;
        e.1 += 1;
    }
    acc.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect()
}

fn f_test(ms_effect: f64, ms_res: f64, df1: usize, df2: usize) -> Result<(f64, f64)> {
    if ms_effect == 0.0 {
        return Ok((0.0, 1.0));
    }
    if ms_res == 0.0 {
        return Ok((f64::INFINITY, 0.0));
    }
    let f = ms_effect / ms_res;
    let dist = FisherSnedecor::new(df1 as f64, df2 as f64)
        .map_err(|e| Error::Design(format!("F distribution: {e}")))?;
    Ok((f, dist.sf(f).clamp(0.0, 1.0)))
}

/// Balanced ANOVA over `factors`. Main effects are always fitted; with
/// `interactions` every pairwise interaction is fitted too. Higher-order
/// interactions fall into the residual.
pub fn factorial_anova(factors: &[&str], obs: &[Observation], interactions: bool) -> Result<AnovaResult> {
    if factors.is_empty() {
        return Err(Error::Design("no factors".into()));
    }
    let coded = code(factors, obs)?;
    check_balanced(factors, &coded)?;
    let n = obs.len();
    let grand = obs.iter().map(|o| o.value).sum::<f64>() / n as f64;

    let main: Vec<BTreeMap<usize, f64>> = (0..factors.len())
        .map(|f| group_means(obs, &coded, |c| c[f]))
        .collect();
    let mut pairs = Vec::new();
    if interactions {
        for a in 0..factors.len() {
            for b in a + 1..factors.len() {
                pairs.push((a, b, group_means(obs, &coded, |c| (c[a], c[b]))));
            }
        }
    }

    let main_effect = |f: usize, c: &[usize]| main[f][&c[f]] - grand;
    let pair_effect = |a: usize, b: usize, m: &BTreeMap<(usize, usize), f64>, c: &[usize]| {
        m[&(c[a], c[b])] - main[a][&c[a]] - main[b][&c[b]] + grand
    };

    let mut ss_main = vec![0.0; factors.len()];
    let mut ss_pair = vec![0.0; pairs.len()];
    let mut ss_res = 0.0;
    let mut ss_total = 0.0;
    for (o, c) in obs.iter().zip(&coded.codes) {
        let mut fitted = grand;
        for (f, ss) in ss_main.iter_mut().enumerate() {
            let e = main_effect(f, c);
            *ss += e * e;
            fitted += e;
        }
        for ((a, b, m), ss) in pairs.iter().zip(ss_pair.iter_mut()) {
            let e = pair_effect(*a, *b, m, c);
            *ss += e * e;
            fitted += e;
        }
        ss_res += (o.value - fitted).powi(2);
        ss_total += (o.value - grand).powi(2);
    }

    let df_main: Vec<usize> = coded.levels.iter().map(|l| l.len() - 1).collect();
    let df_pair: Vec<usize> = pairs.iter().map(|(a, b, _)| df_main[*a] * df_main[*b]).collect();
    let df_model: usize = df_main.iter().sum::<usize>() + df_pair.iter().sum::<usize>();
    if n <= df_model + 1 {
        return Err(Error::Design(format!(
            "no residual degrees of freedom ({n} observations, {df_model} model terms)"
        )));
    }
    let df_res = n - 1 - df_model;
    let ms_res = ss_res / df_res as f64;

    let mut effects = Vec::new();
    let terms = ss_main
        .iter()
        .zip(&df_main)
        .enumerate()
        .map(|(f, (&ss, &df))| (factors[f].to_string(), ss, df))
        .chain(
            pairs
                .iter()
                .zip(ss_pair.iter().zip(&df_pair))
                .map(|((a, b, _), (&ss, &df))| (format!("{}:{}", factors[*a], factors[*b]), ss, df)),
        );
    for (name, ss, df) in terms {
        let ms = ss / df as f64;
        let (f, p) = f_test(ms, ms_res, df, df_res)?;
        effects.push(AnovaEffect {
            name,
            sum_squares: ss,
            df,
            mean_square: ms,
            f,
            p_value: p,
            significant: p < SIGNIFICANCE_LEVEL,
        });
    }
    Ok(AnovaResult {
        effects,
        residual_sum_squares: ss_res,
        residual_df: df_res,
        total_sum_squares: ss_total,
        grand_mean: grand,
    })
}
