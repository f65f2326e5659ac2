use crate::{Error, Result};

/// Cohen's kappa with chance agreement from the product of the two raters'
/// marginals. When both raters use a single, identical label the chance
/// agreement is 1 and kappa is defined as 1.
pub fn cohen_kappa<T: PartialEq + Copy>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::validation(format!(
            "label sequences differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::validation("label sequences are empty"));
    }
    let n = a.len() as f64;

    let mut labels: Vec<T> = Vec::new();
    for x in a.iter().chain(b) {
        if !labels.contains(x) {
            labels.push(*x);
        }
    }
    if labels.len() == 1 {
        return Ok(1.0);
    }

    let observed = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64 / n;
    let chance: f64 = labels
        .iter()
        .map(|l| {
            let pa = a.iter().filter(|x| *x == l).count() as f64 / n;
            let pb = b.iter().filter(|x| *x == l).count() as f64 / n;
            pa * pb
        })
        .sum();
    Ok((observed - chance) / (1.0 - chance))
}

/// Mean kappa over all unordered pairs of assessors; `columns[i]` holds
/// assessor `i`'s labels.
pub fn average_pairwise_kappa<T: PartialEq + Copy>(columns: &[Vec<T>]) -> Result<f64> {
    if columns.len() < 2 {
        return Err(Error::validation("need at least two assessors"));
    }
    let mut sum = 0.0;
    let mut pairs = 0usize;
    for i in 0..columns.len() {
        for j in i + 1..columns.len() {
            sum += cohen_kappa(&columns[i], &columns[j])?;
            pairs += 1;
        }
    }
    Ok(sum / pairs as f64)
}
