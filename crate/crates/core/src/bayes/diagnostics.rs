//! Convergence and Monte Carlo error diagnostics for multiple chains.

use crate::error::BayesError;

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

fn check_chains(chains: &[Vec<f64>], min_len: usize) -> Result<usize, BayesError> {
    if chains.len() < 2 {
        return Err(BayesError::UndefinedDiagnostic(format!("need at least 2 chains, got {}", chains.len())));
    }
    let n = chains[0].len();
    if chains.iter().any(|c| c.len() != n) {
        return Err(BayesError::UndefinedDiagnostic("chains have unequal lengths".into()));
    }
    if n < min_len {
        return Err(BayesError::UndefinedDiagnostic(format!("chains of length {n} are shorter than {min_len}")));
    }
    Ok(n)
}

/// Classic potential scale reduction from between- and within-chain
/// variances, without splitting.
pub fn potential_scale_reduction(chains: &[Vec<f64>]) -> Result<f64, BayesError> {
    let n = check_chains(chains, 2)? as f64;
    let w = chains.iter().map(|c| sample_var(c)).sum::<f64>() / chains.len() as f64;
    if w <= 0.0 || !w.is_finite() {
        return Err(BayesError::UndefinedDiagnostic("within-chain variance is zero".into()));
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let b = n * sample_var(&means);
    let var_plus = (n - 1.0) / n * w + b / n;
    Ok((var_plus / w).sqrt())
}

/// Split-R̂: each chain is halved (dropping the middle draw of odd-length
/// chains) and the classic statistic is computed over the halves.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64, BayesError> {
    let n = check_chains(chains, 10)?;
    let half = n / 2;
    let split: Vec<Vec<f64>> = chains.iter().flat_map(|c| [c[..half].to_vec(), c[n - half..].to_vec()]).collect();
    potential_scale_reduction(&split)
}

/// Effective sample size over all chains, using the multi-chain
/// autocorrelation estimate truncated by Geyer's initial monotone
/// sequence.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> Result<f64, BayesError> {
    let n = check_chains(chains, 4)?;
    let m = chains.len() as f64;
    let nf = n as f64;
    let centred: Vec<Vec<f64>> = chains
        .iter()
        .map(|c| {
            let mu = mean(c);
            c.iter().map(|x| x - mu).collect()
        })
        .collect();
    // mean over chains of the biased lag-t autocovariance
    let acov = |t: usize| {
        centred.iter().map(|d| d[..n - t].iter().zip(&d[t..]).map(|(a, b)| a * b).sum::<f64>() / nf).sum::<f64>() / m
    };
    let w = acov(0) * nf / (nf - 1.0);
    if w <= 0.0 || !w.is_finite() {
        return Err(BayesError::UndefinedDiagnostic("within-chain variance is zero".into()));
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let var_plus = (nf - 1.0) / nf * w + sample_var(&means);
    let rho = |t: usize| 1.0 - (w - acov(t)) / var_plus;

    let mut sum_pairs = 0.0;
    let mut prev_pair = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let mut pair = rho(t) + rho(t + 1);
        if pair < 0.0 {
            break;
        }
        pair = pair.min(prev_pair);
        sum_pairs += pair;
        prev_pair = pair;
        t += 2;
    }
    let tau = (-1.0 + 2.0 * sum_pairs).max(1.0 / (m * nf).log10().max(1.0));
    Ok(m * nf / tau)
}

/// Monte Carlo standard error of the pooled mean.
pub fn mcse_mean(chains: &[Vec<f64>]) -> Result<f64, BayesError> {
    let ess = effective_sample_size(chains)?;
    let pooled: Vec<f64> = chains.iter().flatten().copied().collect();
    Ok((sample_var(&pooled) / ess).sqrt())
}
