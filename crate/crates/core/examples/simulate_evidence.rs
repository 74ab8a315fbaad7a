//! Generates the synthetic evidence for the case study (partner-count
//! registry, binomial surveys and the four-year calibration series) and
//! writes it as CSV.

use anyhow::Result;
use chronic_sti::datasim::{simulate_evidence, SimRecipe};
use chronic_sti::io;
use chronic_sti::model::{HealthState, Sex, Stratum};

fn main() -> Result<()> {
    let recipe = SimRecipe::case_study(42);
    let evidence = simulate_evidence(&recipe)?;

    println!("partner-count registry:");
    for st in Stratum::ALL {
        let xs = evidence.partner_counts_for(st);
        let mean = xs.iter().sum::<u64>() as f64 / xs.len() as f64;
        println!("  {:<3} n = {:>4}  mean partners/year = {mean:.3}", st.code(), xs.len());
    }

    println!("binomial evidence (events / trials):");
    for (id, (r, n)) in &evidence.binomial {
        println!("  {:<10} {r:>5} / {n:<5} = {:.4}", id.name(), *r as f64 / *n as f64);
    }

    println!("calibration series (observed counts):");
    for sex in [Sex::Male, Sex::Female] {
        for year in 1..=4 {
            let row: Vec<String> = [HealthState::Infected, HealthState::Asymptomatic, HealthState::Morbid]
                .iter()
                .map(|hs| format!("{}={:.0}", hs.name(), evidence.calibration.get(sex, year, *hs)))
                .collect();
            println!("  {:<6} year {year}: {}", sex.name(), row.join("  "));
        }
    }

    let dir = std::env::temp_dir().join("chronic-sti-evidence");
    std::fs::create_dir_all(&dir)?;
    for path in io::write_evidence(&dir, &evidence)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}
