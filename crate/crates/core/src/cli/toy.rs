use std::path::PathBuf;

use clap::Args;

use super::{create_dir, write};
use crate::error::Result;
use crate::seq2seq::{LogRow, TimescaleSchedule};
use crate::toy::{run_toy, ToyConfig, ToyTask};

#[derive(Debug, Args)]
pub struct ToyArgs {
    /// `copy` or `reverse`.
    #[arg(long, default_value = "copy")]
    pub task: ToyTask,
    /// Schedules to train, each a preset or τ list. Repeatable.
    #[arg(long = "schedule", default_values = ["gru", "1,1.5"])]
    pub schedules: Vec<String>,
    /// Directory for one learning-curve CSV per schedule.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5000)]
    pub max_steps: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Keep training after reaching 95% held-out accuracy.
    #[arg(long)]
    pub full: bool,
}

fn file_label(schedule: &TimescaleSchedule) -> String {
    if schedule.is_gru() {
        "gru".into()
    } else {
        format!("tau-{}", schedule.to_string().replace(',', "_"))
    }
}

pub fn run(a: &ToyArgs) -> Result<()> {
    let schedules = a
        .schedules
        .iter()
        .map(|s| TimescaleSchedule::parse(s, 2))
        .collect::<Result<Vec<_>>>()?;
    create_dir(&a.out)?;
    let mut finals = Vec::new();
    for schedule in schedules {
        let mut cfg = ToyConfig::new(a.task, schedule.clone());
        cfg.train.max_steps = a.max_steps;
        cfg.seed = a.seed;
        if a.full {
            cfg.target_accuracy = f64::INFINITY;
        }
        let report = run_toy(&cfg)?;
        let mut csv = format!("{},accuracy\n", LogRow::HEADER);
        for p in &report.points {
            csv.push_str(&format!("{},{:.6}\n", p.row.to_csv(), p.accuracy));
        }
        let label = file_label(&schedule);
        write(&a.out.join(format!("{}-{label}.csv", a.task)), &csv)?;
        println!(
            "{} schedule {schedule}: accuracy {:.4} after {} steps",
            a.task, report.accuracy, report.steps
        );
        finals.push((label, report.steps, report.accuracy));
    }
    finals.sort_by_key(|f| f.1);
    let order: Vec<String> = finals.iter().map(|(l, s, _)| format!("{l} ({s})")).collect();
    println!("steps to stop, fewest first: {}", order.join(" < "));
    Ok(())
}
