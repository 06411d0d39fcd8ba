use clap::{Args, ValueEnum};

use crate::cells::{finite_diff_check_with, BackwardFault, CellWeights, HiddenTerm};
use crate::error::{Error, Result};
use crate::numkit::Rng;
use crate::seq2seq::{model_finite_diff_check, ModelDims, Seq2SeqModel, TimescaleSchedule, EOS, GO};

const CELL_THRESHOLD: f64 = 1e-6;
const MODEL_THRESHOLD: f64 = 1e-5;
const EPSILON: f64 = 1e-5;
const TAUS: [f64; 5] = [1.0, 1.25, 1.5, 1.7, 2.5];

/// Deliberate backward-pass corruptions used to show the check has teeth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Fault {
    DropUpdateGate,
    DropCandidate,
    DropResetGate,
    DropCarry,
    DropLeak,
    FlipLeak,
}

impl From<Fault> for BackwardFault {
    fn from(f: Fault) -> Self {
        match f {
            Fault::DropUpdateGate => BackwardFault::Drop(HiddenTerm::UpdateGate),
            Fault::DropCandidate => BackwardFault::Drop(HiddenTerm::Candidate),
            Fault::DropResetGate => BackwardFault::Drop(HiddenTerm::ResetGate),
            Fault::DropCarry => BackwardFault::Drop(HiddenTerm::Carry),
            Fault::DropLeak => BackwardFault::Drop(HiddenTerm::Leak),
            Fault::FlipLeak => BackwardFault::FlipLeakSign,
        }
    }
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, value_enum, hide = true)]
    pub inject_fault: Option<Fault>,
}

pub fn run(a: &GradcheckArgs) -> Result<()> {
    if a.trials == 0 {
        return Err(Error::arg("trials must be >= 1"));
    }
    let fault = a.inject_fault.map(BackwardFault::from);
    let mut failed = Vec::new();
    for t in 0..a.trials {
        let mut rng = Rng::new(a.seed.wrapping_add(t as u64));
        let input = rng.range_inclusive(3, 8);
        let hidden = rng.range_inclusive(3, 8);
        // a faulted leak term is invisible at τ = 1, so faults use τ > 1
        let tau = match fault {
            Some(_) => TAUS[1 + t % (TAUS.len() - 1)],
            None => TAUS[t % TAUS.len()],
        };
        let w = CellWeights::init(input, hidden, &mut rng);
        let x = rng.uniform_vec(input, -1.0, 1.0);
        let h = rng.uniform_vec(hidden, -0.9, 0.9);
        let err = finite_diff_check_with(&w, &x, &h, tau, EPSILON, fault)?;
        let ok = err <= CELL_THRESHOLD;
        println!(
            "cell trial {t}: input={input} hidden={hidden} tau={tau} max_rel_err={err:.3e} {}",
            if ok { "ok" } else { "FAIL" }
        );
        if !ok {
            failed.push(format!("cell trial {t} (input={input}, hidden={hidden}, tau={tau})"));
        }
    }

    let dims = ModelDims {
        vocab_size: 6,
        embed_dim: 4,
        hidden_dim: 5,
        layers: 2,
    };
    let schedule = TimescaleSchedule::new(vec![1.0, 1.5])?;
    let model = Seq2SeqModel::new(dims, schedule, &mut Rng::new(a.seed))?;
    let err = model_finite_diff_check(&model, &[4, 5, 3, 4], &[GO, 5, 4, 4, EOS], EPSILON)?;
    let ok = err <= MODEL_THRESHOLD;
    println!(
        "model: vocab=6 embed=4 hidden=5 layers=2 taus=1,1.5 max_rel_err={err:.3e} {}",
        if ok { "ok" } else { "FAIL" }
    );
    if !ok {
        failed.push("end-to-end model".into());
    }
    if failed.is_empty() {
        println!("all checks passed");
        Ok(())
    } else {
        Err(Error::Verification(format!("gradient check failed: {}", failed.join("; "))))
    }
}
