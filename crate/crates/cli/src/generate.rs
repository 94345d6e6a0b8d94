//! `noisy-draws generate`: write one replication of a simulation design.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use noisy_draws::dgp::{self, DesignData};
use noisy_draws::{DesignKind, DesignSpec};

use crate::failure::{CliResult, Failure};
use crate::output;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Normal,
    SkewNormal,
    Binomial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Layout {
    /// Long panel: unit,period,value.
    Panel,
    /// Estimate level: theta_hat,sigma2.
    Estimates,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum, default_value_t = KindArg::Normal)]
    pub kind: KindArg,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long, default_value_t = 1.0)]
    pub psi2: f64,
    #[arg(long, default_value_t = 5.0)]
    pub sigma2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eta: f64,
    #[arg(long, default_value_t = crate::estimate::DEFAULT_SEED)]
    pub seed: u64,
    /// Replication index within the seed's stream.
    #[arg(long, default_value_t = 0)]
    pub rep: u64,
    #[arg(long, value_enum, default_value_t = Layout::Panel)]
    pub layout: Layout,
    /// Destination; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(args: &GenerateArgs) -> CliResult<()> {
    let kind = match args.kind {
        KindArg::Normal => DesignKind::Normal,
        KindArg::SkewNormal => DesignKind::SkewNormal,
        KindArg::Binomial => DesignKind::Binomial,
    };
    let spec = DesignSpec {
        kind,
        n: args.n,
        m: args.m,
        psi2: args.psi2,
        sigma2: args.sigma2,
        eta: args.eta,
        seed: args.seed,
    };
    let rep = dgp::generate(&spec, args.rep)?;
    let sample = match (&rep.data, args.layout) {
        (DesignData::Panel(panel), Layout::Panel) => {
            return output::write_to(args.out.as_deref(), |w| {
                writeln!(w, "unit,period,value")?;
                for (i, row) in panel.rows().enumerate() {
                    for (t, v) in row.iter().enumerate() {
                        writeln!(w, "{},{},{v}", i + 1, t + 1)?;
                    }
                }
                Ok(())
            });
        }
        (DesignData::Sample(_), Layout::Panel) => {
            return Err(Failure::input("binomial designs only have an estimate-level layout"));
        }
        (DesignData::Panel(panel), Layout::Estimates) => noisy_draws::empirical::reduce_panel(panel)?,
        (DesignData::Sample(s), Layout::Estimates) => s.clone(),
    };
    output::write_to(args.out.as_deref(), |w| {
        writeln!(w, "theta_hat,sigma2")?;
        for (x, v) in sample.draws().iter().zip(sample.noise_var()) {
            writeln!(w, "{x},{v}")?;
        }
        Ok(())
    })
}
