use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{bail, Result};
use btx::bitext::{read_scored, write_lines, Side};
use btx::select::{subsample_indices, total_tokens, OverflowPolicy, STANDARD_BUDGETS};
use clap::Args;

use super::side_name;
use crate::config::parse_list;
use crate::report::Report;
use crate::Ctx;

#[derive(Clone, Copy, Debug)]
pub struct Overflow(pub OverflowPolicy);

impl FromStr for Overflow {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "stop" => Ok(Overflow(OverflowPolicy::Stop)),
            "skip" => Ok(Overflow(OverflowPolicy::Skip)),
            other => Err(format!("expected stop or skip, got `{other}`")),
        }
    }
}

impl fmt::Display for Overflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            OverflowPolicy::Stop => "stop",
            OverflowPolicy::Skip => "skip",
        })
    }
}

#[derive(Args, Debug)]
pub struct SubsampleArgs {
    /// `score<TAB>src<TAB>tgt` file.
    #[arg(long)]
    pub scored: PathBuf,
    /// English-token budget; repeat for several. Defaults to 2M, 3M, 5M, 7M.
    #[arg(long)]
    pub budget: Vec<u64>,
    /// Single budget as a fraction of the corpus's English tokens.
    #[arg(long, conflicts_with = "budget")]
    pub budget_fraction: Option<f64>,
    #[arg(long)]
    pub en_side: Option<Side>,
    /// `stop` at the first pair that overflows (default) or `skip` it.
    #[arg(long)]
    pub overflow: Option<Overflow>,
}

pub fn run(ctx: &Ctx, a: SubsampleArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let en_side = cfg.resolve(a.en_side, "en_side", Side::Src)?;
    let policy = cfg.resolve(a.overflow, "overflow", Overflow(OverflowPolicy::Stop))?;
    let scored = read_scored(&a.scored)?;
    let total = total_tokens(&scored, en_side);

    let fraction = if a.budget.is_empty() {
        cfg.resolve_opt(a.budget_fraction, "budget_fraction")?
    } else {
        None
    };
    let budgets: Vec<u64> = if !a.budget.is_empty() {
        a.budget.clone()
    } else if let Some(f) = fraction {
        if !(0.0..=1.0).contains(&f) {
            bail!("budget_fraction must lie in [0, 1], got {f}");
        }
        vec![(f * total as f64).floor() as u64]
    } else if let Some(list) = cfg.raw("budgets") {
        parse_list(list)?
    } else {
        STANDARD_BUDGETS.to_vec()
    };

    let mut rep = Report::new("subsample");
    rep.add("pairs_in", scored.len());
    rep.add("tokens_in", total);
    for &b in &budgets {
        let picked = subsample_indices(&scored, b, en_side, policy.0);
        let src: Vec<&str> = picked.iter().map(|&i| scored[i].src.as_str()).collect();
        let tgt: Vec<&str> = picked.iter().map(|&i| scored[i].tgt.as_str()).collect();
        write_lines(ctx.out.join(format!("subsample.{b}.src")), &src)?;
        write_lines(ctx.out.join(format!("subsample.{b}.tgt")), &tgt)?;
        let tokens: u64 = picked
            .iter()
            .map(|&i| btx::select::count_tokens_en(scored[i].side(en_side)) as u64)
            .sum();
        rep.add(format!("budget.{b}.pairs"), picked.len());
        rep.add(format!("budget.{b}.tokens"), tokens);
    }
    rep.config(
        "budgets",
        budgets.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
    );
    rep.config(
        "budget_fraction",
        fraction.map_or("-".to_string(), |f| f.to_string()),
    );
    rep.config("en_side", side_name(en_side));
    rep.config("overflow", policy);
    rep.write(&ctx.out)
}
