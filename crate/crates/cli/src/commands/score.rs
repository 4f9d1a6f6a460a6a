use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use anyhow::Result;
use btx::bitext::{read_bitext, write_scored};
use btx::margin::{score_corpus, KDivisor, MarginConfig, Neighborhood, DEFAULT_K};
use clap::Args;

use super::{load_emb, maybe_project};
use crate::report::Report;
use crate::Ctx;

#[derive(Clone, Copy, Debug)]
pub struct Hood(pub Neighborhood);

impl FromStr for Hood {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "cross" => Ok(Hood(Neighborhood::CrossLingual)),
            "same" => Ok(Hood(Neighborhood::SameSide)),
            other => Err(format!("expected cross or same, got `{other}`")),
        }
    }
}

impl fmt::Display for Hood {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            Neighborhood::CrossLingual => "cross",
            Neighborhood::SameSide => "same",
        })
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Divisor(pub KDivisor);

impl FromStr for Divisor {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "requested" => Ok(Divisor(KDivisor::Requested)),
            "available" => Ok(Divisor(KDivisor::Available)),
            other => Err(format!("expected requested or available, got `{other}`")),
        }
    }
}

impl fmt::Display for Divisor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self.0 {
            KDivisor::Requested => "requested",
            KDivisor::Available => "available",
        })
    }
}

#[derive(Args, Debug)]
pub struct ScoreArgs {
    #[arg(long)]
    pub bitext: PathBuf,
    #[arg(long)]
    pub src_emb: PathBuf,
    #[arg(long)]
    pub tgt_emb: PathBuf,
    /// Neighbors per side in the margin denominator.
    #[arg(short, long)]
    pub k: Option<usize>,
    /// Projection checkpoint applied before scoring.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// `cross` (neighbors in the other language, default) or `same`.
    #[arg(long)]
    pub neighborhood: Option<Hood>,
    /// `requested` (divide by 2k, default) or `available`.
    #[arg(long)]
    pub k_divisor: Option<Divisor>,
}

pub fn run(ctx: &Ctx, a: ScoreArgs) -> Result<()> {
    let cfg = &ctx.cfg;
    let mc = MarginConfig {
        k: cfg.resolve(a.k, "k", DEFAULT_K)?,
        neighborhood: cfg.resolve(a.neighborhood, "neighborhood", Hood(Neighborhood::CrossLingual))?.0,
        divisor: cfg.resolve(a.k_divisor, "k_divisor", Divisor(KDivisor::Requested))?.0,
    };
    let bitext = read_bitext(&a.bitext)?;
    let (src, tgt) = maybe_project(a.model.as_deref(), load_emb(&a.src_emb)?, load_emb(&a.tgt_emb)?)?;
    let scored = score_corpus(&bitext, &src, &tgt, &mc)?;
    write_scored(ctx.out.join("scored.tsv"), &scored)?;

    let mut rep = Report::new("score");
    rep.add("pairs_in", bitext.len());
    rep.add("pairs_out", scored.len());
    if !scored.is_empty() {
        let mean = scored.iter().map(|p| p.score).sum::<f64>() / scored.len() as f64;
        rep.add("mean_score", format!("{mean:.6}"));
    }
    rep.config("k", mc.k);
    rep.config("neighborhood", Hood(mc.neighborhood));
    rep.config("k_divisor", Divisor(mc.divisor));
    rep.config(
        "model",
        a.model.as_ref().map_or("-".to_string(), |m| m.display().to_string()),
    );
    rep.write(&ctx.out)
}
