use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use skipsense::cli::{execute, parse_channel_list, Command, ExperimentSpec};

#[derive(Parser)]
#[command(name = "skipsense", version, about = "Opportunistic spectrum access simulator")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the policy named in the config file.
    Run(Common),
    /// Run all five policies on identical traffic.
    Compare(Common),
    /// Compare all policies across a list of channel counts.
    SweepChannels {
        #[command(flatten)]
        common: Common,
        /// Channel counts, e.g. `4..10` or `4,6,8`.
        #[arg(long, value_parser = parse_channels)]
        channels: Option<ChannelList>,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    runs: Option<usize>,
}

#[derive(Clone)]
struct ChannelList(Vec<usize>);

fn parse_channels(s: &str) -> Result<ChannelList, String> {
    parse_channel_list(s).map(ChannelList).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, common, channels) = match cli.command {
        Cmd::Run(c) => (Command::Run, c, None),
        Cmd::Compare(c) => (Command::Compare, c, None),
        Cmd::SweepChannels { common, channels } => (Command::SweepChannels, common, channels.map(|c| c.0)),
    };
    let spec = ExperimentSpec {
        command,
        config: common.config,
        out_dir: common.out,
        seed: common.seed,
        runs: common.runs,
        channels,
    };
    match execute(&spec) {
        Ok(rows) => {
            for r in rows {
                println!(
                    "{:<9} N={:<3} {:<12} sensing={:.4} norm_tp={:.4} collision={:.4}",
                    r.policy.name(),
                    r.n_channels,
                    r.traffic.name(),
                    r.avg_sensing,
                    r.avg_norm_tp,
                    r.avg_collision
                );
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
