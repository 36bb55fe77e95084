use clap::Parser;
use ietidp_cli::{emit_csv, render_table, run, Cli, ResultRow};

fn main() {
    let cli = Cli::parse();
    let result = cli.command.resolve().and_then(|cfg| {
        let rows = run(&cfg, progress)?;
        print!("{}", render_table(&rows));
        if let Some(path) = &cfg.out {
            emit_csv(&rows, path, cfg.timing)?;
        }
        Ok(())
    });
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn progress(row: &ResultRow) {
    let cell = match (row.h, row.round) {
        (Some(r), _) => format!("h=2^-{}", r + 1),
        (_, Some(n)) => format!("round {n}"),
        _ => String::new(),
    };
    eprintln!("p={} {cell}: K={} {} ({:.1}s)", row.p, row.patches, row.status.as_str(), row.wall_time);
}
