use std::io::Write;

fn main() {
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let code = sobolev_gauge_cli::run(std::env::args_os(), &mut out, &mut std::io::stderr().lock());
    if out.flush().is_err() && code == 0 {
        std::process::exit(sobolev_gauge_cli::EXIT_INVALID);
    }
    drop(out);
    std::process::exit(code);
}
