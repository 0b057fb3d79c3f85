use regime_riccati::cli;

fn main() {
    std::process::exit(cli::run());
}
