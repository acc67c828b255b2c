fn main() {
    std::process::exit(dcsim::cli::run_command(std::env::args().skip(1)));
}
