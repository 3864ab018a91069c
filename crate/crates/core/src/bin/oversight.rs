fn main() {
    std::process::exit(oversight::cli::parse_and_run(std::env::args()));
}
