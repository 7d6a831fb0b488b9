fn main() {
    std::process::exit(hill_gse::cli::run());
}
