fn main() {
    std::process::exit(packspectra::cli::run(std::env::args()));
}
