fn main() {
    std::process::exit(pulsemark::cli::run());
}
