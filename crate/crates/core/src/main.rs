fn main() {
    std::process::exit(cage::cli::run());
}
