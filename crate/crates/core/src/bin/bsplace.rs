fn main() {
    std::process::exit(bsplace::cli::main());
}
