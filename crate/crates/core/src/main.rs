fn main() {
    std::process::exit(hlde::cli::main());
}
