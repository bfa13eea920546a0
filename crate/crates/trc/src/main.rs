fn main() {
    std::process::exit(trc::cli::main());
}
