fn main() {
    std::process::exit(edde_cli::run());
}
