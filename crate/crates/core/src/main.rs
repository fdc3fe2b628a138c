fn main() {
    std::process::exit(vehids::harness::cli::run(std::env::args_os()));
}
