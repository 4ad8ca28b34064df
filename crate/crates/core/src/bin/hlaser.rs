fn main() {
    std::process::exit(heisenberg_laser::cli::run(std::env::args_os()));
}
