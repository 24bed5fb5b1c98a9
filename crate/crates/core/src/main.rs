fn main() {
    std::process::exit(noisy_grover::cli::run(std::env::args_os()));
}
