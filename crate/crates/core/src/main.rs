fn main() {
    std::process::exit(gabor_stability::cli::run(std::env::args_os()));
}
