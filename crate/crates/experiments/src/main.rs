fn main() {
    std::process::exit(valueprior_experiments::cli::run(std::env::args_os()));
}
