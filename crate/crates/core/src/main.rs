fn main() {
    std::process::exit(vmma::cli::run(std::env::args_os()));
}
