fn main() {
    std::process::exit(hjb_portfolio::cli::run(std::env::args_os()));
}
