fn main() {
    std::process::exit(lexplain::cli::run(std::env::args_os()));
}
