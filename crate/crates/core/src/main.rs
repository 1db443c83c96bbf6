fn main() {
    std::process::exit(prepsense::cli::run(std::env::args_os()));
}
