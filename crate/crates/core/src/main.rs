fn main() {
    std::process::exit(twisted_riesz::cli::run(std::env::args_os()));
}
