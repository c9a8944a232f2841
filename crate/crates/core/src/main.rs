fn main() {
    std::process::exit(zonetwin::cli::run(std::env::args_os()));
}
