fn main() {
    std::process::exit(relprop::cli::run(std::env::args_os()));
}
