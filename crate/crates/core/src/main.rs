fn main() {
    std::process::exit(supertok::cli::run(std::env::args_os()));
}
