fn main() {
    std::process::exit(relmix::cli::run(std::env::args_os()));
}
