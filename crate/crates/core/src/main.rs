fn main() {
    std::process::exit(mcvalue::cli_io::run(std::env::args_os()));
}
