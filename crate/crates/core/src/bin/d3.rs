fn main() {
    std::process::exit(d3_encoding::cli::run(std::env::args_os()));
}
