fn main() {
    std::process::exit(qgevrey::cli::run(std::env::args_os()));
}
