fn main() {
    std::process::exit(spsim_cli::run(std::env::args_os()));
}
