fn main() {
    std::process::exit(dqdsim_cli::run(std::env::args_os()));
}
